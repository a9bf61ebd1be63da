import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import bayes_error_by_sequences, random_distribution, risk_by_sequences
from ssl_rate_lab.budgets import parse_budget
from ssl_rate_lab.core import (
    AdmissibleFamily,
    FiniteLabeledDistribution,
    GridSpec,
    HypothesisClass,
    RichFamilyParams,
    TwoPointParams,
    materialize_family,
    two_point_distribution,
)
from ssl_rate_lab.bounds import hoeffding_majority_upper, pi_c_sl_floor, rich_alpha, rich_family_floor
from ssl_rate_lab.exact import (
    EnumerationBudgetError,
    bayes_test_error,
    bayes_test_minimax_lower_bound,
    enumeration_size,
    exact_expected_excess_risk,
    family_bayes_lower_bound,
    mc_expected_excess_risk,
    menu_curve,
    ssl_vs_sl_ratio,
    sup_over_family,
    superlinear_budget_check,
)
from ssl_rate_lab.learners import (
    ConstantLearner,
    DiscardLearner,
    ERMLearner,
    MajorityCountLearner,
    MarginalInformedLearner,
    ReducedLearner,
    make_learner,
)
from ssl_rate_lab.rates import fit_rate

bias = st.floats(0.01, 0.49)
sign = st.sampled_from([1, -1])


class TestExactRisk:
    @pytest.mark.parametrize("method", ["auto", "enumerate"])
    def test_single_labeled_point(self, method):
        d = two_point_distribution(0.1, 0.2, +1)
        # 2 alpha (1/2 - beta) = 0.2 * 0.3
        got = exact_expected_excess_risk(MajorityCountLearner(), d, 1, 0, method=method)
        assert got == pytest.approx(0.06, abs=1e-12)

    def test_constant_bayes_is_free(self):
        d = two_point_distribution(0.1, 0.2, +1)
        assert exact_expected_excess_risk(ConstantLearner(1), d, 7, 3) == 0.0
        assert exact_expected_excess_risk(ConstantLearner(0), d, 7, 3) == pytest.approx(0.2)

    @settings(max_examples=40, deadline=None)
    @given(bias, bias, sign, st.integers(0, 4), st.integers(0, 3))
    def test_matches_raw_sequences(self, a, b, s, ell, u):
        d = TwoPointParams(a, b, s).materialize()
        for lr in (MajorityCountLearner(), ERMLearner()):
            assert exact_expected_excess_risk(lr, d, ell, u) == pytest.approx(
                risk_by_sequences(lr, d, ell, u), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(bias, bias, sign, st.integers(0, 30), st.integers(0, 30))
    def test_closed_form_matches_enumeration(self, a, b, s, ell, u):
        d = TwoPointParams(a, b, s).materialize()
        for lr in (MajorityCountLearner(), ERMLearner()):
            closed = exact_expected_excess_risk(lr, d, ell, u, method="closed")
            enum = exact_expected_excess_risk(lr, d, ell, u, method="enumerate")
            assert closed == pytest.approx(enum, abs=1e-12)

    def test_general_distributions_by_sequences(self):
        rng = np.random.default_rng(7)
        hc = HypothesisClass(((0, 1, 1), (1, 0, 0), (1, 1, 0)))
        for _ in range(5):
            d = FiniteLabeledDistribution(random_distribution(rng, 3))
            lr = ERMLearner(hc)
            assert exact_expected_excess_risk(lr, d, 3, 0) == pytest.approx(risk_by_sequences(lr, d, 3, 0), abs=1e-12)

    def test_wrappers_by_sequences(self):
        d = two_point_distribution(0.2, 0.1, -1)
        for lr in (ReducedLearner(MajorityCountLearner(), 2), DiscardLearner(ERMLearner(), 1)):
            assert exact_expected_excess_risk(lr, d, 4, 0) == pytest.approx(risk_by_sequences(lr, d, 4, 0), abs=1e-12)

    def test_reduced_matches_ssl(self):
        d = two_point_distribution(0.15, 0.05, +1)
        red = exact_expected_excess_risk(ReducedLearner(MajorityCountLearner(), 5), d, 9, 0)
        ssl = exact_expected_excess_risk(MajorityCountLearner(), d, 4, 5)
        assert red == pytest.approx(ssl, abs=1e-12)

    def test_reduced_refuses_unlabeled(self):
        with pytest.raises(ValueError):
            exact_expected_excess_risk(ReducedLearner(MajorityCountLearner(), 1), two_point_distribution(0.1, 0.1), 3, 2)

    def test_no_closed_form(self):
        d = FiniteLabeledDistribution([[0.1, 0.2], [0.3, 0.4]])
        with pytest.raises(ValueError):
            exact_expected_excess_risk(MajorityCountLearner(), d, 3, 3, method="closed")

    def test_node_cap(self):
        d = FiniteLabeledDistribution([[0.1, 0.2], [0.3, 0.4]])
        assert enumeration_size(2, 50, 50) > 1000
        with pytest.raises(EnumerationBudgetError):
            exact_expected_excess_risk(MajorityCountLearner(), d, 50, 50, node_cap=1000)

    def test_majority_below_hoeffding(self):
        for ell in (4, 16, 64):
            for u in (0, ell, ell * ell):
                a = b = 1 / (2 * math.sqrt(ell + u))
                d = two_point_distribution(a, b, -1)
                assert exact_expected_excess_risk(MajorityCountLearner(), d, ell, u) <= hoeffding_majority_upper(a, b, ell, u)

    def test_large_n_stays_finite(self):
        d = two_point_distribution(0.01, 0.001, +1)
        r = exact_expected_excess_risk(MajorityCountLearner(), d, 10**4, 10**8)
        assert 0 <= r < 1e-6


class TestMonteCarlo:
    def test_deterministic_for_seed(self):
        d = two_point_distribution(0.1, 0.2, +1)
        a = mc_expected_excess_risk(MajorityCountLearner(), d, 5, 5, 1, seed=3)
        b = mc_expected_excess_risk(MajorityCountLearner(), d, 5, 5, 1, seed=3)
        assert a == b

    def test_bayes_learner_zero(self):
        d = two_point_distribution(0.1, 0.2, -1)
        assert mc_expected_excess_risk(ConstantLearner(0), d, 5, 5, 100, seed=0)[0] == 0.0

    @pytest.mark.parametrize("learner", ["majority", "erm", "reduced:majority:3", "drop:erm:2"])
    def test_within_half_width(self, learner):
        lr = make_learner(learner)
        d = two_point_distribution(0.2, 0.05, +1)
        u = 0 if isinstance(lr, ReducedLearner) else 4
        exact = exact_expected_excess_risk(lr, d, 6, u)
        est, hw = mc_expected_excess_risk(lr, d, 6, u, 20000, seed=11)
        assert abs(est - exact) <= hw

    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError):
            mc_expected_excess_risk(ERMLearner(), two_point_distribution(0.1, 0.1), 1, 0, 0, 0)


class TestSup:
    def test_singleton(self):
        d = two_point_distribution(0.1, 0.2, +1)
        res = sup_over_family(ERMLearner(), [d], 5, 0)
        assert res.worst_risk == exact_expected_excess_risk(ERMLearner(), d, 5, 0)

    def test_dominates_members(self):
        fam = AdmissibleFamily("pi1")
        res = sup_over_family(MajorityCountLearner(), fam, 8, 64, GridSpec(n_alpha=10))
        assert res.worst_risk == max(res.risks)
        assert all(r <= res.worst_risk for r in res.risks)
        assert res.worst_params.alpha == res.worst_params.beta

    def test_parallel_matches_serial(self):
        fam = AdmissibleFamily("pi0")
        g = GridSpec(n_alpha=5, n_beta=5)
        a = sup_over_family(MajorityCountLearner(), fam, 6, 6, g, jobs=1)
        b = sup_over_family(MajorityCountLearner(), fam, 6, 6, g, jobs=2)
        assert a.risks == b.risks and a.worst_member is not None

    def test_erm_rate_on_pi0(self):
        fam = AdmissibleFamily("pi0")
        g = GridSpec(n_alpha=20, n_beta=3)
        # sqrt(ell) * sup settles slowly from above, so the grid starts at 16
        pts = [(ell, sup_over_family(ERMLearner(), fam, ell, 0, g).worst_risk)
               for ell in (16, 32, 64, 128, 256, 512, 1024)]
        assert fit_rate(pts).fitted_slope == pytest.approx(-0.5, abs=0.1)

    def test_empty_member_list(self):
        with pytest.raises(ValueError):
            sup_over_family(ERMLearner(), [], 3)


class TestBayesTest:
    def test_identical_pair(self):
        d = two_point_distribution(0.1, 0.2, +1)
        res = bayes_test_minimax_lower_bound(d, d, 6, 4)
        assert res.error == pytest.approx(0.5, abs=1e-12)
        assert res.bound == pytest.approx(0.1, abs=1e-12)

    def test_no_data(self):
        p, q = two_point_distribution(0.1, 0.2, +1), two_point_distribution(0.1, 0.2, -1)
        assert bayes_test_error(p, q, 0, 0)[0] == pytest.approx(0.5, abs=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(bias, bias, bias, bias, sign, sign, st.integers(0, 3), st.integers(0, 2))
    def test_coin_pair_matches_sequences(self, a0, b0, a1, b1, s0, s1, ell, u):
        p = TwoPointParams(a0, b0, s0).materialize()
        q = TwoPointParams(a1, b1, s1).materialize()
        err, how = bayes_test_error(p, q, ell, u)
        assert how == "coin-pair"
        assert err == pytest.approx(bayes_error_by_sequences(p, q, ell, u), abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(bias, bias, sign, st.integers(0, 40), st.integers(0, 40))
    def test_coin_pair_matches_enumeration(self, a, b, s, ell, u):
        p = TwoPointParams(a, b, s).materialize()
        q = p.params.partner().materialize()
        fast = bayes_test_error(p, q, ell, u)[0]
        enum = bayes_test_error(p, q, ell, u, method="enumerate")[0]
        assert fast == pytest.approx(enum, abs=1e-12)

    @pytest.mark.parametrize("c,cp,a,ell", [(0.5, 0.4, 0.1, 3), (1.0, 0.9, 0.3, 2), (0.3, 0.05, 0.2, 4)])
    def test_rich_matches_sequences(self, c, cp, a, ell):
        p, q = RichFamilyParams(c, cp, a).materialize()
        err, how = bayes_test_error(p, q, ell, 0)
        assert how == "rich"
        assert err == pytest.approx(bayes_error_by_sequences(p, q, ell, 0), abs=1e-12)

    @pytest.mark.parametrize("ell", [4, 16, 64])
    def test_bound_below_learner_sups(self, ell):
        fam = AdmissibleFamily("pi1")
        g = GridSpec(n_alpha=12)
        for u in (0, ell):
            low = family_bayes_lower_bound(fam, ell, u, g).bound
            for lr in (MajorityCountLearner(), ERMLearner(), ConstantLearner(0)):
                assert low <= sup_over_family(lr, fam, ell, u, g).worst_risk + 1e-15

    @pytest.mark.parametrize("ell", [4, 16, 64, 256])
    def test_rich_floor_holds(self, ell):
        c, cp = 0.5, 0.4
        a = rich_alpha(c, ell)
        p, q = RichFamilyParams(c, cp, a).materialize()
        res = bayes_test_minimax_lower_bound(p, q, ell, 0, p.params.hclass)
        assert res.bound >= rich_family_floor(c, cp, ell)

    @pytest.mark.parametrize("c", [0.05, 0.1, 0.2])
    def test_pic_floor_constant_multiple(self, c):
        # the exact bound tracks the stated floor up to a bounded constant
        ratios = []
        for ell in (2, 4, 8):
            p, q = two_point_distribution(c, c, +1), two_point_distribution(c, c, -1)
            ratios.append(bayes_test_minimax_lower_bound(p, q, ell, 0).bound / pi_c_sl_floor(c, ell))
        assert min(ratios) > 0.5

    def test_explicit_single_member_has_no_pairs(self):
        fam = AdmissibleFamily("explicit", members=(two_point_distribution(0.1, 0.1),))
        assert family_bayes_lower_bound(fam, 4).bound == 0.0


class TestRatioAndBudgets:
    def test_pi1_square_ratio_vanishes(self):
        rep = ssl_vs_sl_ratio(AdmissibleFamily("pi1"), MajorityCountLearner(), ERMLearner(), parse_budget("square"),
                              [4, 8, 16, 32, 64], GridSpec(n_alpha=12))
        assert not rep.degenerate
        assert rep.series.fitted_slope < -0.3
        assert all(p.sl_lower <= p.sl_upper for p in rep.points)

    def test_zero_budget_ratio_bounded_below(self):
        rep = ssl_vs_sl_ratio(AdmissibleFamily("pi1"), ERMLearner(), ERMLearner(), parse_budget("zero"),
                              [4, 8, 16, 32], GridSpec(n_alpha=12))
        assert all(p.ratio >= 1.0 for p in rep.points)

    def test_degenerate_denominator(self):
        fam = AdmissibleFamily("explicit", members=(two_point_distribution(0.1, 0.1),))
        rep = ssl_vs_sl_ratio(fam, MajorityCountLearner(), ERMLearner(), parse_budget("zero"), [2, 4, 8])
        assert rep.degenerate == [2, 4, 8]
        assert rep.series is None

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            ssl_vs_sl_ratio(AdmissibleFamily("pi1"), ERMLearner(), ERMLearner(), parse_budget("zero"), [8, 4])

    @pytest.mark.parametrize("budget,verdict", [
        ("zero", "impossible"), ("linear:2", "impossible"), ("square", "possible"),
        ("quartic", "possible"), ("exp", "possible"),
    ])
    def test_superlinear_verdicts(self, budget, verdict):
        v = superlinear_budget_check(0.5, parse_budget(budget))
        assert v.verdict == verdict

    def test_square_ratio_slope(self):
        v = superlinear_budget_check(0.5, parse_budget("square"))
        assert v.tail_slope == pytest.approx(-0.5, abs=0.01)
        assert np.all(np.diff(v.ratios) < 0)

    def test_exp_cap_note(self):
        assert "ignored" in superlinear_budget_check(1.0, parse_budget("exp:1000")).note


@pytest.fixture(scope="module")
def curve():
    members = materialize_family(AdmissibleFamily("pi1"), GridSpec(n_alpha=8))
    return menu_curve([ERMLearner(), ConstantLearner(0)], members, range(0, 25))


class TestMenu:
    def test_monotone(self, curve):
        risks = [curve[e][0] for e in sorted(curve)]
        assert all(b <= a for a, b in zip(risks, risks[1:]))

    def test_names(self, curve):
        assert all(isinstance(name, str) and name for _, name in curve.values())

    def test_reduction_bounds_ssl(self):
        # the forget-labels SL learner matches the SSL learner, so the SL menu is no worse
        members = materialize_family(AdmissibleFamily("pi1"), GridSpec(n_alpha=8))
        ell, u = 6, 6
        sl = max(exact_expected_excess_risk(ReducedLearner(MajorityCountLearner(), u), m, ell + u) for m in members)
        ssl = max(exact_expected_excess_risk(MajorityCountLearner(), m, ell, u) for m in members)
        assert sl == pytest.approx(ssl, abs=1e-12)


class TestMarginalLearner:
    def test_knows_the_answer(self):
        for m in materialize_family(AdmissibleFamily("pi0"), GridSpec(n_alpha=4, n_beta=4)):
            assert exact_expected_excess_risk(MarginalInformedLearner(), m, 3, 0) == 0.0
