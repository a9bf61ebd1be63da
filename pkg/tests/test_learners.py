import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssl_rate_lab.core import TWO_POINT_CLASS, AdmissibleFamily, GridSpec, HypothesisClass, TwoPointParams
from ssl_rate_lab.exact import sup_over_family
from ssl_rate_lab.learners import (
    H01_INDEX,
    H10_INDEX,
    ConstantLearner,
    DiscardLearner,
    DomainSizeError,
    ERMLearner,
    MajorityCountLearner,
    MarginalInformedLearner,
    ReducedLearner,
    SampleSizeError,
    SampleStats,
    erm_learner,
    forget_labels_reduction,
    majority_count_learner,
    make_learner,
    marginal_informed_learner,
)

counts4 = st.lists(st.integers(0, 20), min_size=4, max_size=4)
counts2 = st.lists(st.integers(0, 20), min_size=2, max_size=2)


def stats(cells, unl=(0, 0)):
    return SampleStats(np.array(cells).reshape(2, 2), np.array(unl))


class TestSampleStats:
    def test_sizes(self):
        s = stats([1, 2, 3, 4], (5, 6))
        assert (s.ell, s.u) == (10, 11)

    def test_from_sample(self):
        s = SampleStats.from_sample([0, 0, 1], [1, 0, 1], [1, 1])
        np.testing.assert_array_equal(s.labeled_cells, [[1, 1], [0, 1]])
        np.testing.assert_array_equal(s.unlabeled_counts, [0, 2])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            stats([1, -1, 0, 0])


class TestMajority:
    def test_strict_majority_ignores_labels(self):
        maj = majority_count_learner()
        for cells in ([0, 0, 0, 0], [0, 0, 5, 0]):
            got = maj.decide_stats(stats(cells, (3 + sum(cells[2:]), 1)))
            assert got == H10_INDEX

    def test_tie_falls_back_to_erm(self):
        maj = majority_count_learner()
        # two points each; labels agree with h01 (x1 -> 0, x2 -> 1)
        assert maj.decide_stats(stats([2, 0, 0, 2])) == H01_INDEX
        assert maj.decide_stats(stats([0, 2, 2, 0])) == H10_INDEX

    def test_double_tie_gives_h10(self):
        assert majority_count_learner().decide_stats(stats([1, 0, 1, 0])) == H10_INDEX
        assert majority_count_learner().decide_stats(stats([0, 0, 0, 0])) == H10_INDEX

    def test_rejects_other_domains(self):
        with pytest.raises(DomainSizeError):
            MajorityCountLearner().decide(np.zeros((3, 2)), np.zeros(3))

    @settings(max_examples=200)
    @given(counts4, counts2, st.integers(0, 10))
    def test_depends_only_on_count_difference_and_labels(self, cells, unl, shift):
        maj = MajorityCountLearner()
        base = maj.decide_stats(stats(cells, unl))
        shifted = maj.decide_stats(stats(cells, (unl[0] + shift, unl[1] + shift)))
        assert base == shifted

    def test_vectorized(self):
        lab = np.array([[[0, 0], [0, 0]], [[2, 0], [0, 2]]])
        unl = np.array([[3, 1], [0, 0]])
        np.testing.assert_array_equal(MajorityCountLearner().decide(lab, unl), [H10_INDEX, H01_INDEX])


class TestERM:
    def test_consistent_hypothesis(self):
        assert erm_learner().decide_stats(stats([0, 3, 2, 0])) == H10_INDEX

    def test_empty_sample_gives_index_zero(self):
        assert erm_learner().decide_stats(stats([0, 0, 0, 0])) == 0

    @given(counts4, counts2, counts2)
    def test_ignores_unlabeled(self, cells, u1, u2):
        erm = ERMLearner()
        assert erm.decide_stats(stats(cells, u1)) == erm.decide_stats(stats(cells, u2))

    def test_general_class(self):
        hc = HypothesisClass(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
        lab = np.array([[0, 0], [3, 0], [0, 2]])
        assert ERMLearner(hc).decide(lab) == 2

    def test_rate_bounded_by_c_over_sqrt_ell(self):
        fam = AdmissibleFamily("pi0")
        g = GridSpec(n_alpha=12, n_beta=6)
        scaled = [sup_over_family(ERMLearner(), fam, ell, 0, g).worst_risk * math.sqrt(ell)
                  for ell in (4, 8, 16, 32, 64, 128)]
        # a 1/sqrt(ell) rate: the scaled sup stays within a constant band
        assert max(scaled) / min(scaled) < 1.5
        assert max(scaled) < 1.0


class TestMarginalInformed:
    def test_picks_bayes(self):
        d = TwoPointParams(0.2, 0.1, +1).materialize()
        lr = marginal_informed_learner()
        assert lr.choice(d.marginal) == H10_INDEX
        assert lr.choice(TwoPointParams(0.2, 0.1, -1).materialize().marginal) == H01_INDEX

    def test_tiny_beta(self):
        d = TwoPointParams(0.2, 1e-12, -1).materialize()
        assert marginal_informed_learner(d.marginal).decide(np.zeros((2, 2))) == H01_INDEX

    def test_needs_marginal(self):
        with pytest.raises(ValueError):
            MarginalInformedLearner().decide(np.zeros((2, 2)))


class TestReduction:
    def test_zero_budget_is_identity(self):
        maj = MajorityCountLearner()
        assert forget_labels_reduction(maj, 0) is maj

    def test_strips_last_labels(self):
        red = forget_labels_reduction(MajorityCountLearner(), 2)
        # first two labeled points tie on x, the last two (now unlabeled) both land on x2
        xs, ys = [0, 1, 1, 1], [0, 1, 0, 0]
        assert red.fit(xs, ys) == MajorityCountLearner().fit([0, 1], [0, 1], [1, 1]) == H01_INDEX

    def test_too_few_points(self):
        with pytest.raises(SampleSizeError):
            forget_labels_reduction(MajorityCountLearner(), 3).fit([0, 1], [1, 1])

    def test_order_dependent_decide_refused(self):
        with pytest.raises(TypeError):
            ReducedLearner(MajorityCountLearner(), 2).decide(np.zeros((2, 2)))

    def test_discard(self):
        d = DiscardLearner(ERMLearner(), 2)
        assert d.fit([0, 0, 1, 1], [1, 1, 1, 1]) == H10_INDEX
        with pytest.raises(SampleSizeError):
            d.fit([0], [1])

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=0, max_size=12),
           st.lists(st.integers(0, 1), max_size=8))
    def test_fit_matches_decide(self, labeled, xu):
        xs = [x for x, _ in labeled]
        ys = [y for _, y in labeled]
        s = SampleStats.from_sample(xs, ys, xu)
        for lr in (MajorityCountLearner(), ERMLearner()):
            assert lr.fit(xs, ys, xu) == lr.decide_stats(s)


class TestMakeLearner:
    @pytest.mark.parametrize("name,cls", [
        ("majority", MajorityCountLearner), ("erm", ERMLearner), ("plugin-marginal", MarginalInformedLearner),
        ("constant:1", ConstantLearner), ("reduced:majority:4", ReducedLearner), ("drop:erm:2", DiscardLearner),
    ])
    def test_names(self, name, cls):
        lr = make_learner(name)
        assert isinstance(lr, cls)
        assert lr.name == name

    def test_reduced_zero_is_inner(self):
        assert isinstance(make_learner("reduced:erm:0"), ERMLearner)

    @pytest.mark.parametrize("name", ["", "bogus", "constant:5", "reduced:majority:x", "drop:nope:1"])
    def test_unknown(self, name):
        with pytest.raises(ValueError):
            make_learner(name)

    def test_flags(self):
        assert MajorityCountLearner.uses_unlabeled and not ERMLearner.uses_unlabeled
        assert MarginalInformedLearner.uses_marginal
        assert TWO_POINT_CLASS is ERMLearner().hclass
