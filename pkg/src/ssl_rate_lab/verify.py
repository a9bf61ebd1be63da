"""Acceptance checks, one function per criterion, each returning a CheckResult.

Run them all with ``run_checks()`` or from the command line with
``ssl-rate-lab verify [--only ID ...]``.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds
from .budgets import UnlabeledBudget
from .core import (
    AdmissibleFamily,
    FamilyError,
    FiniteLabeledDistribution,
    GridSpec,
    RichFamilyParams,
    TwoPointParams,
    materialize_family,
    two_point_distribution,
)
from .exact import (
    bayes_test_minimax_lower_bound,
    exact_expected_excess_risk,
    family_bayes_lower_bound,
    mc_expected_excess_risk,
    sup_over_family,
)
from .learners import (
    ConstantLearner,
    DiscardLearner,
    ERMLearner,
    MajorityCountLearner,
    MarginalInformedLearner,
    forget_labels_reduction,
)
from .mixture import (
    THRESHOLD_SWEEP,
    FiniteComponent,
    MixtureProblem,
    ThresholdComponent,
    ThresholdProblem,
    mixture_exact_risk,
    mixture_sup,
)
from .rates import fit_rate

MASTER_SEED = 20240611
POW2 = (4, 8, 16, 32, 64)


@dataclass
class CheckResult:
    number: int
    check_id: str
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2} {self.check_id}: {self.title} | {self.detail} ({self.seconds:.1f}s)"


def _rng(tag: int):
    return np.random.default_rng(np.random.SeedSequence([MASTER_SEED, tag]))


def _random_two_point(rng) -> TwoPointParams:
    a, b = rng.uniform(0.005, 0.495, size=2)
    return TwoPointParams(float(a), float(b), int(rng.choice([1, -1])))


# -- 1 ---------------------------------------------------------------------------


def check_reduction_identity(n_dists: int = 20, tol: float = 1e-12):
    """Majority at (ell, u) equals its label-forgetting reduction at (ell + u, 0)."""
    rng = _rng(1)
    maj = MajorityCountLearner()
    worst = 0.0
    for _ in range(n_dists):
        dist = _random_two_point(rng).materialize()
        for ell in (2, 4, 8):
            for u in (0, 2, 8):
                ssl = exact_expected_excess_risk(maj, dist, ell, u)
                sl = exact_expected_excess_risk(forget_labels_reduction(maj, u), dist, ell + u, 0)
                worst = max(worst, abs(ssl - sl))
    return worst <= tol, f"max |diff| = {worst:.2e} over {n_dists * 9} cases (tol {tol:g})"


# -- 2 ---------------------------------------------------------------------------


def _adversarial_pair(ell, u):
    a, b = 1 / (8 * math.sqrt(ell)), 1 / (8 * math.sqrt(ell + u))
    return two_point_distribution(a, b, +1), two_point_distribution(a, b, -1)


def check_le_cam_floor(ells=range(4, 65)):
    """Bayes test error >= 1/4 and bound >= 1/(16 sqrt(ell)) at the adversarial pair."""
    min_err, min_ratio = 1.0, math.inf
    for ell in ells:
        for u in (0, ell, ell * ell):
            r = bayes_test_minimax_lower_bound(*_adversarial_pair(ell, u), ell, u)
            min_err = min(min_err, r.error)
            min_ratio = min(min_ratio, r.bound * 16 * math.sqrt(ell))
    ok = min_err >= 0.25 and min_ratio >= 1 - 1e-9
    return ok, f"min error = {min_err:.6f}, min bound x 16 sqrt(ell) = {min_ratio:.6f}"


# -- 3 ---------------------------------------------------------------------------


def check_hoeffding_sandwich(ells=range(4, 65), grid: GridSpec = GridSpec(n_alpha=24)):
    """Exact majority risk <= 2 alpha exp(-2 beta^2 (ell + u)) on the family grid."""
    maj = MajorityCountLearner()
    worst = -math.inf
    for ell in ells:
        for budget in (UnlabeledBudget("zero"), UnlabeledBudget("square")):
            u = budget(ell)
            g = GridSpec(**{**grid.__dict__, "ell": ell, "u": u})
            for dist in materialize_family(AdmissibleFamily("pi1"), g):
                p = dist.params
                gap = exact_expected_excess_risk(maj, dist, ell, u) - bounds.hoeffding_majority_upper(
                    p.alpha, p.beta, ell, u)
                worst = max(worst, gap)
    formula_err = 0.0
    for n in range(4, 65 + 64 * 64):
        a = 1 / (2 * math.sqrt(n))
        formula_err = max(formula_err, abs(bounds.hoeffding_majority_upper(a, a, n, 0) - math.exp(-0.5) / math.sqrt(n)))
    ok = worst <= 0 and formula_err <= 1e-12
    return ok, f"max(risk - bound) = {worst:.3e}, analytic sup mismatch = {formula_err:.1e}"


# -- 4 ---------------------------------------------------------------------------


def check_example_rates(ells=POW2, grid: GridSpec = GridSpec()):
    """Worst-case majority risk at u = ell^2 falls like 1/ell; the SL test bound like 1/sqrt(ell)."""
    fam = AdmissibleFamily("pi1")
    maj = MajorityCountLearner()
    ssl = fit_rate([(ell, sup_over_family(maj, fam, ell, ell * ell, grid).worst_risk) for ell in ells])
    sl = fit_rate([(ell, family_bayes_lower_bound(fam, ell, 0, grid).bound) for ell in ells])
    ok = abs(ssl.fitted_slope + 1.0) <= 0.1 and abs(sl.fitted_slope + 0.5) <= 0.05
    return ok, f"SSL slope = {ssl.fitted_slope:.3f} (-1 +/- 0.1), SL bound slope = {sl.fitted_slope:.3f} (-0.5 +/- 0.05)"


# -- 5 ---------------------------------------------------------------------------


NO_HELP_BUDGETS = (UnlabeledBudget("zero"), UnlabeledBudget("linear", 1.0), UnlabeledBudget("square"),
                   UnlabeledBudget("quartic"), UnlabeledBudget("exponential"))


def check_no_help(ells=POW2, budgets=NO_HELP_BUDGETS):
    """The SL-scale floor 1/(16 sqrt(ell)) survives every unlabeled budget on the unconstrained family."""
    worst = math.inf
    for budget in budgets:
        for ell in ells:
            u = budget(ell)
            r = bayes_test_minimax_lower_bound(*_adversarial_pair(ell, u), ell, u)
            worst = min(worst, r.bound * 16 * math.sqrt(ell))
    labels = ",".join(b.label for b in budgets)
    return worst >= 1.0, f"min bound x 16 sqrt(ell) = {worst:.6f} over budgets {labels}"


# -- 6 ---------------------------------------------------------------------------


def check_piell_separation(ells=range(4, 25), grid: GridSpec = GridSpec(n_alpha=24, n_beta=24)):
    """Majority risk over the ell-dependent family <= e^{-2 ell}; in-family SL test bound >= 1/(16 sqrt(ell))."""
    maj = MajorityCountLearner()
    ssl_worst, sl_worst, empty = 0.0, math.inf, []
    outside = math.inf
    for ell in ells:
        fam = AdmissibleFamily("piell", ell=ell)
        g = GridSpec(**{**grid.__dict__, "ell": ell, "u": ell * ell})
        try:
            members = materialize_family(fam, g)
        except FamilyError:
            # nothing to certify the SL floor with at this ell
            empty.append(ell)
            continue
        ssl = max(exact_expected_excess_risk(maj, m, ell, ell * ell) for m in members)
        ssl_worst = max(ssl_worst, ssl / math.exp(-2 * ell))
        sl = family_bayes_lower_bound(fam, ell, 0, grid).bound
        sl_worst = min(sl_worst, sl * 16 * math.sqrt(ell))
        pair = bayes_test_minimax_lower_bound(*_adversarial_pair(ell, 0), ell, 0)
        outside = min(outside, pair.bound * 16 * math.sqrt(ell))
    ssl_ok = ssl_worst <= 1 + 1e-9
    sl_ok = sl_worst >= 1.0 and not empty
    detail = (f"SSL max risk / e^-2ell = {ssl_worst:.3e} ({'ok' if ssl_ok else 'fail'}); "
              f"in-family SL bound x 16 sqrt(ell) min = {sl_worst:.4f} ({'ok' if sl_ok else 'fail'}), "
              f"family empty at ell in {empty}; "
              f"out-of-family pair at beta = 1/(8 sqrt ell) gives {outside:.4f}")
    return ssl_ok and sl_ok, detail


# -- 7 ---------------------------------------------------------------------------


def _brute_kl(p_cells, q_cells, p_marg, q_marg, ell, u):
    """Sum of p log(p/q) over every raw (ordered) sample of ell labeled and u unlabeled points."""
    p_cells, q_cells = p_cells.ravel(), q_cells.ravel()
    total = []
    for lab in itertools.product(range(len(p_cells)), repeat=ell):
        pl = math.prod(p_cells[i] for i in lab)
        ql = math.prod(q_cells[i] for i in lab)
        for unl in itertools.product(range(len(p_marg)), repeat=u):
            p = pl * math.prod(p_marg[i] for i in unl)
            q = ql * math.prod(q_marg[i] for i in unl)
            if p > 0:
                total.append(p * math.log(p / q))
    return math.fsum(total)


def check_kl_oracle(n_draws: int = 50, tol: float = 1e-10):
    """Closed-form KL values match the brute-force sum over raw samples."""
    rng = _rng(7)
    worst = 0.0
    for _ in range(n_draws):
        ell, u = int(rng.integers(0, 5)), int(rng.integers(0, 5))
        a, b = rng.uniform(0.01, 0.49, size=2)
        p, q = two_point_distribution(a, b, +1), two_point_distribution(a, b, -1)
        brute = _brute_kl(p.cells, q.cells, p.marginal, q.marginal, ell, u)
        worst = max(worst, abs(brute - bounds.kl_two_point(a, b, ell, u)))
        c = float(rng.uniform(0.05, 1.0))
        cp = float(rng.uniform(0, c))
        if abs(cp - c / 2) < 1e-6:
            cp = c / 4
        params = RichFamilyParams(c, cp, float(rng.uniform(0.01, 0.49)))
        p, q = params.materialize()
        brute = _brute_kl(p.cells, q.cells, p.marginal, q.marginal, ell, u)
        worst = max(worst, abs(brute - bounds.kl_rich(c, params.alpha, ell)[0]))
    return worst <= tol, f"max |closed - brute| = {worst:.2e} over {2 * n_draws} draws (tol {tol:g})"


# -- 8 ---------------------------------------------------------------------------


def _components_a(learner, ell, u, grid):
    g = GridSpec(**{**grid.__dict__, "ell": ell, "u": u})
    return [FiniteComponent(d, learner) for d in materialize_family(AdmissibleFamily("pi1"), g)]


def threshold_components():
    return [ThresholdComponent(ThresholdProblem(t)) for t in THRESHOLD_SWEEP]


def mixture_rate_slopes(ells=(8, 16, 32, 64), grid: GridSpec = GridSpec()):
    comps_b = threshold_components()
    erm, maj = ERMLearner(), MajorityCountLearner()
    runs = {"sl": (erm, UnlabeledBudget("zero")), "ssl_square": (maj, UnlabeledBudget("square")),
            "ssl_quartic": (maj, UnlabeledBudget("quartic"))}
    out = {}
    for key, (learner, budget) in runs.items():
        pts = [(ell, mixture_sup(_components_a(learner, ell, budget(ell), grid), comps_b, ell,
                                 budget(ell)).worst_risk) for ell in ells]
        out[key] = fit_rate(pts)
    return out


def check_mixture_rates(ells=(8, 16, 32, 64), grid: GridSpec = GridSpec()):
    """SL slope -1/2 +/- 0.1, SSL (u = ell^2) slope -1 +/- 0.15, quartic within 0.15 of square."""
    s = mixture_rate_slopes(ells, grid)
    sl, sq, qu = (s[k].fitted_slope for k in ("sl", "ssl_square", "ssl_quartic"))
    parts = [abs(sl + 0.5) <= 0.1, abs(sq + 1.0) <= 0.15, abs(sq - qu) <= 0.15]
    marks = ["ok" if p else "fail" for p in parts]
    detail = (f"SL slope = {sl:.3f} ({marks[0]}), SSL square slope = {sq:.3f} ({marks[1]}), "
              f"|square - quartic| = {abs(sq - qu):.3f} ({marks[2]})")
    return all(parts), detail


# -- 9 ---------------------------------------------------------------------------


def check_mixture_sandwich(ells=(4, 8, 16, 32), grid: GridSpec = GridSpec(n_alpha=12)):
    """max(r_A, r_B)/2 <= exact mixture risk <= quartered-sample rates + split tails, for u >= ell."""
    comps_b = threshold_components()
    n, low_gap, up_gap = 0, math.inf, math.inf
    for ell in ells:
        for u in (ell, ell * ell):
            for learner in (MajorityCountLearner(), ERMLearner()):
                for a in _components_a(learner, ell, u, grid):
                    for b in comps_b:
                        lower, upper = bounds.mixture_bounds(a.risk, b.risk, ell, u)
                        exact = mixture_exact_risk(MixtureProblem(a, b), ell, u)
                        low_gap = min(low_gap, exact - lower)
                        up_gap = min(up_gap, upper - exact)
                        n += 1
    ok = low_gap >= -1e-12 and up_gap >= -1e-12
    return ok, f"{n} points; min(exact - lower) = {low_gap:.3e}, min(upper - exact) = {up_gap:.3e}"


# -- 10 --------------------------------------------------------------------------


def _random_learner(rng, ell):
    kind = int(rng.integers(0, 6))
    if kind == 0:
        return MajorityCountLearner()
    if kind == 1:
        return ERMLearner()
    if kind == 2:
        return MarginalInformedLearner()
    if kind == 3:
        return ConstantLearner(int(rng.integers(0, 2)))
    if kind == 4:
        return forget_labels_reduction(MajorityCountLearner(), int(rng.integers(0, ell + 1)))
    return DiscardLearner(ERMLearner(), int(rng.integers(0, ell + 1)))


def check_mc_consistency(n_trials: int = 1000, n_reps: int = 2000, min_coverage: float = 0.99):
    """Monte Carlo estimates land within their half-width of the exact value."""
    rng = _rng(10)
    hits = 0
    for trial in range(n_trials):
        ell, u = int(rng.integers(0, 13)), int(rng.integers(0, 13))
        learner = _random_learner(rng, ell)
        if rng.random() < 0.5:
            dist = _random_two_point(rng).materialize()
        else:
            dist = FiniteLabeledDistribution(rng.dirichlet(np.ones(4)).reshape(2, 2), name="dirichlet")
        uu = 0 if learner.statistic == "reduced" else u
        exact = exact_expected_excess_risk(learner, dist, ell, uu)
        est, hw = mc_expected_excess_risk(learner, dist, ell, uu, n_reps,
                                          np.random.SeedSequence([MASTER_SEED, 10, trial]))
        hits += abs(est - exact) <= hw
    cov = hits / n_trials
    return cov >= min_coverage, f"coverage = {cov:.3f} over {n_trials} trials (need >= {min_coverage})"


CHECKS = (
    (1, "reduction", "reduction identity", check_reduction_identity),
    (2, "lecam", "two-point testing floor", check_le_cam_floor),
    (3, "hoeffding", "majority risk under the Hoeffding bound", check_hoeffding_sandwich),
    (4, "example-rates", "1/sqrt(ell) to 1/ell on the alpha = beta family", check_example_rates),
    (5, "no-help", "SL floor persists for every budget", check_no_help),
    (6, "piell", "separation on the ell-dependent family", check_piell_separation),
    (7, "kl-oracle", "closed-form KL vs brute force", check_kl_oracle),
    (8, "mixture-rates", "mixture SL/SSL slopes and budget insensitivity", check_mixture_rates),
    (9, "mixture-sandwich", "mixture risk between the component-rate bounds", check_mixture_sandwich),
    (10, "mc", "Monte Carlo coverage", check_mc_consistency),
)

CHECK_IDS = tuple(c[1] for c in CHECKS)


def run_check(check_id: str) -> CheckResult:
    for number, cid, title, fn in CHECKS:
        if cid == check_id or str(number) == str(check_id):
            t0 = time.perf_counter()
            passed, detail = fn()
            return CheckResult(number, cid, title, bool(passed), detail, time.perf_counter() - t0)
    raise KeyError(f"unknown check {check_id!r}; known: {', '.join(CHECK_IDS)}")


def run_checks(only=None, echo=print) -> list[CheckResult]:
    ids = list(only) if only else list(CHECK_IDS)
    for cid in ids:
        if not any(cid == c[1] or cid == str(c[0]) for c in CHECKS):
            raise KeyError(f"unknown check {cid!r}; known: {', '.join(CHECK_IDS)}")
    results = []
    for cid in ids:
        res = run_check(cid)
        if echo:
            echo(res.line())
        results.append(res)
    return results
