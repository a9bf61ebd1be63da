"""Half/half mixtures of two problems on disjoint domains.

Component A is a finite-domain problem evaluated by the exact engine;
component B is either another finite problem or the realizable threshold
problem on [0, 1] with a closed-form ERM risk. A sample of size (ell, u)
splits into Bin(ell, 1/2) labeled and Bin(u, 1/2) unlabeled points for A,
the rest for B, and the mixture excess risk is the average of the component
excess risks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .bounds import mixture_bounds
from .core import FiniteLabeledDistribution, HypothesisClass, class_excess
from .exact import (
    DEFAULT_NODE_CAP,
    _coin_stats,
    exact_expected_excess_risk,
    is_coin_pair,
)
from .learners import H01_INDEX, H10_INDEX, Learner
from .numerics import binom_logpmf, binom_window, fsum
from .rates import fit_rate

THRESHOLD_SWEEP = (0.0, 0.25, 0.5, 0.75)


@dataclass(frozen=True)
class ThresholdProblem:
    """Uniform marginal on [0, 1], labels y = 1{x >= t}; the class is all thresholds."""

    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")

    def risk(self, s: float) -> float:
        """Risk of the threshold classifier 1{x >= s}; Bayes risk is 0."""
        return abs(s - self.t)


def threshold_erm(xs, ys) -> float:
    """Threshold at the smallest point labeled 1; with no positive point predict all 0 (threshold 1)."""
    xs = np.asarray(xs, dtype=float)
    pos = xs[np.asarray(ys) == 1]
    return float(pos.min()) if len(pos) else 1.0


def threshold_erm_exact_risk(t, ell):
    """E[risk of threshold ERM] = (1 - t^(ell+1)) / (ell + 1); broadcasts."""
    ell = np.asarray(ell, dtype=float)
    return (1.0 - np.power(t, ell + 1.0)) / (ell + 1.0)


def threshold_erm_mc(t: float, ell: int, n_reps: int, seed) -> tuple[float, float]:
    """(mean, standard error) of the ERM risk over simulated samples."""
    rng = np.random.default_rng(seed)
    out = np.empty(n_reps)
    block = max(1, 2_000_000 // max(ell, 1))
    for start in range(0, n_reps, block):
        n = min(block, n_reps - start)
        xs = rng.random((n, ell))
        pos = np.where(xs >= t, xs, np.inf).min(axis=1) if ell else np.full(n, np.inf)
        learned = np.where(np.isfinite(pos), pos, 1.0)
        out[start:start + n] = np.abs(learned - t)
    return float(out.mean()), float(out.std(ddof=1) / math.sqrt(n_reps))


class FiniteComponent:
    """A finite-domain distribution with its learner; risk tables come from the exact engine."""

    def __init__(self, dist: FiniteLabeledDistribution, learner: Learner, node_cap: int = DEFAULT_NODE_CAP):
        self.dist = dist
        self.learner = learner
        self.node_cap = node_cap
        self._cached = lru_cache(maxsize=None)(self._one)
        self._last = (None, None)

    @property
    def name(self) -> str:
        return self.dist.name

    def _one(self, i: int, j: int) -> float:
        return exact_expected_excess_risk(self.learner, self.dist, i, j, self.node_cap)

    def risk(self, i: int, j: int) -> float:
        return self._cached(int(i), int(j))

    def table(self, i_vals, j_vals) -> np.ndarray:
        """Expected excess risk for every (labeled i, unlabeled j) combination."""
        i_vals = np.asarray(i_vals, dtype=np.int64)
        j_vals = np.asarray(j_vals, dtype=np.int64)
        key = (i_vals.tobytes(), j_vals.tobytes())
        if self._last[0] != key:
            # one slot: tables at large budgets are big and rarely reused across sizes
            self._last = (key, self._build(i_vals, j_vals))
        return self._last[1]

    def _build(self, i_vals, j_vals):
        if self.learner.statistic == "majority" and is_coin_pair(self.dist):
            return self._majority_table(i_vals, j_vals)
        if not self.learner.uses_unlabeled:
            col = np.array([self.risk(i, 0) for i in i_vals])
            return np.repeat(col[:, None], len(j_vals), axis=1)
        return np.array([[self.risk(i, j) for j in j_vals] for i in i_vals])

    def _majority_table(self, i_vals, j_vals):
        # P(pick h01) = P(T < N/2) + P(T = N/2) P(V < i/2), T ~ Bin(N, p1), N = i + j.
        p1, q = _coin_stats(self.dist)
        n_lo = int(i_vals.min() + j_vals.min())
        n = np.arange(n_lo, int(i_vals.max() + j_vals.max()) + 1)
        t_low = binom.cdf((n - 1) // 2, n, p1)
        t_high = binom.sf(n // 2, n, p1)
        t_tie = np.where(n % 2 == 0, binom.pmf(n // 2, n, p1), 0.0)
        v_low = binom.cdf((i_vals - 1) // 2, i_vals, q)[:, None]
        v_high = binom.sf((i_vals - 1) // 2, i_vals, q)[:, None]
        idx = i_vals[:, None] + j_vals[None, :] - n_lo
        pick01 = t_low[idx] + t_tie[idx] * v_low
        pick10 = t_high[idx] + t_tie[idx] * v_high
        excess = class_excess(self.dist, self.learner.hclass)
        return pick01 * excess[H01_INDEX] + pick10 * excess[H10_INDEX]


class ThresholdComponent:
    """Threshold problem with the smallest-positive ERM rule; unlabeled points are unused."""

    def __init__(self, problem: ThresholdProblem):
        self.problem = problem

    @property
    def name(self) -> str:
        return f"Threshold[t={self.problem.t:g}]"

    def risk(self, i: int, j: int = 0) -> float:
        return float(threshold_erm_exact_risk(self.problem.t, i))

    def table(self, i_vals, j_vals) -> np.ndarray:
        r = threshold_erm_exact_risk(self.problem.t, np.asarray(i_vals))
        return np.broadcast_to(r[:, None], (len(r), len(np.atleast_1d(j_vals)))).copy()


@dataclass
class MixtureProblem:
    """Two components on disjoint domains, mixed with weights 1/2, 1/2."""

    component_a: object
    component_b: object


def mixture_learner(learner_a: Learner, learner_b: Learner):
    """Route the A-part and B-part of a sample to the component learners and stitch the outputs.

    The returned callable takes ``(sample_a, sample_b)``, each an
    ``(xs, ys, xu)`` triple, and returns ``(output_a, output_b)``.
    """

    def fit(sample_a, sample_b):
        return learner_a.fit(*sample_a), learner_b.fit(*sample_b)

    fit.components = (learner_a, learner_b)
    return fit


def mix_finite(dist_a: FiniteLabeledDistribution, dist_b: FiniteLabeledDistribution) -> FiniteLabeledDistribution:
    """Cell table of 1/2 P_A + 1/2 P_B; B's points are indexed after A's."""
    return FiniteLabeledDistribution(np.vstack([0.5 * dist_a.cells, 0.5 * dist_b.cells]),
                                     name=f"Mix[{dist_a.name}|{dist_b.name}]")


def product_class(class_a: HypothesisClass, class_b: HypothesisClass) -> HypothesisClass:
    return HypothesisClass(tuple(ha + hb for ha in class_a for hb in class_b))


def _split_weights(n: int):
    lo, hi = binom_window(n, [0.5])
    idx = np.arange(lo, hi + 1)
    return idx, np.exp(binom_logpmf(idx, n, 0.5))


def _split_sum(table, wi, wj) -> float:
    # pairwise row sums, then a compensated sum of the row totals
    return fsum(wi * (table @ wj))


def mixture_exact_risk(mix: MixtureProblem, ell: int, u: int = 0, detail: bool = False):
    """Exact expected excess risk of the stitched learner.

    sum_i sum_j Bin(ell,1/2)(i) Bin(u,1/2)(j) * [r_A(i, j) + r_B(ell-i, u-j)] / 2,
    with the unlabeled split truncated to its non-negligible window. With
    ``detail`` also returns the two halves.
    """
    i, wi = _split_weights(ell)
    j, wj = _split_weights(u)
    ra = mix.component_a.table(i, j)
    rb = mix.component_b.table(ell - i, u - j)
    part_a = 0.5 * _split_sum(ra, wi, wj)
    part_b = 0.5 * _split_sum(rb, wi, wj)
    total = part_a + part_b
    return (total, part_a, part_b) if detail else total


def mixture_split_terms(mix: MixtureProblem, ell: int, u: int = 0) -> list[dict]:
    """Per-(i, j) terms of the split sum, for debug dumps."""
    i, wi = _split_weights(ell)
    j, wj = _split_weights(u)
    ra = mix.component_a.table(i, j)
    rb = mix.component_b.table(ell - i, u - j)
    rows = []
    for a, ii in enumerate(i):
        for b, jj in enumerate(j):
            rows.append({"split_i": int(ii), "split_j": int(jj), "weight": float(wi[a] * wj[b]),
                         "risk_a": float(ra[a, b]), "risk_b": float(rb[a, b])})
    return rows


@dataclass
class MixtureSup:
    worst_risk: float
    worst_a: object
    worst_b: object
    part_a: float
    part_b: float


def mixture_sup(components_a, components_b, ell: int, u: int = 0) -> MixtureSup:
    """Worst case over product members. The risk splits into an A-part and a
    B-part, so the sup is taken separately on each side."""
    best_a = max(((mixture_exact_risk(MixtureProblem(a, components_b[0]), ell, u, detail=True)[1], k)
                  for k, a in enumerate(components_a)), key=lambda t: (t[0], -t[1]))
    best_b = max(((mixture_exact_risk(MixtureProblem(components_a[0], b), ell, u, detail=True)[2], k)
                  for k, b in enumerate(components_b)), key=lambda t: (t[0], -t[1]))
    return MixtureSup(best_a[0] + best_b[0], components_a[best_a[1]], components_b[best_b[1]],
                      best_a[0], best_b[0])


def mixture_sandwich(mix: MixtureProblem, ell: int, u: int) -> tuple[float, float, float]:
    """(lower, exact, upper) with the component rates taken as exact component risks."""
    lower, upper = mixture_bounds(mix.component_a.risk, mix.component_b.risk, ell, u)
    return lower, mixture_exact_risk(mix, ell, u), upper


@dataclass
class BudgetReport:
    slopes: dict
    reference: str
    max_deviation: float
    tolerance: float
    component_a_slopes: dict

    @property
    def insensitive(self) -> bool:
        return self.max_deviation <= self.tolerance


def budget_insensitivity_check(components_a, components_b, budgets, ell_grid, tolerance: float = 0.15,
                               drop_fraction: float = 1 / 3) -> BudgetReport:
    """Fitted worst-case SSL slopes for each budget and their spread around the first (square) budget.

    ``components_a`` may be a callable ``(ell, u) -> list`` so that the grid
    can follow the size-dependent adversarial points.
    """
    slopes, a_slopes = {}, {}
    for budget in budgets:
        pts, a_pts = [], []
        for ell in ell_grid:
            u = budget(ell)
            comps = components_a(ell, u) if callable(components_a) else components_a
            s = mixture_sup(comps, components_b, ell, u)
            pts.append((ell, s.worst_risk))
            a_pts.append((ell, 2 * s.part_a))
        slopes[budget.label] = fit_rate(pts, drop_fraction).fitted_slope
        a_slopes[budget.label] = fit_rate(a_pts, drop_fraction).fitted_slope
    ref = budgets[0].label
    dev = max(abs(s - slopes[ref]) for s in slopes.values())
    return BudgetReport(slopes, ref, dev, tolerance, a_slopes)
