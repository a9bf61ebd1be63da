"""Exact expected excess risk, Monte Carlo estimates, family sups and Bayes-test lower bounds.

Two evaluation routes exist for the same quantity:

* enumeration over every sufficient statistic of an (ell, u) sample with
  log-gamma multinomial weights and compensated summation, and
* closed forms for learners whose decision reduces to a pair of binomial
  counts. On any two-point distribution with eta(x1) + eta(x2) = 1 the
  number of labeled points agreeing with h10 is Bin(ell, eta(x1)) and is
  independent of where the points fell, so the majority and ERM rules need
  only binomial tail probabilities.

``method="auto"`` takes the closed form whenever it applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .core import (
    TWO_POINT_CLASS,
    AdmissibleFamily,
    FiniteLabeledDistribution,
    GridSpec,
    HypothesisClass,
    RichFamilyParams,
    TwoPointParams,
    class_excess,
    family_params,
    materialize_family,
)
from .learners import (
    H01_INDEX,
    H10_INDEX,
    DiscardLearner,
    Learner,
    ReducedLearner,
    SampleSizeError,
)
from .numerics import (
    binom_logpmf,
    binom_support,
    binom_window,
    compositions,
    fsum,
    log_binom_coef,
    multinomial_logpmf,
    n_compositions,
)
from .parallel import parallel_map

DEFAULT_NODE_CAP = 10**9
CHUNK_ELEMENTS = 2_000_000
WEIGHT_TOL = 1e-12
COIN_TOL = 1e-12
DEGENERATE_DENOMINATOR = 1e-300


class EnumerationBudgetError(RuntimeError):
    """The enumeration would exceed the node cap; use Monte Carlo or smaller sizes."""


class WeightError(RuntimeError):
    pass


def is_coin_pair(dist: FiniteLabeledDistribution) -> bool:
    """Two-point distribution with eta(x1) + eta(x2) = 1 and both points charged."""
    if dist.domain_size != 2 or np.any(dist.marginal <= 0):
        return False
    eta = dist.eta
    return abs(eta[0] + eta[1] - 1.0) <= COIN_TOL


def _coin_stats(dist):
    """(P(x1), P(label agrees with h10)) of a coin-pair distribution."""
    return float(dist.marginal[0]), float(dist.eta[0])


def _check_sizes(ell, u):
    if ell < 0 or u < 0:
        raise ValueError("sample sizes must be nonnegative")


# -- closed forms -------------------------------------------------------------------


def majority_pick_probs(p1, q, ell, u):
    """(P(pick h01), P(pick h10)) for the majority rule; broadcasts over arrays.

    The x1 count T is Bin(ell + u, p1); at a count tie the labeled vote
    V ~ Bin(ell, q) decides, and a double tie goes to h10.
    """
    ell = np.asarray(ell, dtype=np.int64)
    n = ell + np.asarray(u, dtype=np.int64)
    t_low = binom.cdf((n - 1) // 2, n, p1)
    t_high = binom.sf(n // 2, n, p1)
    t_tie = np.where(n % 2 == 0, binom.pmf(n // 2, n, p1), 0.0)
    v_low = binom.cdf((ell - 1) // 2, ell, q)
    v_high = binom.sf((ell - 1) // 2, ell, q)
    return t_low + t_tie * v_low, t_high + t_tie * v_high


def erm_pick_probs(q, ell):
    """(P(pick h01), P(pick h10)) for two-point ERM; V ~ Bin(ell, q), ties to index 0 (h01)."""
    ell = np.asarray(ell, dtype=np.int64)
    return binom.cdf(ell // 2, ell, q), binom.sf(ell // 2, ell, q)


def _closed_form(learner: Learner, dist, ell, u):
    if learner.statistic == "majority" and is_coin_pair(dist):
        p1, q = _coin_stats(dist)
        probs = majority_pick_probs(p1, q, ell, u)
    elif learner.statistic == "erm" and dist.domain_size == 2 and learner.hclass == TWO_POINT_CLASS:
        q = float(dist.cells[0, 1] + dist.cells[1, 0])
        probs = erm_pick_probs(q, ell)
    else:
        return None
    excess = class_excess(dist, learner.hclass)
    picks = {H01_INDEX: probs[0], H10_INDEX: probs[1]}
    return float(sum(float(picks[i]) * excess[i] for i in picks if excess[i] > 0))


# -- enumeration --------------------------------------------------------------------


def enumeration_size(domain_size: int, ell: int, u: int) -> int:
    return n_compositions(ell, 2 * domain_size) * n_compositions(u, domain_size)


def _weights(counts, probs):
    w = np.exp(multinomial_logpmf(counts, probs))
    err = abs(fsum(w) - 1.0)
    if err > WEIGHT_TOL:
        raise WeightError(f"enumeration weights sum to 1 {err:+.3e}")
    return w


def _chunks(n_rows, n_cols):
    step = max(1, CHUNK_ELEMENTS // max(n_rows, 1))
    for start in range(0, n_cols, step):
        yield slice(start, min(n_cols, start + step))


def enumerate_expected_excess(learner: Learner, dist, ell: int, u: int,
                              node_cap: int = DEFAULT_NODE_CAP) -> float:
    """Sum over all labeled cell-count vectors and unlabeled splits, weighted by their probability."""
    k = dist.domain_size
    size = enumeration_size(k, ell, u)
    if size > node_cap:
        raise EnumerationBudgetError(f"enumeration needs {size} terms > node cap {node_cap}")
    lab = compositions(ell, 2 * k)
    lab_w = _weights(lab, dist.cells.ravel())
    lab = lab.reshape(-1, k, 2)
    unl = compositions(u, k)
    unl_w = _weights(unl, dist.marginal)
    excess = class_excess(dist, learner.hclass)
    terms = []
    for sl in _chunks(len(lab), len(unl)):
        picks = learner.decide(lab[:, None], unl[None, sl], dist.marginal)
        terms.append(lab_w[:, None] * unl_w[None, sl] * excess[picks])
    return fsum(np.concatenate([t.ravel() for t in terms]))


def enumerate_reduced(learner: ReducedLearner, dist, ell: int,
                      node_cap: int = DEFAULT_NODE_CAP) -> float:
    """Exact risk of a label-forgetting learner on ``ell`` labeled points.

    Enumerates the full labeled count vector (multinomial) and, inside it,
    the counts of the last ``u_budget`` points (multivariate hypergeometric).
    """
    ub = learner.u_budget
    if ell < ub:
        raise SampleSizeError(f"{learner.name} needs at least {ub} labeled points, got {ell}")
    k = dist.domain_size
    size = n_compositions(ell, 2 * k) * n_compositions(ub, 2 * k)
    if size > node_cap:
        raise EnumerationBudgetError(f"enumeration needs {size} terms > node cap {node_cap}")
    full = compositions(ell, 2 * k)
    full_w = _weights(full, dist.cells.ravel())
    sub = compositions(ub, 2 * k)
    excess = class_excess(dist, learner.hclass)
    log_norm = float(log_binom_coef(ell, ub))
    terms = []
    for sl in _chunks(len(full), len(sub)):
        c = full[:, None, :]
        s = sub[None, sl, :]
        valid = np.all(s <= c, axis=-1)
        logw = np.where(valid, log_binom_coef(c, np.minimum(s, c)).sum(-1) - log_norm, -np.inf)
        kept = (c - np.minimum(s, c)).reshape(c.shape[0], -1, k, 2)
        forgotten = np.broadcast_to(s, valid.shape + (2 * k,)).reshape(valid.shape + (k, 2))
        picks = learner.decide_split(kept, forgotten, dist.marginal)
        terms.append(full_w[:, None] * np.exp(logw) * excess[picks])
    return fsum(np.concatenate([t.ravel() for t in terms]))


# -- public entry points ------------------------------------------------------------


def exact_expected_excess_risk(learner: Learner, dist: FiniteLabeledDistribution, ell: int, u: int = 0,
                               node_cap: int = DEFAULT_NODE_CAP, method: str = "auto") -> float:
    """Expected positive-part excess risk of ``learner`` under ``dist`` at sample size (ell, u).

    ``method`` is ``"auto"`` (closed form when available), ``"enumerate"``
    or ``"closed"`` (raises if no closed form applies).
    """
    _check_sizes(ell, u)
    if isinstance(learner, DiscardLearner):
        if ell < learner.k:
            raise SampleSizeError(f"{learner.name} needs at least {learner.k} labeled points")
        return exact_expected_excess_risk(learner.inner, dist, ell - learner.k, u, node_cap, method)
    if isinstance(learner, ReducedLearner):
        if u:
            raise ValueError(f"{learner.name} is a supervised learner; evaluate it at u=0")
        return enumerate_reduced(learner, dist, ell, node_cap)
    if learner.statistic == "sample-free":
        return float(class_excess(dist, learner.hclass)[learner.choice(dist.marginal)])
    if method != "enumerate":
        value = _closed_form(learner, dist, ell, u)
        if value is not None:
            return value
        if method == "closed":
            raise ValueError(f"no closed form for {learner.name} on {dist!r}")
    return enumerate_expected_excess(learner, dist, ell, u, node_cap)


def _draw_picks(learner, dist, ell, u, n, rng):
    k = dist.domain_size
    if isinstance(learner, DiscardLearner):
        return _draw_picks(learner.inner, dist, ell - learner.k, u, n, rng)
    if isinstance(learner, ReducedLearner):
        kept = rng.multinomial(ell - learner.u_budget, dist.cells.ravel(), size=n).reshape(n, k, 2)
        forgotten = rng.multinomial(learner.u_budget, dist.cells.ravel(), size=n).reshape(n, k, 2)
        return learner.decide_split(kept, forgotten, dist.marginal)
    lab = rng.multinomial(ell, dist.cells.ravel(), size=n).reshape(n, k, 2)
    unl = rng.multinomial(u, dist.marginal, size=n)
    return learner.decide(lab, unl, dist.marginal)


def mc_expected_excess_risk(learner: Learner, dist: FiniteLabeledDistribution, ell: int, u: int,
                            n_reps: int, seed) -> tuple[float, float]:
    """Monte Carlo estimate and its 99% Hoeffding half-width.

    Samples are drawn as i.i.d. cell counts, which is the exact law of the
    sufficient statistics; order-dependent wrappers draw their two sample
    segments independently.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    _check_sizes(ell, u)
    rng = np.random.default_rng(seed)
    excess = class_excess(dist, learner.hclass)
    picks = _draw_picks(learner, dist, ell, u, n_reps, rng)
    estimate = fsum(excess[picks]) / n_reps
    half_width = float(excess.max()) * math.sqrt(math.log(200.0) / (2.0 * n_reps))
    return estimate, half_width


@dataclass
class SupResult:
    worst_risk: float
    worst_member: FiniteLabeledDistribution
    risks: list[float] = field(repr=False)
    members: list[FiniteLabeledDistribution] = field(repr=False)

    @property
    def worst_params(self):
        return self.worst_member.params


def _risk_item(args):
    learner, dist, ell, u, node_cap = args
    return exact_expected_excess_risk(learner, dist, ell, u, node_cap)


def sup_over_family(learner: Learner, family, ell: int, u: int = 0, grid: GridSpec | None = None,
                    node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1) -> SupResult:
    """Worst exact risk over the family's grid (or an explicit member list).

    Ties keep the first member in grid order, so the result does not depend
    on scheduling.
    """
    if isinstance(family, AdmissibleFamily):
        grid = grid or GridSpec()
        members = materialize_family(family, GridSpec(**{**grid.__dict__, "ell": ell, "u": u}))
    else:
        members = list(family)
    if not members:
        raise ValueError("family has no members")
    risks = parallel_map(_risk_item, [(learner, m, ell, u, node_cap) for m in members], jobs)
    i = int(np.argmax(risks))
    return SupResult(float(risks[i]), members[i], list(map(float, risks)), members)


# -- Bayes testing ------------------------------------------------------------------


@dataclass(frozen=True)
class BayesTestResult:
    error: float
    gap: float
    bound: float
    method: str


def _coin_pair_error(p0, p1, ell, u):
    # The outcome is (T, V): T ~ Bin(ell + u, P(x1)) point count, V ~ Bin(ell, eta(x1)) votes,
    # independent. For each v the outcomes where P0 is the smaller likelihood are those t
    # whose log-ratio falls below a cut, so prefix sums of the sorted t-terms give the row.
    n = ell + u
    m0, q0 = _coin_stats(p0)
    m1, q1 = _coin_stats(p1)
    t = binom_support(n, [m0, m1])
    v = np.arange(ell + 1)
    la0, la1 = binom_logpmf(t, n, m0), binom_logpmf(t, n, m1)
    lb0, lb1 = binom_logpmf(v, ell, q0), binom_logpmf(v, ell, q1)
    order = np.argsort(la0 - la1, kind="stable")
    ratio = (la0 - la1)[order]
    a0, a1 = np.exp(la0[order]), np.exp(la1[order])
    head0 = np.concatenate([[0.0], np.cumsum(a0)])
    tail1 = np.concatenate([np.cumsum(a1[::-1])[::-1], [0.0]])
    k = np.searchsorted(ratio, lb1 - lb0, side="right")
    return 0.5 * fsum(np.exp(lb0) * head0[k] + np.exp(lb1) * tail1[k])


def rich_bayes_test_error(params: RichFamilyParams, ell: int) -> float:
    """Bayes error between P_alpha and P_-alpha on ``ell`` labeled points.

    Only the count m of points landing in C and the number of 1-labels among
    them matter; unlabeled points carry no information (shared marginal).
    """
    a = params.alpha
    m = np.arange(ell + 1)
    wm = np.exp(binom_logpmf(m, ell, params.c))
    k = np.arange(ell + 1)
    mm, kk = np.meshgrid(m, k, indexing="ij")
    valid = kk <= mm
    kk_safe = np.where(valid, kk, 0)
    hi = np.where(valid, np.exp(binom_logpmf(kk_safe, mm, 0.5 + a)), 0.0)
    lo = np.where(valid, np.exp(binom_logpmf(kk_safe, mm, 0.5 - a)), 0.0)
    return 0.5 * fsum(wm[:, None] * np.minimum(hi, lo))


def enumerate_bayes_test_error(p0, p1, ell: int, u: int, node_cap: int = DEFAULT_NODE_CAP) -> float:
    """Bayes error with a uniform prior: half the sum over outcomes of min(P0, P1)."""
    k = p0.domain_size
    if p1.domain_size != k:
        raise ValueError("distributions must share a domain")
    size = enumeration_size(k, ell, u)
    if size > node_cap:
        raise EnumerationBudgetError(f"enumeration needs {size} terms > node cap {node_cap}")
    lab = compositions(ell, 2 * k)
    unl = compositions(u, k)
    l0 = multinomial_logpmf(lab, p0.cells.ravel())
    l1 = multinomial_logpmf(lab, p1.cells.ravel())
    u0 = multinomial_logpmf(unl, p0.marginal)
    u1 = multinomial_logpmf(unl, p1.marginal)
    terms = []
    for sl in _chunks(len(lab), len(unl)):
        terms.append(np.minimum(np.exp(l0[:, None] + u0[None, sl]), np.exp(l1[:, None] + u1[None, sl])))
    return 0.5 * fsum(np.concatenate([t.ravel() for t in terms]))


def _is_rich_pair(p0, p1):
    return (isinstance(p0.params, RichFamilyParams) and p0.params == p1.params
            and not np.array_equal(p0.cells, p1.cells))


def bayes_test_error(p0, p1, ell: int, u: int = 0, node_cap: int = DEFAULT_NODE_CAP,
                     method: str = "auto") -> tuple[float, str]:
    _check_sizes(ell, u)
    if method != "enumerate":
        if is_coin_pair(p0) and is_coin_pair(p1):
            return _coin_pair_error(p0, p1, ell, u), "coin-pair"
        if _is_rich_pair(p0, p1):
            return rich_bayes_test_error(p0.params, ell), "rich"
    return enumerate_bayes_test_error(p0, p1, ell, u, node_cap), "enumerate"


def bayes_test_minimax_lower_bound(p0: FiniteLabeledDistribution, p1: FiniteLabeledDistribution,
                                   ell: int, u: int = 0, hclass: HypothesisClass = TWO_POINT_CLASS,
                                   node_cap: int = DEFAULT_NODE_CAP, method: str = "auto") -> BayesTestResult:
    """Lower bound on the minimax risk over {p0, p1} for every algorithm.

    Returns (Bayes test error) x (excess of the wrong hypothesis). With two
    hypotheses, each optimal for one distribution, any algorithm's average
    risk over the pair is at least this product.
    """
    if len(hclass) != 2:
        raise ValueError("the two-point test bound needs a class of exactly two hypotheses")
    err, how = bayes_test_error(p0, p1, ell, u, node_cap, method)
    gap = min(float(class_excess(p0, hclass).max()), float(class_excess(p1, hclass).max()))
    return BayesTestResult(err, gap, err * gap, how)


@dataclass
class FamilyBound:
    bound: float
    pair: tuple
    result: BayesTestResult | None


def family_pairs(family: AdmissibleFamily, grid: GridSpec) -> list[tuple]:
    """Sign-partner pairs (two-point) or +/- alpha pairs (rich) of the family grid."""
    if family.kind == "explicit":
        ms = list(family.members)
        return [(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms))]
    pairs = []
    for p in family_params(family, grid):
        if isinstance(p, RichFamilyParams):
            pairs.append(p.materialize())
        elif isinstance(p, TwoPointParams) and p.sign > 0:
            pairs.append((p.materialize(), p.partner().materialize()))
    return pairs


def _pair_item(args):
    p0, p1, ell, u, hclass, node_cap = args
    return bayes_test_minimax_lower_bound(p0, p1, ell, u, hclass, node_cap)


def family_bayes_lower_bound(family: AdmissibleFamily, ell: int, u: int = 0, grid: GridSpec | None = None,
                             node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1) -> FamilyBound:
    """Largest two-point Bayes-test bound over the family's grid pairs (adversarial points injected)."""
    grid = grid or GridSpec()
    g = GridSpec(**{**grid.__dict__, "ell": ell, "u": u})
    fam = family.at(ell)
    pairs = family_pairs(fam, g)
    results = parallel_map(_pair_item, [(a, b, ell, u, fam.hclass, node_cap) for a, b in pairs], jobs)
    if not results:
        return FamilyBound(0.0, (), None)
    i = int(np.argmax([r.bound for r in results]))
    return FamilyBound(results[i].bound, pairs[i], results[i])


# -- unlabeled-data-helps diagnostics ------------------------------------------------


@dataclass
class RatioPoint:
    ell: int
    u: int
    ssl_risk: float
    sl_upper: float
    sl_lower: float
    ratio: float
    degenerate: bool


@dataclass
class RatioReport:
    """Per-ell (SSL sup risk) / (SL Bayes-test lower bound), with the SL learner's sup for context.

    The ratio is a bracket: the numerator is an achievable risk, the
    denominator a lower bound valid for every algorithm. ``series`` is the
    power-law fit of the non-degenerate ratios (None with fewer than three).
    """

    points: list[RatioPoint]
    series: object

    @property
    def degenerate(self) -> list[int]:
        return [p.ell for p in self.points if p.degenerate]


def ssl_vs_sl_ratio(family: AdmissibleFamily, ssl_learner: Learner, sl_learner: Learner, budget, ell_grid,
                    grid: GridSpec | None = None, node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1) -> RatioReport:
    from .rates import FitError, fit_rate

    ells = [int(x) for x in ell_grid]
    if not ells or any(b <= a for a, b in zip(ells, ells[1:])):
        raise ValueError("ell_grid must be nonempty and strictly increasing")
    points = []
    for ell in ells:
        u = int(budget(ell))
        fam = family.at(ell)
        ssl = sup_over_family(ssl_learner, fam, ell, u, grid, node_cap, jobs).worst_risk
        sl = sup_over_family(sl_learner, fam, ell, 0, grid, node_cap, jobs).worst_risk
        low = family_bayes_lower_bound(fam, ell, 0, grid, node_cap, jobs).bound
        bad = not low > DEGENERATE_DENOMINATOR
        points.append(RatioPoint(ell, u, ssl, sl, low, math.nan if bad else ssl / low, bad))
    good = [(p.ell, p.ratio) for p in points if not p.degenerate and p.ratio > 0]
    try:
        series = fit_rate(good)
    except FitError:
        series = None
    return RatioReport(points, series)


@dataclass
class BudgetVerdict:
    rate_exponent: float
    budget: str
    ells: np.ndarray
    ratios: np.ndarray
    tail_slope: float
    verdict: str
    note: str = ""


def superlinear_budget_check(rate_exponent: float, budget, ell_grid=None) -> BudgetVerdict:
    """Can ``budget`` possibly change an SL rate ell^-a?

    With u(ell) unlabeled points an SSL learner does at best as well as an SL
    learner given ell + u(ell) labeled points, so the ratio of rates is at
    least ((ell + u) / ell)^-a. Helping needs this to vanish. The verdict is
    read off the log-log slope of the ratio over the last third of the grid
    (default 2^1 .. 2^20). Exponential budgets are evaluated uncapped.
    """
    if not rate_exponent > 0:
        raise ValueError("rate_exponent must be positive")
    ells = np.asarray(ell_grid if ell_grid is not None else 2.0 ** np.arange(1, 21), dtype=float)
    note = ""
    if budget.kind == "exponential":
        # log(ell + e^ell) = ell + log1p(ell e^-ell)
        log_sum = ells + np.log1p(ells * np.exp(-ells))
        if budget.capped(int(ells.max())):
            note = f"the configured cap {budget.cap} is ignored; a capped budget is eventually constant and cannot help"
    else:
        log_sum = np.log(ells + np.array([budget(int(e)) for e in ells], dtype=float))
    log_ratio = -rate_exponent * (log_sum - np.log(ells))
    tail = slice(len(ells) - max(3, len(ells) // 3), len(ells))
    x = np.log(ells[tail])
    slope = float(np.polyfit(x, log_ratio[tail], 1)[0])
    verdict = "possible" if slope < -1e-3 else "impossible"
    return BudgetVerdict(rate_exponent, budget.label, ells, np.exp(log_ratio), slope, verdict, note)


# -- best-in-menu risk ---------------------------------------------------------------


def menu_curve(learners, members, ells, u: int = 0, node_cap: int = DEFAULT_NODE_CAP) -> dict:
    """Best-in-menu worst-case risk at each ell, with discarding wrappers.

    The menu holds every learner together with ``drop:<learner>:k`` for all
    k <= ell; a discarding learner at ell has the risk of its inner learner at
    ell - k. The member list is fixed across ell. Returns {ell: (risk, name)}.
    """
    ells = sorted(int(e) for e in ells)
    top = ells[-1]
    sups = {}
    for learner in learners:
        sups[learner.name] = [max(exact_expected_excess_risk(learner, m, n, u, node_cap) for m in members)
                              for n in range(top + 1)]
    out = {}
    for ell in ells:
        best = None
        for name, curve in sups.items():
            for n in range(ell + 1):
                cand = (curve[n], name if n == ell else f"drop:{name}:{ell - n}")
                if best is None or cand[0] < best[0]:
                    best = cand
        out[ell] = best
    return out
