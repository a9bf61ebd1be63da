"""Finite-domain labeled distributions, hypothesis classes and admissible families.

Distributions are joint tables ``cells[x, y]`` over a finite domain and the
label set {0, 1}. The two-point "coin" distributions and the three-point rich
family are built from their parameters; admissible families are realized as
finite parameter grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

CELL_SUM_TOL = 1e-12

Hypothesis = tuple[int, ...]


class FamilyError(ValueError):
    """Raised when a family's constraints leave no admissible grid point."""


@dataclass(frozen=True, eq=False)
class FiniteLabeledDistribution:
    """Joint distribution over ``{0..domain_size-1} x {0, 1}``.

    ``cells[x, y]`` is the probability of observing point ``x`` with label
    ``y``. The table is validated and frozen at construction.
    """

    cells: np.ndarray
    name: str = ""
    params: Any = None

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 2 or cells.shape[1] != 2 or cells.shape[0] < 1:
            raise ValueError(f"cell table must have shape (domain_size, 2), got {cells.shape}")
        if not np.all(np.isfinite(cells)) or np.any(cells < 0):
            raise ValueError("cell probabilities must be finite and nonnegative")
        total = math.fsum(cells.ravel().tolist())
        if abs(total - 1.0) > CELL_SUM_TOL:
            raise ValueError(f"cell probabilities sum to {total!r}, not 1")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def domain_size(self) -> int:
        return self.cells.shape[0]

    @property
    def marginal(self) -> np.ndarray:
        return self.cells[:, 0] + self.cells[:, 1]

    @property
    def eta(self) -> np.ndarray:
        """P(Y=1 | X=x); NaN on null points."""
        m = self.marginal
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(m > 0, self.cells[:, 1] / np.where(m > 0, m, 1.0), np.nan)

    def __repr__(self):
        label = self.name or f"domain_size={self.domain_size}"
        return f"FiniteLabeledDistribution({label})"


@dataclass(frozen=True)
class HypothesisClass:
    hypotheses: tuple[Hypothesis, ...]

    def __post_init__(self):
        if not self.hypotheses:
            raise ValueError("hypothesis class must be nonempty")
        hyps = tuple(tuple(int(v) for v in h) for h in self.hypotheses)
        sizes = {len(h) for h in hyps}
        if len(sizes) != 1:
            raise ValueError("all hypotheses must share one domain")
        if any(v not in (0, 1) for h in hyps for v in h):
            raise ValueError("hypotheses must be 0/1 label vectors")
        object.__setattr__(self, "hypotheses", hyps)

    def __len__(self):
        return len(self.hypotheses)

    def __getitem__(self, i) -> Hypothesis:
        return self.hypotheses[i]

    def __iter__(self):
        return iter(self.hypotheses)

    @property
    def domain_size(self) -> int:
        return len(self.hypotheses[0])

    def index(self, h) -> int:
        return self.hypotheses.index(tuple(int(v) for v in h))

    def as_array(self) -> np.ndarray:
        return np.array(self.hypotheses, dtype=np.int64)


H01: Hypothesis = (0, 1)
H10: Hypothesis = (1, 0)
TWO_POINT_CLASS = HypothesisClass((H01, H10))


def risk(dist: FiniteLabeledDistribution, h) -> float:
    """Misclassification probability ``sum_x p(x, 1 - h(x))``."""
    h = np.asarray(h, dtype=np.int64)
    if h.shape != (dist.domain_size,):
        raise ValueError("hypothesis must label every domain point")
    return math.fsum(dist.cells[np.arange(dist.domain_size), 1 - h].tolist())


def class_risks(dist: FiniteLabeledDistribution, hclass: HypothesisClass) -> np.ndarray:
    return np.array([risk(dist, h) for h in hclass])


def excess_risk(dist: FiniteLabeledDistribution, h, hclass: HypothesisClass) -> float:
    return max(0.0, risk(dist, h) - float(class_risks(dist, hclass).min()))


def class_excess(dist: FiniteLabeledDistribution, hclass: HypothesisClass) -> np.ndarray:
    """Excess risk of every class member, indexed like the class."""
    r = class_risks(dist, hclass)
    return np.maximum(0.0, r - r.min())


def bayes_classifier(dist: FiniteLabeledDistribution) -> Hypothesis:
    """x -> 1{eta(x) >= 1/2}; null points get label 0."""
    eta = dist.eta
    return tuple(int(e >= 0.5) if not np.isnan(e) else 0 for e in eta)


# -- two-point coin distributions ---------------------------------------------------


@dataclass(frozen=True)
class TwoPointParams:
    """``alpha`` is the label bias, ``beta`` the marginal bias, ``sign`` picks the favored coin."""

    alpha: float
    beta: float
    sign: int = +1

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 0.0 < self.beta < 0.5:
            raise ValueError(f"beta must lie in (0, 1/2), got {self.beta}")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")

    def materialize(self) -> FiniteLabeledDistribution:
        return two_point_distribution(self.alpha, self.beta, self.sign, params=self)

    def partner(self) -> "TwoPointParams":
        return TwoPointParams(self.alpha, self.beta, -self.sign)


def two_point_cells(alpha: float, beta: float, sign: int = +1) -> np.ndarray:
    hi_m, lo_m = 0.5 + beta, 0.5 - beta
    hi_a, lo_a = 0.5 + alpha, 0.5 - alpha
    plus = np.array([[hi_m * lo_a, hi_m * hi_a],
                     [lo_m * hi_a, lo_m * lo_a]])
    if sign > 0:
        return plus
    # P_{ab-} is P_{ab+} with the roles of x1 and x2 swapped.
    return plus[::-1].copy()


def two_point_distribution(alpha: float, beta: float, sign: int = +1,
                           params: TwoPointParams | None = None) -> FiniteLabeledDistribution:
    """Coin-pair distribution; accepts the closed boundary alpha, beta in [0, 1/2) for degenerate checks."""
    if not (0.0 <= alpha < 0.5 and 0.0 <= beta < 0.5):
        raise ValueError("alpha, beta must lie in [0, 1/2)")
    s = "+" if sign > 0 else "-"
    return FiniteLabeledDistribution(two_point_cells(alpha, beta, sign),
                                     name=f"P[a={alpha:.6g},b={beta:.6g},{s}]", params=params)


# -- rich family --------------------------------------------------------------------


@dataclass(frozen=True)
class RichFamilyParams:
    """Three-point instance of a rich family.

    Domain: ``z0`` (in the disagreement set C, labeled 1 by h), ``z1`` (in C,
    labeled 0 by h), ``z2`` (outside C, deterministic label ``outside_label``).
    ``c`` is the mass of C, ``c_prime`` the mass of ``z0``.
    """

    c: float
    c_prime: float
    alpha: float
    outside_label: int = 0

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError("c must lie in (0, 1]")
        if not 0.0 <= self.c_prime <= self.c:
            raise ValueError("c_prime must lie in [0, c]")
        if self.c_prime == self.c / 2:
            raise ValueError("c_prime == c/2: family is not rich (mass asymmetry required)")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        if self.outside_label not in (0, 1):
            raise ValueError("outside_label must be 0 or 1")

    @property
    def marginal(self) -> np.ndarray:
        return np.array([self.c_prime, self.c - self.c_prime, 1.0 - self.c])

    @property
    def hclass(self) -> HypothesisClass:
        o = self.outside_label
        return HypothesisClass(((1, 0, o), (0, 1, o)))

    def _dist(self, a: float, tag: str) -> FiniteLabeledDistribution:
        m = self.marginal
        eta = np.array([0.5 + a, 0.5 + a, float(self.outside_label)])
        cells = np.column_stack([m * (1.0 - eta), m * eta])
        return FiniteLabeledDistribution(cells, name=f"Rich[c={self.c:.6g},c'={self.c_prime:.6g},{tag}]",
                                         params=self)

    @property
    def base_distribution(self) -> FiniteLabeledDistribution:
        """The shared marginal with unbiased labels on C."""
        return self._dist(0.0, "a=0")

    def materialize(self) -> tuple[FiniteLabeledDistribution, FiniteLabeledDistribution]:
        """(P_alpha, P_-alpha), sharing one marginal."""
        return (self._dist(self.alpha, f"a={self.alpha:.6g}"),
                self._dist(-self.alpha, f"a=-{self.alpha:.6g}"))


# -- admissible families ------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Per-parameter point counts and spacing for realizing a family as a grid.

    When ``ell`` is set, the adversarial points alpha = 1/(8 sqrt(ell)),
    beta = 1/(8 sqrt(ell + u)) and the Hoeffding maximizer 1/(2 sqrt(ell + u))
    are injected wherever the family admits them.
    """

    n_alpha: int = 40
    n_beta: int = 40
    spacing: str = "log"
    lo: float = 1e-3
    hi: float = 0.49
    ell: int | None = None
    u: int = 0

    def axis(self, n: int) -> np.ndarray:
        if n < 1:
            return np.empty(0)
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, n)
        if self.spacing == "linear":
            return np.linspace(self.lo, self.hi, n)
        raise ValueError(f"unknown spacing {self.spacing!r}")

    def injected(self) -> list[float]:
        if self.ell is None or self.ell < 1:
            return []
        n = self.ell + self.u
        return [1.0 / (8.0 * math.sqrt(self.ell)), 1.0 / (8.0 * math.sqrt(n)),
                1.0 / (2.0 * math.sqrt(n))]


@dataclass(frozen=True)
class AdmissibleFamily:
    """One of the admissible sets: ``pi0``, ``pi1``, ``piell``, ``pic``, ``rich``, ``explicit``."""

    kind: str
    ell: int | None = None
    c: float | None = None
    c_prime: float | None = None
    members: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in {"pi0", "pi1", "piell", "pic", "rich", "explicit"}:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "piell" and self.ell is not None and self.ell < 1:
            raise ValueError("piell needs a positive ell")
        if self.kind == "pic" and (self.c is None or not 0.0 < self.c < 0.25):
            raise ValueError("pic needs c in (0, 1/4)")
        if self.kind == "rich" and (self.c is None or self.c_prime is None):
            raise ValueError("rich needs c and c_prime")
        if self.kind == "explicit" and not self.members:
            raise ValueError("explicit family needs members")

    def at(self, ell: int) -> "AdmissibleFamily":
        """The family at labeled sample size ``ell`` (only ``piell`` without a fixed ell changes)."""
        if self.kind == "piell" and self.ell is None:
            return AdmissibleFamily("piell", ell=ell)
        return self

    @property
    def label(self) -> str:
        if self.kind == "piell":
            return f"piell:{self.ell}" if self.ell is not None else "piell"
        if self.kind == "pic":
            return f"pic:{self.c:g}"
        if self.kind == "rich":
            return f"rich:{self.c:g}:{self.c_prime:g}"
        return self.kind

    @property
    def beta_floor(self) -> float:
        """Smallest admissible marginal bias (0 when unconstrained)."""
        if self.kind == "piell":
            if self.ell is None:
                raise ValueError("piell without ell has no fixed beta floor; use family.at(ell)")
            return 1.0 / math.sqrt(self.ell)
        if self.kind == "pic":
            return self.c
        return 0.0

    def admits(self, p: TwoPointParams) -> bool:
        if self.kind == "pi0":
            return True
        if self.kind == "pi1":
            return p.alpha == p.beta
        if self.kind in ("piell", "pic"):
            return p.beta >= self.beta_floor
        return False

    @property
    def hclass(self) -> HypothesisClass:
        if self.kind == "rich":
            return RichFamilyParams(self.c, self.c_prime, 0.25).hclass
        return TWO_POINT_CLASS


def parse_family(text: str, ell: int | None = None) -> AdmissibleFamily:
    """Parse ``pi0``, ``pi1``, ``piell[:ell]``, ``pic:c``, ``rich[:c:c_prime]``."""
    parts = text.strip().lower().split(":")
    kind = parts[0]
    try:
        if kind in ("pi0", "pi1"):
            return AdmissibleFamily(kind)
        if kind == "piell":
            return AdmissibleFamily("piell", ell=int(parts[1]) if len(parts) > 1 else ell)
        if kind == "pic":
            return AdmissibleFamily("pic", c=float(parts[1]))
        if kind == "rich":
            c = float(parts[1]) if len(parts) > 1 else 1.0
            cp = float(parts[2]) if len(parts) > 2 else c
            return AdmissibleFamily("rich", c=c, c_prime=cp)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad family {text!r}: {exc}") from exc
    raise ValueError(f"unknown family {text!r}")


def _with_injected(axis: np.ndarray, extra: Sequence[float], lo: float, hi: float) -> np.ndarray:
    pts = list(axis) + [v for v in extra if lo <= v <= hi]
    return np.unique(np.array(pts, dtype=float))


def family_params(family: AdmissibleFamily, grid: GridSpec = GridSpec()) -> list:
    """Parameter objects of the grid members (TwoPointParams or RichFamilyParams)."""
    if family.kind == "explicit":
        return [m.params for m in family.members]
    if grid.ell is not None:
        family = family.at(grid.ell)
    extra = grid.injected()
    top = min(grid.hi, 0.5 - 1e-12)
    if family.kind == "rich":
        alphas = _with_injected(grid.axis(grid.n_alpha), extra, 0.0, top)
        alphas = alphas[(alphas > 0) & (alphas < 0.5)]
        out = [RichFamilyParams(family.c, family.c_prime, float(a)) for a in alphas]
    elif family.kind == "pi1":
        alphas = _with_injected(grid.axis(grid.n_alpha), extra, 0.0, top)
        alphas = alphas[(alphas > 0) & (alphas < 0.5)]
        out = [TwoPointParams(float(a), float(a), s) for a in alphas for s in (+1, -1)]
    else:
        floor = family.beta_floor
        betas = _with_injected(grid.axis(grid.n_beta), extra + ([floor] if floor > 0 else []), floor, top)
        betas = betas[(betas >= floor) & (betas > 0) & (betas < 0.5)]
        alphas = _with_injected(grid.axis(grid.n_alpha), extra, 0.0, top)
        alphas = alphas[(alphas > 0) & (alphas < 0.5)]
        out = [TwoPointParams(float(a), float(b), s) for a in alphas for b in betas for s in (+1, -1)]
    if not out:
        raise FamilyError(f"family {family.label} admits no grid point")
    return out


def materialize_family(family: AdmissibleFamily, grid: GridSpec = GridSpec()) -> list[FiniteLabeledDistribution]:
    """Realize the family as a finite list of member distributions.

    Rich families contribute both ``P_alpha`` and ``P_-alpha`` for each grid
    alpha. Raises FamilyError when the constraints exclude every grid point.
    """
    if family.kind == "explicit":
        return list(family.members)
    if grid.ell is not None:
        family = family.at(grid.ell)
    members = []
    for p in family_params(family, grid):
        if isinstance(p, RichFamilyParams):
            members.extend(p.materialize())
        else:
            members.append(p.materialize())
    return members
