"""Closed-form KL, Pinsker, Le Cam, Hoeffding and family-specific bound calculators.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable


class BoundDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    side: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ValueError("side must be 'upper' or 'lower'")
        if not self.value >= 0:
            raise ValueError(f"bound {self.name} is negative or NaN: {self.value}")


def _bias_log_ratio(x: float) -> float:
    """log((1 + 2x) / (1 - 2x))."""
    return math.log1p(2 * x) - math.log1p(-2 * x)


def _check_bias(name, x, allow_zero=True):
    lo_ok = x >= 0 if allow_zero else x > 0
    if not (lo_ok and x < 0.5):
        raise BoundDomainError(f"{name} must lie in [0, 1/2), got {x}")


def kl_two_point(alpha: float, beta: float, ell: int, u: int = 0) -> float:
    """KL between the (ell, u)-sample laws of P_{alpha beta +} and P_{alpha beta -}."""
    _check_bias("alpha", alpha)
    _check_bias("beta", beta)
    return 2 * ell * alpha * _bias_log_ratio(alpha) + 2 * (ell + u) * beta * _bias_log_ratio(beta)


def kl_two_point_relaxed(alpha: float, beta: float, ell: int, u: int = 0) -> float:
    """16 ell alpha^2 + 16 (ell + u) beta^2, valid as an upper bound for alpha, beta < 1/4."""
    return 16 * ell * alpha**2 + 16 * (ell + u) * beta**2


def kl_rich(c: float, alpha: float, ell: int) -> tuple[float, float]:
    """(exact KL, relaxation 16 c ell alpha^2) between P_alpha^ell and P_-alpha^ell of a rich family."""
    if not 0 < c <= 1:
        raise BoundDomainError(f"c must lie in (0, 1], got {c}")
    _check_bias("alpha", alpha)
    return 2 * c * ell * alpha * _bias_log_ratio(alpha), 16 * c * ell * alpha**2


def pinsker_tv_bound(kl_value: float) -> float:
    if kl_value < 0:
        raise BoundDomainError("KL must be nonnegative")
    return min(1.0, math.sqrt(kl_value / 2))


def le_cam_error_floor(tv_upper: float) -> float:
    """Minimum two-hypothesis testing error given TV <= tv_upper."""
    if not 0 <= tv_upper <= 1:
        raise BoundDomainError("tv_upper must lie in [0, 1]")
    return (1 - tv_upper) / 2


def two_point_error_floor(alpha: float, beta: float, ell: int, u: int = 0) -> float:
    """(1 - sqrt(8 ell alpha^2 + 8 (ell + u) beta^2)) / 2, floored at 0."""
    return le_cam_error_floor(min(1.0, math.sqrt(8 * ell * alpha**2 + 8 * (ell + u) * beta**2)))


def two_point_le_cam_bound(alpha: float, beta: float, ell: int, u: int = 0) -> float:
    """Excess-risk lower bound 2 alpha x error floor for the coin pair."""
    return 2 * alpha * two_point_error_floor(alpha, beta, ell, u)


def hoeffding_majority_upper(alpha: float, beta: float, ell: int, u: int = 0) -> float:
    """2 alpha exp(-2 beta^2 (ell + u)): wrong-pick excess times the Hoeffding tail."""
    _check_bias("alpha", alpha)
    _check_bias("beta", beta)
    return 2 * alpha * math.exp(-2 * beta**2 * (ell + u))


def pi_c_sl_floor(c: float, ell: int) -> float:
    if not 0 < c < 0.25:
        raise BoundDomainError(f"c must lie in (0, 1/4), got {c}")
    return c / 2 * math.exp(-32 * ell * c**2)


def rich_alpha(c: float, ell: int) -> float:
    """The label bias 1/sqrt(32 ell c) at which the rich-family floor is stated."""
    return 1 / math.sqrt(32 * ell * c)


def rich_family_floor(c: float, c_prime: float, ell: int) -> float:
    """(2c' - c) / (16 sqrt(2c)) / sqrt(ell); c' < c/2 is handled by swapping labels."""
    if not 0 < c <= 1:
        raise BoundDomainError(f"c must lie in (0, 1], got {c}")
    if c_prime == c / 2:
        raise BoundDomainError("c_prime == c/2: the family is not rich")
    if c_prime < c / 2:
        c_prime = c - c_prime
    return (2 * c_prime - c) / (16 * math.sqrt(2 * c)) / math.sqrt(ell)


RateFn = Callable[[int, int], float]


def mixture_bounds(r_a: RateFn, r_b: RateFn, ell: int, u: int) -> tuple[float, float]:
    """(lower, upper) bracket of the half/half mixture problem's risk from component rates.

    ``r_a(ell, u)``, ``r_b(ell, u)`` are component risks. The upper side
    evaluates them at (ell // 4, u // 4) and adds the split-imbalance tails
    2 exp(-ell/8) + 2 exp(-u/8); it needs u >= ell.
    """
    if u < ell:
        raise BoundDomainError(f"upper mixture bound needs u >= ell (got ell={ell}, u={u})")
    lower = max(r_a(ell, u), r_b(ell, u)) / 2
    upper = (0.5 * r_a(ell // 4, u // 4) + 0.5 * r_b(ell // 4, u // 4)
             + 2 * math.exp(-ell / 8) + 2 * math.exp(-u / 8))
    return lower, upper


def bound_reports(alpha=None, beta=None, ell=1, u=0, c=None, c_prime=None) -> list[BoundReport]:
    """Every bound computable from the given parameters."""
    out = []
    if alpha is not None and beta is not None:
        inp = {"alpha": alpha, "beta": beta, "ell": ell, "u": u}
        kl = kl_two_point(alpha, beta, ell, u)
        tv = pinsker_tv_bound(kl)
        out += [
            BoundReport("kl_two_point", kl, "upper", inp),
            BoundReport("kl_two_point_relaxed", kl_two_point_relaxed(alpha, beta, ell, u), "upper", inp),
            BoundReport("pinsker_tv", tv, "upper", inp),
            BoundReport("le_cam_error_floor", le_cam_error_floor(tv), "lower", inp),
            BoundReport("le_cam_excess_floor", 2 * alpha * le_cam_error_floor(tv), "lower", inp),
            BoundReport("hoeffding_majority", hoeffding_majority_upper(alpha, beta, ell, u), "upper", inp),
        ]
    if c is not None:
        if alpha is not None:
            exact, relaxed = kl_rich(c, alpha, ell)
            inp = {"c": c, "alpha": alpha, "ell": ell}
            out += [BoundReport("kl_rich", exact, "upper", inp),
                    BoundReport("kl_rich_relaxed", relaxed, "upper", inp)]
        if 0 < c < 0.25:
            out.append(BoundReport("pi_c_sl_floor", pi_c_sl_floor(c, ell), "lower", {"c": c, "ell": ell}))
        if c_prime is not None:
            out.append(BoundReport("rich_family_floor", rich_family_floor(c, c_prime, ell), "lower",
                                   {"c": c, "c_prime": c_prime, "ell": ell}))
    return out
