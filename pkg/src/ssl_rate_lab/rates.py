"""Log-log rate fitting for learning curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class FitError(ValueError):
    pass


@dataclass
class RateSeries:
    """(ell, risk) points with a least-squares slope of log(risk) on log(ell).

    ``fit_window`` is the half-open index range of ``points`` used in the fit;
    ``stderr`` is the slope's standard error (0 for an exact power law or a
    three-point fit with zero residual).
    """

    points: list[tuple[float, float]]
    fitted_slope: float
    intercept: float
    fit_window: tuple[int, int]
    residual: float
    stderr: float = 0.0
    window_slopes: list[float] = field(default_factory=list)

    @property
    def band(self) -> tuple[float, float]:
        """Slope +/- 2 standard errors."""
        return self.fitted_slope - 2 * self.stderr, self.fitted_slope + 2 * self.stderr

    @property
    def super_polynomial(self) -> bool:
        """True when the slope magnitude grows across successive 3-point windows."""
        s = np.abs(self.window_slopes)
        return len(s) >= 2 and bool(np.all(np.diff(s) > 0))


def loglog_fit(ells, risks) -> tuple[float, float, float, float]:
    """(slope, intercept, rms residual, slope stderr) of log(risk) against log(ell)."""
    x = np.log(np.asarray(ells, dtype=float))
    y = np.log(np.asarray(risks, dtype=float))
    if len(x) < 2:
        raise FitError("need at least two points")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(math.sqrt(np.mean(resid**2)))
    dof = len(x) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = float(math.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 and sxx > 0 else 0.0
    return float(coef[0]), float(coef[1]), rms, stderr


def fit_rate(points, drop_fraction: float = 1 / 3, min_points: int = 3) -> RateSeries:
    """Fit a power law to (ell, risk) points.

    The smallest ``drop_fraction`` of the ell values is left out of the fit to
    reduce transient bias. Points with risk <= 0 are rejected from the window.
    """
    pts = sorted((float(a), float(b)) for a, b in points)
    if len(pts) < min_points:
        raise FitError(f"need at least {min_points} points, got {len(pts)}")
    start = int(math.floor(len(pts) * drop_fraction))
    if len(pts) - start < min_points:
        start = len(pts) - min_points
    window = [(a, b) for a, b in pts[start:] if b > 0 and math.isfinite(b)]
    if len(window) < min_points:
        raise FitError(f"only {len(window)} positive points in the fit window")
    slope, intercept, rms, stderr = loglog_fit(*zip(*window))
    positive = [(a, b) for a, b in pts if b > 0 and math.isfinite(b)]
    windows = [loglog_fit(*zip(*positive[i:i + 3]))[0] for i in range(len(positive) - 2)]
    return RateSeries(pts, slope, intercept, (start, len(pts)), rms, stderr, windows)
