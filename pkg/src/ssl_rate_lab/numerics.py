"""Log-space binomial/multinomial weights, composition enumeration, and sums."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, xlogy

# Binomial sums over more than this many outcomes are truncated to a window
# of +/- TRUNCATION_SD standard deviations around the mean(s).
TRUNCATION_SD = 12.0
TRUNCATION_MIN_N = 20_000
# Terms below max-logpmf - WINDOW_LOG_MARGIN are negligible (< 1e-30 relative).
WINDOW_LOG_MARGIN = 70.0


def fsum(values) -> float:
    """Compensated (exactly rounded) sum of an array of floats."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def log_binom_coef(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def binom_logpmf(k, n, p):
    """log Bin(n, p)(k), with the 0*log(0) = 0 convention at p in {0, 1}."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    return log_binom_coef(n, k) + xlogy(k, p) + xlogy(n - k, 1.0 - p)


def binom_pmf(k, n, p):
    return np.exp(binom_logpmf(k, n, p))


def multinomial_logpmf(counts, probs):
    """Log multinomial weight of count vectors along the last axis."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1)
    return (gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=-1)
            + xlogy(counts, np.asarray(probs, dtype=float)).sum(axis=-1))


def compositions(n: int, k: int) -> np.ndarray:
    """All vectors of k nonnegative integers summing to n, shape (C(n+k-1, k-1), k)."""
    if k < 1:
        raise ValueError("k must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n, -1, -1):
        rest = compositions(n - first, k - 1)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def n_compositions(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def binom_window(n: int, ps) -> tuple[int, int]:
    """Index range [lo, hi] that carries all non-negligible Bin(n, p) mass for every p in ps.

    Small n returns the full range. Otherwise the range is +/- TRUNCATION_SD
    standard deviations around each mean, widened until the boundary log-pmf
    sits WINDOW_LOG_MARGIN below the peak.
    """
    if n < TRUNCATION_MIN_N:
        return 0, n
    lo, hi = n, 0
    for p in np.atleast_1d(ps):
        mean = n * p
        sd = math.sqrt(max(n * p * (1.0 - p), 1.0))
        a = max(0, int(math.floor(mean - TRUNCATION_SD * sd)) - 1)
        b = min(n, int(math.ceil(mean + TRUNCATION_SD * sd)) + 1)
        mode = min(max(int(round(mean)), 0), n)
        peak = float(binom_logpmf(mode, n, p))
        while a > 0 and binom_logpmf(a, n, p) > peak - WINDOW_LOG_MARGIN:
            a = max(0, a - int(sd) - 1)
        while b < n and binom_logpmf(b, n, p) > peak - WINDOW_LOG_MARGIN:
            b = min(n, b + int(sd) + 1)
        lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def binom_support(n: int, ps) -> np.ndarray:
    """Indices in the union of the per-p windows; unlike ``binom_window`` this skips the gap between far-apart means."""
    spans = sorted(binom_window(n, [p]) for p in np.atleast_1d(ps))
    merged = [list(spans[0])]
    for a, b in spans[1:]:
        if a <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return np.concatenate([np.arange(a, b + 1) for a, b in merged])
