"""Statistical verification suite.

One-sample Kolmogorov-Smirnov normality testing with the Stephens
small-sample correction on the asymptotic Kolmogorov tail, sample moments,
discrete KL divergence, and histogram export. Everything is a pure function
over immutable samples; batch protocols are order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .normal import std_normal_cdf

__all__ = [
    "KSReport",
    "ks_statistic",
    "ks_p_value",
    "ks_test",
    "normality_batch",
    "sample_moments",
    "discrete_kl",
    "histogram_csv",
]

ALPHA = 0.05

_SERIES_TOL = 1e-12
# Below this effective statistic the Kolmogorov tail is 1 to double precision.
_LAMBDA_FLOOR = 0.01


def ks_statistic(sample) -> float:
    """Sup-distance of a sorted sample against the standard normal CDF.

    D = max_i max(i/n - Phi(x_i), Phi(x_i) - (i-1)/n).
    """
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("sample must be a non-empty 1-D sequence")
    if not np.isfinite(x).all():
        raise ValueError("sample must be finite")
    if (np.diff(x) < 0).any():
        raise ValueError("sample must be sorted ascending")
    n = x.size
    cdf = np.asarray(std_normal_cdf(x))
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_p_value(d: float, n: int) -> float:
    """Asymptotic Kolmogorov tail with the Stephens effective statistic
    lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D, truncated when terms drop
    below 1e-12 and clamped to [0, 1].
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if d <= 0.0:
        return 1.0
    rn = math.sqrt(n)
    lam = (rn + 0.12 + 0.11 / rn) * d
    if lam < _LAMBDA_FLOOR:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, 1001):
        term = math.exp(-2.0 * (j * lam) ** 2)
        if term < _SERIES_TOL:
            break
        total += sign * term
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


@dataclass(frozen=True)
class KSReport:
    n: int
    statistic: float
    p_value: float
    accept_h0: bool


def ks_test(sample) -> KSReport:
    """Sort, compute D and its p-value, accept H0 iff p >= 0.05."""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    d = ks_statistic(x)
    p = ks_p_value(d, x.size)
    return KSReport(n=x.size, statistic=d, p_value=p, accept_h0=p >= ALPHA)


def normality_batch(samples: Iterable[np.ndarray], trials: int) -> float:
    """Fraction of the first `trials` samples whose K-S test accepts H0."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    accepted = 0
    seen = 0
    for sample in samples:
        accepted += ks_test(sample).accept_h0
        seen += 1
        if seen == trials:
            break
    if seen != trials:
        raise ValueError(f"generator produced {seen} samples, needed {trials}")
    return accepted / trials


def sample_moments(values) -> tuple[float, float]:
    """Two-pass sample mean and unbiased variance."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError(f"need at least 2 values for a variance, got {x.size}")
    mean = float(np.mean(x))
    centered = x - mean
    var = float(np.dot(centered, centered) / (x.size - 1))
    return mean, var


def _validate_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if (p < 0).any() or not np.isfinite(p).all():
        raise ValueError(f"{name} must be non-negative and finite")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must sum to 1 within 1e-12, got {p.sum()!r}")
    return p


def discrete_kl(p, q) -> float:
    """KL divergence sum(p * log(p/q)) in nats, with 0*log(0) = 0.

    Returns +inf when q vanishes somewhere p does not (absolute continuity
    violated); that is a signal, not an error.
    """
    p = _validate_distribution(p, "p")
    q = _validate_distribution(q, "q")
    if p.shape != q.shape:
        raise ValueError("p and q must share one outcome set")
    support = p > 0.0
    if (q[support] == 0.0).any():
        return math.inf
    ps = p[support]
    return float(np.sum(ps * np.log(ps / q[support])))


def histogram_csv(values, bins: int, value_range: tuple[float, float]):
    """Rows (bin_lo, bin_hi, count, density); densities integrate to 1 over
    the covered range (values outside the range are dropped).
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not lo < hi:
        raise ValueError(f"empty range ({lo}, {hi})")
    x = np.asarray(values, dtype=np.float64).ravel()
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    total = counts.sum()
    widths = np.diff(edges)
    density = counts / (total * widths) if total else np.zeros_like(widths)
    return [
        (float(edges[i]), float(edges[i + 1]), int(counts[i]), float(density[i]))
        for i in range(bins)
    ]
