"""Deterministic noise <-> sample maps driven by analytic score fields.

The state follows dx/dt = (s'(t)/s(t)) x - s(t)^2 sigma'(t) sigma(t)
score(x / s(t), sigma(t)), integrated with an explicit second-order
predictor-corrector (Heun) over a decreasing time grid. Integrating from T
down to epsilon turns noise into a sample; the reversed walk recovers the
noise. The sample is taken at t = epsilon rather than 0, which keeps the
backward walk away from the sigma(0) = 0 degeneracy, and the corrector runs
on every step including the last one since the grid never reaches sigma = 0.

Score fields are isotropic Gaussian mixtures evaluated analytically with
log-sum-exp stabilization; they stand in for learned models so that
invertibility is exactly auditable. For a single centered component the
trajectory has the closed form x(t) = x(T) sqrt((s0^2+t^2)/(s0^2+T^2))
(default scheduler), which the self-test integrates against.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .codec import NoiseVector
from .errors import DivergenceError

__all__ = [
    "Scheduler",
    "default_scheduler",
    "TimeGrid",
    "build_time_grid",
    "GaussianMixtureSpec",
    "mixture_score",
    "zero_score",
    "drift",
    "Direction",
    "heun_integrate",
    "generate",
    "invert",
    "quantize",
    "single_gaussian_closed_form",
]

ScoreFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Scheduler:
    """Noise level sigma(t), scale s(t), their derivatives, and the horizon."""

    sigma: Callable[[float], float]
    sigma_dot: Callable[[float], float]
    scale: Callable[[float], float]
    scale_dot: Callable[[float], float]
    T: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < self.T:
            raise ValueError(f"need 0 < epsilon < T, got ({self.epsilon}, {self.T})")
        if self.sigma(self.epsilon) <= 0.0 or self.scale(self.epsilon) <= 0.0:
            raise ValueError("sigma and scale must be positive on [epsilon, T]")


def default_scheduler(T: float = 80.0, epsilon: float = 1e-6) -> Scheduler:
    """The identity-scale family sigma(t) = t, s(t) = 1."""
    return Scheduler(
        sigma=lambda t: t,
        sigma_dot=lambda t: 1.0,
        scale=lambda t: 1.0,
        scale_dot=lambda t: 0.0,
        T=float(T),
        epsilon=float(epsilon),
    )


@dataclass(frozen=True)
class TimeGrid:
    """Strictly decreasing times from T to epsilon."""

    steps: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.float64)
        object.__setattr__(self, "steps", steps)
        if steps.ndim != 1 or steps.size < 2:
            raise ValueError("grid needs at least two points")
        if (np.diff(steps) >= 0).any():
            raise ValueError("grid must be strictly decreasing")

    @property
    def n_steps(self) -> int:
        return self.steps.size - 1


def build_time_grid(n_steps: int, scheduler: Scheduler, rho: float = 7.0) -> TimeGrid:
    """Power-law spacing t_i = (T^(1/rho) + (i/N)(eps^(1/rho) - T^(1/rho)))^rho
    with bit-exact endpoints; rho = 1 degenerates to uniform spacing.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if rho <= 0.0:
        raise ValueError(f"rho must be > 0, got {rho}")
    T, eps = scheduler.T, scheduler.epsilon
    frac = np.arange(n_steps + 1) / n_steps
    t = (T ** (1.0 / rho) + frac * (eps ** (1.0 / rho) - T ** (1.0 / rho))) ** rho
    t[0], t[-1] = T, eps
    return TimeGrid(t)


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Isotropic Gaussian mixture: weights (J,), means (J, d), base stds (J,)."""

    weights: np.ndarray
    means: np.ndarray
    s0: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=np.float64))
        if not (w.shape[0] == mu.shape[0] == s0.shape[0]):
            raise ValueError("weights, means and s0 must agree on the component count")
        if (w <= 0).any():
            raise ValueError("component weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
        if (s0 <= 0).any():
            raise ValueError("base standard deviations must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "s0", s0)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @classmethod
    def single(cls, dim: int, mean: float = 0.0, s0: float = 1.0) -> "GaussianMixtureSpec":
        return cls(np.array([1.0]), np.full((1, dim), mean), np.array([s0]))

    def score(self) -> ScoreFn:
        return lambda x, sigma: mixture_score(self, x, sigma)


def mixture_score(spec: GaussianMixtureSpec, x, sigma: float) -> np.ndarray:
    """Gradient of log sum_j w_j N(x; mu_j, (s0_j^2 + sigma^2) I).

    Posterior component weights are formed with log-sum-exp stabilization, so
    the evaluation stays finite arbitrarily far from the means.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    var = spec.s0**2 + sigma**2  # (J,)
    diff = x[..., None, :] - spec.means  # (..., J, d)
    sq = np.sum(diff * diff, axis=-1)  # (..., J)
    d = x.shape[-1]
    logw = np.log(spec.weights) - 0.5 * d * np.log(2.0 * np.pi * var) - sq / (2.0 * var)
    logw = logw - logw.max(axis=-1, keepdims=True)
    post = np.exp(logw)
    post /= post.sum(axis=-1, keepdims=True)
    return np.sum(post[..., None] * (-diff / var[:, None]), axis=-2)


def zero_score(x, sigma: float) -> np.ndarray:
    return np.zeros_like(np.asarray(x, dtype=np.float64))


def drift(x, t: float, scheduler: Scheduler, score: ScoreFn) -> np.ndarray:
    """Right-hand side of the flow at time t.

    For the default scheduler this is -t * score(x, t).
    """
    if not scheduler.epsilon <= t <= scheduler.T:
        raise ValueError(
            f"t={t} outside [{scheduler.epsilon}, {scheduler.T}]"
        )
    x = np.asarray(x, dtype=np.float64)
    s = scheduler.scale(t)
    sg = scheduler.sigma(t)
    lin = scheduler.scale_dot(t) / s
    return lin * x - (s * s) * scheduler.sigma_dot(t) * sg * score(x / s, sg)


class Direction(Enum):
    NOISE_TO_SAMPLE = "noise_to_sample"
    SAMPLE_TO_NOISE = "sample_to_noise"


def heun_integrate(x0, grid: TimeGrid, direction: Direction,
                   scheduler: Scheduler, score: ScoreFn) -> np.ndarray:
    """Explicit trapezoidal walk along the grid (reversed for SAMPLE_TO_NOISE).

    Each step takes an Euler predictor then averages the endpoint drifts; the
    result is deterministic and independent of batching.
    """
    times = grid.steps
    if not (times[0] == scheduler.T and times[-1] == scheduler.epsilon):
        raise ValueError("grid endpoints must match the scheduler horizon")
    if direction is Direction.SAMPLE_TO_NOISE:
        times = times[::-1]
    x = np.array(x0, dtype=np.float64, copy=True)
    for i in range(times.size - 1):
        t_cur, t_next = float(times[i]), float(times[i + 1])
        h = t_next - t_cur
        d1 = drift(x, t_cur, scheduler, score)
        x_pred = x + h * d1
        d2 = drift(x_pred, t_next, scheduler, score)
        x = x + h * 0.5 * (d1 + d2)
        if not np.isfinite(x).all():
            raise DivergenceError(i)
    return x


def generate(noise: NoiseVector, score: ScoreFn, scheduler: Scheduler,
             grid: TimeGrid) -> np.ndarray:
    """Scale unit noise by sigma(T), walk T -> epsilon, return the sample x_eps."""
    x0 = noise.values * scheduler.sigma(scheduler.T)
    return heun_integrate(x0, grid, Direction.NOISE_TO_SAMPLE, scheduler, score)


def invert(sample, score: ScoreFn, scheduler: Scheduler, grid: TimeGrid) -> NoiseVector:
    """Walk epsilon -> T and rescale back to a unit NoiseVector."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    xT = heun_integrate(x, grid, Direction.SAMPLE_TO_NOISE, scheduler, score)
    return NoiseVector(xT / scheduler.sigma(scheduler.T), (x.size,))


def quantize(x, levels: int, lo: float, hi: float) -> np.ndarray:
    """Clamp to [lo, hi] and round to the nearest of `levels` uniform values."""
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    if not lo < hi:
        raise ValueError(f"empty range ({lo}, {hi})")
    x = np.asarray(x, dtype=np.float64)
    step = (hi - lo) / (levels - 1)
    idx = np.rint((np.clip(x, lo, hi) - lo) / step)
    return lo + idx * step


def single_gaussian_closed_form(xT, t: float, scheduler: Scheduler,
                                mean: float = 0.0, s0: float = 1.0) -> np.ndarray:
    """Exact trajectory for one isotropic component under the default
    scheduler: x(t) = mean + (x(T) - mean) * sqrt((s0^2+t^2)/(s0^2+T^2)).
    """
    xT = np.asarray(xT, dtype=np.float64)
    T = scheduler.T
    ratio = np.sqrt((s0 * s0 + t * t) / (s0 * s0 + T * T))
    return mean + (xT - mean) * ratio
