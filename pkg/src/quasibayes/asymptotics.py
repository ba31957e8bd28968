"""Asymptotic posterior of G(A) given x_{1:n}: variances, rates, credible sets.

For sets A_1..A_k the conditional covariance estimate is::

    C_n[i, j] = int P_{G_n}(A_i | x) P_{G_n}(A_j | x) dF_{G_n}(x) - G_n(A_i) G_n(A_j)

and sqrt(r_n) (G(A) - G_n(A)) is asymptotically N(0, C) with
r_n = (2 beta - 1) n^(2 beta - 1) for gains (alpha + n)^-beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .errors import UnsupportedScheduleError
from .kernels import Kernel
from .mixing import MixingMeasure, SetLike
from .recursion import (
    EstimatorState,
    Explicit,
    Piecewise,
    Polynomial,
    WeightSchedule,
    _posterior_values,
    predictive_density,
)

__all__ = [
    "DEFAULT_EPSILON",
    "x_quadrature",
    "posterior_set_probabilities",
    "v_hat",
    "cov_hat",
    "rate",
    "credible_interval",
    "Ellipsoid",
    "credible_region",
    "marginal_posterior_approx",
    "PosteriorSummary",
    "summarize",
]

DEFAULT_EPSILON = 1e-6
_TAIL = 1e-6
_DISCRETE_TAIL = 1e-10


def _support(mix: MixingMeasure) -> tuple[float, float]:
    live = mix.nodes[mix.values > 0]
    if live.size == 0:
        live = mix.nodes
    return float(live.min()), float(live.max())


def _trapezoid_weights(xs: np.ndarray) -> np.ndarray:
    d = np.diff(xs)
    w = np.zeros_like(xs)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def x_quadrature(mix: MixingMeasure, kernel: Kernel, tail: float | None = None):
    """Observation nodes and weights covering all but ``tail`` of the mass of f_G.

    Location kernels use a uniform trapezoid grid with spacing at most a tenth
    of the kernel scale (and of the parameter grid step). Scale families use a
    geometric grid whose log-spacing is a tenth of the relative spread. The
    window starts at kernel quantiles over the support and widens until the
    predictive mass captured reaches 1 - tail. Poisson sums over 0..upper.
    """
    lo_t, hi_t = _support(mix)
    if kernel.discrete:
        tail = _DISCRETE_TAIL if tail is None else tail
        _, hi = kernel.support_window(lo_t, hi_t, tail)
        xs = np.arange(0.0, hi + 1.0)
        return xs, np.ones_like(xs)
    tail = _TAIL if tail is None else tail
    lo, hi = kernel.support_window(lo_t, hi_t, tail / 4)
    spacing = kernel.scale(lo_t, hi_t) / 10
    geometric = kernel.multiplicative
    step = getattr(mix, "step", None)
    if step is not None and not geometric:
        spacing = min(spacing, step)
    for _ in range(30):
        if geometric:
            npts = max(int(math.ceil(math.log(hi / lo) / spacing)) + 1, 201)
            xs = np.geomspace(lo, hi, npts)
        else:
            npts = max(int(math.ceil((hi - lo) / spacing)) + 1, 201)
            xs = np.linspace(lo, hi, npts)
        w = _trapezoid_weights(xs)
        mass = float(np.sum(w * predictive_density(mix, xs, kernel)))
        if mass >= 1 - tail:
            return xs, w
        if geometric:
            lo, hi = lo / 4, hi * 4
        else:
            width = hi - lo
            lo, hi = lo - width / 4, hi + width / 4
    return xs, w


def posterior_set_probabilities(state: EstimatorState, sets: Sequence[SetLike], xs: np.ndarray) -> np.ndarray:
    """Matrix of P_{G_n}(A_j | x_i), shape (len(xs), len(sets))."""
    mix = state.current
    loglik = state.kernel.log_density(np.asarray(xs, dtype=float)[:, None], mix.nodes[None, :])
    post, ok = _posterior_values(mix.values[None, :], loglik, mix.quad_weights)
    post = np.where(ok[:, None], post, 0.0)
    c = np.stack([mix.set_weights(A) for A in sets], axis=1)
    return post @ c


def cov_hat(state: EstimatorState, sets: Sequence[SetLike]) -> np.ndarray:
    """The k x k matrix C_n(A_1..A_k) by quadrature over the observation space.

    Evaluated in centred form, Sum q_i (P_i - Pbar)(P_i - Pbar)^T with q the
    normalised quadrature weights of f_{G_n}; this equals the defining
    expression exactly when the quadrature is exact and is PSD by
    construction otherwise.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one set")
    mix, kernel = state.current, state.kernel
    xs, w = x_quadrature(mix, kernel)
    q = w * predictive_density(mix, xs, kernel)
    q = q / q.sum()
    P = posterior_set_probabilities(state, sets, xs)
    D = P - q @ P
    C = (D * q[:, None]).T @ D
    C = 0.5 * (C + C.T)
    d = np.clip(np.diag(C), 0.0, None)
    C[np.diag_indices_from(C)] = d
    return C


def v_hat(state: EstimatorState, region: SetLike) -> float:
    """V_{A,n} = int P_{G_n}(A | x)^2 dF_{G_n}(x) - G_n(A)^2, clamped at zero."""
    return float(cov_hat(state, [region])[0, 0])


def rate(schedule: WeightSchedule, n: int) -> float:
    """r_n = (2 beta - 1) n^(2 beta - 1), beta the tail exponent of the gains.

    Piecewise schedules use their tail exponent; explicit schedules and
    beta <= 1/2 are refused.
    """
    if isinstance(schedule, Explicit) or not isinstance(schedule, (Polynomial, Piecewise)):
        raise UnsupportedScheduleError("rate needs a polynomial-tail schedule")
    beta = schedule.tail_exponent
    if not beta > 0.5:
        raise UnsupportedScheduleError(f"tail exponent {beta} must exceed 1/2")
    if n < 1:
        raise ValueError("n must be at least 1")
    return (2 * beta - 1) * n ** (2 * beta - 1)


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    return float(stats.norm.ppf(0.5 + level / 2))


def credible_interval(state: EstimatorState, region: SetLike, level: float = 0.95,
                      epsilon: float = DEFAULT_EPSILON, vhat: float | None = None) -> tuple[float, float]:
    """G_n(A) -/+ z sqrt(max(V_{A,n}, eps) / r_n), clipped to [0, 1]."""
    r = rate(state.schedule, state.n)
    point = state.current.measure_of(region)
    v = v_hat(state, region) if vhat is None else vhat
    half = _z(level) * math.sqrt(max(v, epsilon) / r)
    return max(point - half, 0.0), min(point + half, 1.0)


@dataclass
class Ellipsoid:
    """{s : (s - center)^T shape (s - center) <= radius2}."""

    center: np.ndarray
    shape: np.ndarray
    radius2: float

    def distance2(self, s) -> float:
        d = np.asarray(s, dtype=float) - self.center
        return float(d @ self.shape @ d)

    def contains(self, s) -> bool:
        return self.distance2(s) <= self.radius2

    def semi_axes(self) -> np.ndarray:
        return np.sqrt(self.radius2 / linalg.eigvalsh(self.shape))


def credible_region(state: EstimatorState, sets: Sequence[SetLike], level: float = 0.95,
                    epsilon: float = DEFAULT_EPSILON, cov: np.ndarray | None = None) -> Ellipsoid:
    """Ellipsoid with shape (C_n + eps I)^-1 and radius^2 = chi2_{level, k} / r_n."""
    sets = list(sets)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    r = rate(state.schedule, state.n)
    C = cov_hat(state, sets) if cov is None else np.asarray(cov, dtype=float)
    k = len(sets)
    M = C + epsilon * np.eye(k)
    shape = linalg.solve(M, np.eye(k), assume_a="pos")
    shape = 0.5 * (shape + shape.T)
    center = np.array([state.current.measure_of(A) for A in sets])
    return Ellipsoid(center, shape, float(stats.chi2.ppf(level, k)) / r)


def marginal_posterior_approx(state: EstimatorState, region: SetLike,
                              epsilon: float = DEFAULT_EPSILON) -> tuple[float, float]:
    """Gaussian approximation (G_n(A), max(V_{A,n}, eps) / r_n) of the law of G(A) given the data."""
    r = rate(state.schedule, state.n)
    return state.current.measure_of(region), max(v_hat(state, region), epsilon) / r


@dataclass
class PosteriorSummary:
    n: int
    sets: list
    point: np.ndarray
    vhat: np.ndarray
    rate: float
    level: float
    epsilon: float
    intervals: list = field(default_factory=list)
    region: Ellipsoid | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sets": [str(A) for A in self.sets],
            "point": self.point.tolist(),
            "vhat": self.vhat.ravel().tolist(),
            "k": len(self.sets),
            "rate": self.rate,
            "level": self.level,
            "epsilon": self.epsilon,
            "intervals": [list(iv) for iv in self.intervals],
            "region": None if self.region is None else {
                "center": self.region.center.tolist(),
                "shape": self.region.shape.ravel().tolist(),
                "radius2": self.region.radius2,
            },
        }


def summarize(state: EstimatorState, sets: Sequence[SetLike], level: float = 0.95,
              epsilon: float = DEFAULT_EPSILON) -> PosteriorSummary:
    """Point values, C_n, rate, marginal intervals and the joint region in one pass."""
    sets = list(sets)
    C = cov_hat(state, sets)
    r = rate(state.schedule, state.n)
    point = np.array([state.current.measure_of(A) for A in sets])
    intervals = [credible_interval(state, A, level, epsilon, vhat=C[i, i]) for i, A in enumerate(sets)]
    region = credible_region(state, sets, level, epsilon, cov=C)
    return PosteriorSummary(state.n, sets, point, C, r, level, epsilon, intervals, region)
