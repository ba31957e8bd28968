"""Newton's recursive estimate of a mixing distribution.

Given a prior guess ``G_0`` and gains ``alpha_n`` the estimate after the
n-th observation is::

    G_n = (1 - alpha_n) G_{n-1} + alpha_n P_{G_{n-1}}(. | x_n)

where ``P_H(. | x)`` is the one-observation Bayes posterior under prior ``H``.
A state that has consumed ``n`` observations updates with ``alpha_{n+1}``.
All Bayes-rule arithmetic runs in log space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateEvidenceError
from .kernels import Kernel
from .mixing import DiscreteMixing, GridDensity, MixingMeasure, _NORMALIZE_SLACK

__all__ = [
    "WeightSchedule",
    "Polynomial",
    "Piecewise",
    "Explicit",
    "parse_schedule",
    "EstimatorState",
    "posterior_given_x",
    "update",
    "fit",
    "gamma_weights",
    "reconstruct_from_gamma",
    "predictive_density",
    "log_predictive_density",
    "Classification",
    "classify",
    "classify_stream",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# weight schedules

class WeightSchedule:
    """A sequence of gains alpha_1, alpha_2, ... in (0, 1)."""

    #: True when sum alpha_n = inf and sum alpha_n^2 < inf hold analytically.
    summable_squares: bool = False

    def _alphas(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def weight(self, n: int) -> float:
        """alpha_n for n >= 1."""
        if n < 1:
            raise ValueError("schedules are indexed from 1")
        return float(self._alphas(np.array([n], dtype=float))[0])

    def weights(self, n: int, start: int = 1) -> np.ndarray:
        """alpha_start, ..., alpha_n."""
        return self._alphas(np.arange(start, n + 1, dtype=float))

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.spec


@dataclass(frozen=True)
class Polynomial(WeightSchedule):
    """alpha_n = (alpha + n) ** -beta."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")

    @property
    def summable_squares(self):
        return self.beta > 0.5

    @property
    def tail_exponent(self):
        return self.beta

    def _alphas(self, n):
        return np.power(self.alpha + n, -self.beta)

    @property
    def spec(self):
        return f"poly:alpha={self.alpha:g},beta={self.beta:g}"


@dataclass(frozen=True)
class Piecewise(WeightSchedule):
    """(alpha + n) ** -beta1 up to and including step n0, then (alpha + n) ** -beta2."""

    alpha: float = 100.0
    n0: int = 500
    beta1: float = 1.0
    beta2: float = 0.75

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.n0 < 0:
            raise ValueError("n0 must be nonnegative")
        for b in (self.beta1, self.beta2):
            if not 0 < b <= 1:
                raise ValueError("exponents must lie in (0, 1]")

    @property
    def summable_squares(self):
        return self.beta2 > 0.5

    @property
    def tail_exponent(self):
        return self.beta2

    def _alphas(self, n):
        beta = np.where(n <= self.n0, self.beta1, self.beta2)
        return np.power(self.alpha + n, -beta)

    @property
    def spec(self):
        return (f"piecewise:alpha={self.alpha:g},n0={self.n0:d},"
                f"beta1={self.beta1:g},beta2={self.beta2:g}")


@dataclass(frozen=True)
class Explicit(WeightSchedule):
    """A user-supplied finite list of gains. No asymptotic guarantee is claimed."""

    values: tuple = field(default=())

    def __post_init__(self):
        v = tuple(float(a) for a in self.values)
        if not all(0 < a < 1 for a in v):
            raise ValueError("every gain must lie in (0, 1)")
        object.__setattr__(self, "values", v)

    summable_squares = False

    def _alphas(self, n):
        idx = n.astype(int) - 1
        if idx.size and idx.max() >= len(self.values):
            raise IndexError(f"explicit schedule has only {len(self.values)} gains")
        return np.asarray(self.values)[idx]

    @property
    def spec(self):
        return "explicit:" + "|".join(repr(a) for a in self.values)


def parse_schedule(text: str) -> WeightSchedule:
    """``poly:alpha=1,beta=1``, ``piecewise:alpha=100,n0=500,beta1=1,beta2=0.75`` or ``explicit:0.5|0.3``."""
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    if name == "explicit":
        return Explicit(tuple(float(v) for v in rest.split("|") if v))
    params = {}
    for item in filter(None, rest.split(",")):
        k, sep, v = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        params[k.strip()] = float(v)
    if name in ("poly", "polynomial"):
        return Polynomial(params.get("alpha", 1.0), params.get("beta", 1.0))
    if name == "piecewise":
        return Piecewise(params.get("alpha", 100.0), int(params.get("n0", 500)),
                         params.get("beta1", 1.0), params.get("beta2", 0.75))
    raise ValueError(f"unknown schedule {name!r}")


# ---------------------------------------------------------------------------
# estimator state

@dataclass(frozen=True)
class EstimatorState:
    """The full state of the recursion: ``current`` is G_n after ``n`` observations."""

    kernel: Kernel
    schedule: WeightSchedule
    current: MixingMeasure
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        self.kernel.check_theta(self.current.nodes)

    @property
    def limit_absolutely_continuous(self) -> bool:
        """Whether the sufficient conditions for an a.s. absolutely continuous limit hold.

        Needs square-summable gains, an eligible kernel and a bounded prior
        density on a compact window (always true for a ``GridDensity``).
        """
        return (
            isinstance(self.current, GridDensity)
            and self.schedule.summable_squares
            and self.kernel.eligibility().square_ratio_condition
        )

    def report(self) -> dict:
        return {
            "n": self.n,
            "kernel": self.kernel.spec,
            "schedule": self.schedule.spec,
            "limit": ("limit a.s. absolutely continuous" if self.limit_absolutely_continuous
                      else "no absolute-continuity guarantee"),
        }


def _posterior_values(values, loglik, qw):
    """Normalised ``values * exp(loglik)`` along the last axis, plus an evidence mask.

    The evidence f_G(x) counts as degenerate when it is below the smallest
    normal double, i.e. when it would underflow outside log space.
    """
    with np.errstate(divide="ignore"):
        logp = np.log(values) + loglik
    top = np.max(logp, axis=-1, keepdims=True)
    ok = np.isfinite(top)
    w = np.exp(logp - np.where(ok, top, 0.0))
    z = np.sum(w * qw, axis=-1, keepdims=True)
    ok &= z > 0
    with np.errstate(divide="ignore"):
        ok &= top + np.log(np.where(ok, z, 1.0)) >= _LOG_TINY
    return w / np.where(ok, z, 1.0), ok[..., 0]


_LOG_TINY = float(np.log(np.finfo(float).tiny))


def _renormalize(values, qw):
    mass = np.sum(values * qw, axis=-1, keepdims=True)
    return np.where(np.abs(mass - 1.0) <= _NORMALIZE_SLACK, values, values / mass)


def _newton_values(values, loglik, qw, gain):
    """One step of the recursion on raw value arrays (last axis = layout).

    Returns the new values and the mask of rows whose evidence was finite;
    rows with degenerate evidence are returned unchanged.
    """
    post, ok = _posterior_values(values, loglik, qw)
    new = (1.0 - gain) * values + gain * post
    new = _renormalize(new, qw)
    if values.ndim > 1:
        new = np.where(ok[..., None], new, values)
    return new, ok


def posterior_given_x(state: EstimatorState, x) -> MixingMeasure:
    """The Bayes update of G_n after a single observation ``x``."""
    mix = state.current
    loglik = state.kernel.log_density(x, mix.nodes)
    post, ok = _posterior_values(mix.values, loglik, mix.quad_weights)
    if not ok:
        raise DegenerateEvidenceError(x)
    return mix.with_values(post)


def update(state: EstimatorState, x) -> EstimatorState:
    """Consume one observation: G_{n+1} = (1 - a) G_n + a P_{G_n}(. | x), a = alpha_{n+1}."""
    mix = state.current
    loglik = state.kernel.log_density(x, mix.nodes)
    gain = state.schedule.weight(state.n + 1)
    values, ok = _newton_values(mix.values, loglik, mix.quad_weights, gain)
    if not ok:
        raise DegenerateEvidenceError(x)
    return replace(state, n=state.n + 1, current=mix.with_values(values, normalize=False))


def fit(state: EstimatorState, xs: Sequence, skip_degenerate: bool = False) -> EstimatorState:
    """Left fold of ``update`` over ``xs``; cost is O(len(xs) * grid size).

    With ``skip_degenerate`` an observation whose predictive density is
    numerically zero is logged and skipped (``n`` does not advance).
    Otherwise ``DegenerateEvidenceError`` is raised with the failing index.
    """
    mix = state.current
    values = mix.values
    nodes, qw = mix.nodes, mix.quad_weights
    kernel, schedule = state.kernel, state.schedule
    n = state.n
    for i, x in enumerate(xs):
        loglik = kernel.log_density(x, nodes)
        new, ok = _newton_values(values, loglik, qw, schedule.weight(n + 1))
        if not ok:
            if skip_degenerate:
                log.warning("skipping observation %d (x=%r): degenerate evidence", i, float(x))
                continue
            raise DegenerateEvidenceError(x, index=i)
        values = new
        n += 1
    if n == state.n:
        return state
    return replace(state, n=n, current=mix.with_values(values, normalize=False))


# ---------------------------------------------------------------------------
# closed form through the gamma reparameterisation

def gamma_weights(schedule: WeightSchedule, alpha: float, n: int) -> np.ndarray:
    """gamma_1..gamma_n with G_n = (alpha G_0 + sum gamma_k P_k) / (alpha + sum gamma_k).

    gamma_1 = a_1 alpha / (1 - a_1) and gamma_k = a_k (alpha + sum_{j<k} gamma_j) / (1 - a_k).
    For a_k = 1 / (alpha + k) every gamma_k equals one.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    out = np.empty(n)
    acc = 0.0
    for k in range(1, n + 1):
        a = schedule.weight(k)
        if a >= 1.0:
            raise ZeroDivisionError(f"alpha_{k} = 1")
        g = a * (alpha + acc) / (1.0 - a)
        out[k - 1] = g
        acc += g
    return out


def reconstruct_from_gamma(state: EstimatorState, xs: Sequence, alpha: float | None = None) -> MixingMeasure:
    """Rebuild G_n from G_0 = ``state.current`` with the gamma-weighted average.

    Independent of ``update``: keeps the running numerator
    ``alpha G_0 + sum gamma_k P_k`` and denominator ``alpha + sum gamma_k``.
    ``alpha`` defaults to the schedule's own alpha.
    """
    if state.n != 0:
        raise ValueError("reconstruction starts from G_0")
    if alpha is None:
        alpha = getattr(state.schedule, "alpha", None)
        if alpha is None:
            raise ValueError("alpha is required for this schedule")
    xs = list(xs)
    mix = state.current
    if not xs:
        return mix
    gammas = gamma_weights(state.schedule, alpha, len(xs))
    num = alpha * np.asarray(mix.values)
    den = alpha
    for k, x in enumerate(xs):
        current = num / den
        loglik = state.kernel.log_density(x, mix.nodes)
        post, ok = _posterior_values(current, loglik, mix.quad_weights)
        if not ok:
            raise DegenerateEvidenceError(x, index=k)
        num = num + gammas[k] * post
        den = den + gammas[k]
    return mix.with_values(num / den)


# ---------------------------------------------------------------------------
# predictive density and classification

def log_predictive_density(state_or_mix, x, kernel: Kernel | None = None):
    """log of int f(x | theta) dG(theta), vectorised over ``x``."""
    if isinstance(state_or_mix, EstimatorState):
        mix, kernel = state_or_mix.current, state_or_mix.kernel
    else:
        mix = state_or_mix
    x = np.asarray(x, dtype=float)
    loglik = kernel.log_density(x[..., None], mix.nodes)
    with np.errstate(divide="ignore"):
        logw = np.log(mix.values * mix.quad_weights)
    return logsumexp(loglik + logw, axis=-1)


def predictive_density(state_or_mix, x, kernel: Kernel | None = None):
    """f_{G_n}(x) by quadrature over the mixing measure."""
    return np.exp(log_predictive_density(state_or_mix, x, kernel))


class Classification(NamedTuple):
    probabilities: np.ndarray
    label: int


def classify(state: EstimatorState, x) -> Classification:
    """Predictive class probabilities pi_j f(x | theta_j) / sum_l pi_l f(x | theta_l)."""
    mix = state.current
    if not isinstance(mix, DiscreteMixing):
        raise TypeError("classification needs a DiscreteMixing state")
    loglik = state.kernel.log_density(x, mix.nodes)
    probs, ok = _posterior_values(mix.values, loglik, mix.quad_weights)
    if not ok:
        raise DegenerateEvidenceError(x)
    return Classification(probs, int(np.argmax(probs)))


def classify_stream(state: EstimatorState, xs: Sequence):
    """Classify each observation with the weights learned so far, then update on it.

    Returns ``(probabilities, labels, final_state)``.
    """
    probs = np.empty((len(xs), state.current.size))
    labels = np.empty(len(xs), dtype=int)
    for i, x in enumerate(xs):
        c = classify(state, x)
        probs[i], labels[i] = c.probabilities, c.label
        state = update(state, x)
    return probs, labels, state
