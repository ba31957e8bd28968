"""Mixture component families f(x | theta).

Each kernel fixes its reference measure: Lebesgue on the real line for the
Gaussian and Gamma families, counting measure on the nonnegative integers for
Poisson. Kernels are immutable and can be shared freely; sampling takes an
explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DomainError

__all__ = [
    "Eligibility",
    "Kernel",
    "GaussianLocation",
    "Poisson",
    "GammaFixedShape",
    "FlatKernel",
    "parse_kernel",
]


@dataclass(frozen=True)
class Eligibility:
    """Sufficient-condition flags for an absolutely continuous limit.

    ``square_ratio_condition`` records whether
    sup over compact K of  int f(x|t1)^2 / f(x|t2) dmu(x)  is finite.
    It is asserted per family, not computed.
    """

    square_ratio_condition: bool


class Kernel:
    """Base class. Subclasses implement ``log_density`` and ``sample``."""

    #: True when observations live on the nonnegative integers.
    discrete = False
    #: Open/closed bounds of the parameter space.
    theta_lower = -math.inf
    theta_upper = math.inf
    #: True for scale families, whose observation quadrature is geometric.
    multiplicative = False

    def log_density(self, x, theta):
        raise NotImplementedError

    def density(self, x, theta):
        """f(x | theta); underflow gives 0.0 rather than an error."""
        self.check_theta(theta)
        return np.exp(self.log_density(x, theta))

    def sample(self, theta, rng, size=None):
        raise NotImplementedError

    def eligibility(self) -> Eligibility:
        return Eligibility(square_ratio_condition=True)

    def check_theta(self, theta) -> None:
        t = np.asarray(theta, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < self.theta_lower) or np.any(t > self.theta_upper):
            raise DomainError(f"parameter outside [{self.theta_lower}, {self.theta_upper}] for {self.spec}")

    def check_x(self, x) -> None:
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)):
            raise DomainError(f"non-finite observation for {self.spec}")

    def cdf(self, x, theta):
        raise NotImplementedError

    def ppf(self, q, theta):
        raise NotImplementedError

    def scale(self, theta_lo: float, theta_hi: float) -> float:
        """Smallest width over which f(. | theta) varies, for theta in the window."""
        raise NotImplementedError

    def support_window(self, theta_lo: float, theta_hi: float, tail: float = 1e-6):
        """Observation interval holding >= 1 - tail of f(.|theta) for every theta in the window.

        Valid for families that are stochastically monotone in theta.
        """
        a = self.ppf(tail / 2, theta_lo)
        b = self.ppf(tail / 2, theta_hi)
        c = self.ppf(1 - tail / 2, theta_lo)
        d = self.ppf(1 - tail / 2, theta_hi)
        return float(min(a, b)), float(max(c, d))

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.spec


@dataclass(frozen=True, eq=True)
class GaussianLocation(Kernel):
    """N(theta, sigma2) with known variance.

    ``sigma2 = 0`` is a point mass at theta and must be requested with
    ``allow_degenerate=True``; it exists for testing only.
    """

    sigma2: float = 1.0
    allow_degenerate: bool = False

    def __post_init__(self):
        if not (self.sigma2 > 0 or (self.sigma2 == 0 and self.allow_degenerate)):
            raise DomainError(f"GaussianLocation needs sigma2 > 0, got {self.sigma2}")

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0

    def log_density(self, x, theta):
        self.check_x(x)
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.degenerate:
            # density w.r.t. the atom at theta
            return np.where(x == theta, 0.0, -np.inf)
        d = x - theta
        return -0.5 * d * d / self.sigma2 - 0.5 * math.log(2 * math.pi * self.sigma2)

    def sample(self, theta, rng, size=None):
        theta = np.asarray(theta, dtype=float)
        if self.degenerate:
            return np.broadcast_to(theta, size if size is not None else theta.shape).astype(float)
        return rng.normal(theta, math.sqrt(self.sigma2), size=size)

    def cdf(self, x, theta):
        return stats.norm.cdf(x, loc=theta, scale=math.sqrt(self.sigma2))

    def ppf(self, q, theta):
        return stats.norm.ppf(q, loc=theta, scale=math.sqrt(self.sigma2))

    def scale(self, theta_lo, theta_hi):
        return math.sqrt(self.sigma2)

    def eligibility(self):
        return Eligibility(square_ratio_condition=not self.degenerate)

    @property
    def spec(self):
        return f"gaussian:sigma2={self.sigma2!r}"


@dataclass(frozen=True, eq=True)
class Poisson(Kernel):
    """Poisson(theta), theta >= 0 the mean."""

    discrete = True
    theta_lower = 0.0

    def check_x(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)) or np.any(xa < 0) or np.any(xa != np.floor(xa)):
            raise DomainError("Poisson observations must be nonnegative integers")

    def log_density(self, x, theta):
        self.check_x(x)
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return special.xlogy(x, theta) - theta - special.gammaln(x + 1)

    def sample(self, theta, rng, size=None):
        return rng.poisson(theta, size=size).astype(float)

    def cdf(self, x, theta):
        return stats.poisson.cdf(x, theta)

    def ppf(self, q, theta):
        return stats.poisson.ppf(q, theta)

    def support_window(self, theta_lo, theta_hi, tail=1e-10):
        hi = stats.poisson.isf(tail, max(theta_hi, theta_lo))
        return 0.0, float(hi)

    def scale(self, theta_lo, theta_hi):
        return 1.0

    @property
    def spec(self):
        return "poisson"


@dataclass(frozen=True, eq=True)
class GammaFixedShape(Kernel):
    """Gamma with known shape ``shape`` and unknown rate theta > 0."""

    shape: float = 2.0
    theta_lower = 0.0
    multiplicative = True

    def __post_init__(self):
        if not self.shape > 0:
            raise DomainError(f"GammaFixedShape needs shape > 0, got {self.shape}")

    def check_theta(self, theta):
        super().check_theta(theta)
        if np.any(np.asarray(theta) <= 0):
            raise DomainError("Gamma rate must be positive")

    def check_x(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)) or np.any(xa < 0):
            raise DomainError("Gamma observations must be nonnegative")

    def log_density(self, x, theta):
        self.check_x(x)
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        k = self.shape
        return k * np.log(theta) + special.xlogy(k - 1, x) - theta * x - special.gammaln(k)

    def sample(self, theta, rng, size=None):
        return rng.gamma(self.shape, 1.0 / np.asarray(theta, dtype=float), size=size)

    def cdf(self, x, theta):
        return stats.gamma.cdf(x, self.shape, scale=1.0 / np.asarray(theta))

    def ppf(self, q, theta):
        return stats.gamma.ppf(q, self.shape, scale=1.0 / np.asarray(theta))

    def scale(self, theta_lo, theta_hi):
        # relative spread: sd of log x is about 1/sqrt(shape) for every rate
        return min(1.0 / math.sqrt(self.shape), 1.0)

    @property
    def spec(self):
        return f"gamma:shape={self.shape!r}"


@dataclass(frozen=True, eq=True)
class FlatKernel(Kernel):
    """f(x | theta) = N(x; 0, 1) for every theta. Test double: carries no information."""

    def log_density(self, x, theta):
        self.check_x(x)
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return -0.5 * x * x - 0.5 * math.log(2 * math.pi) + 0.0 * theta

    def sample(self, theta, rng, size=None):
        if size is None:
            size = np.shape(theta)
        return rng.standard_normal(size)

    def cdf(self, x, theta):
        return stats.norm.cdf(x) + 0.0 * np.asarray(theta)

    def ppf(self, q, theta):
        return stats.norm.ppf(q) + 0.0 * np.asarray(theta)

    def scale(self, theta_lo, theta_hi):
        return 1.0

    @property
    def spec(self):
        return "flat"


def _parse_params(text: str) -> dict[str, float]:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        out[key.strip()] = float(value)
    return out


def parse_kernel(text: str) -> Kernel:
    """Build a kernel from ``gaussian:sigma2=1.0``, ``poisson`` or ``gamma:shape=2.0``."""
    name, _, rest = text.strip().partition(":")
    params = _parse_params(rest)
    name = name.lower()
    if name in ("gaussian", "normal"):
        return GaussianLocation(sigma2=params.get("sigma2", 1.0))
    if name == "poisson":
        return Poisson()
    if name == "gamma":
        return GammaFixedShape(shape=params.get("shape", 2.0))
    if name == "flat":
        return FlatKernel()
    raise ValueError(f"unknown kernel {name!r}")
