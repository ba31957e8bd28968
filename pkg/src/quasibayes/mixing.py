"""Distributions on the parameter space.

Two concrete layouts share one interface:

* ``GridDensity`` -- a density on a uniform grid over a bounded window, with
  trapezoid quadrature (Lebesgue reference measure on the window).
* ``DiscreteMixing`` -- finitely many atoms with probability weights
  (counting reference measure).

Both expose ``nodes``, ``values`` and ``quad_weights`` so that any integral
against the measure is ``sum(h(nodes) * values * quad_weights)``. Values are
immutable; "updating" a measure means building a new one with ``with_values``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Union

import numpy as np
from scipy import stats

from .errors import DomainError, LayoutError, NumericalDomainError

__all__ = [
    "Interval",
    "AtomSet",
    "Indicator",
    "MeasureResult",
    "MixingMeasure",
    "GridDensity",
    "DiscreteMixing",
    "halfline",
    "measure_of",
    "integrate",
    "l1_distance",
    "normal_grid",
    "normal_mixture_grid",
    "gamma_grid",
    "uniform_grid",
    "point_mass",
    "parse_mixing",
    "read_csv",
]

# relative mass error below which renormalization is skipped; makes it idempotent
_NORMALIZE_SLACK = 1e-12


@dataclass(frozen=True)
class Interval:
    """The half-open set (lower, upper] of the parameter space."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty interval ({self.lower}, {self.upper}]")

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return (theta > self.lower) & (theta <= self.upper)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``(-inf,0]`` style text; only the half-open ``(a,b]`` form is accepted."""
        m = re.fullmatch(r"\s*\(\s*([^,]+?)\s*,\s*([^\]]+?)\s*\]\s*", text)
        if m is None:
            raise ValueError(f"cannot parse interval {text!r}; expected (lower,upper]")
        return cls(float(m.group(1)), float(m.group(2)))

    def __str__(self):
        return f"({self.lower:g},{self.upper:g}]"


@dataclass(frozen=True)
class AtomSet:
    """A finite set of parameter values, for discrete mixing measures."""

    atoms: tuple

    def __init__(self, atoms: Iterable[float]):
        object.__setattr__(self, "atoms", tuple(float(a) for a in atoms))

    def contains(self, theta):
        return np.isin(np.asarray(theta, dtype=float), np.asarray(self.atoms))

    def __str__(self):
        return "{" + ",".join(f"{a:g}" for a in self.atoms) + "}"


SetLike = Union[Interval, AtomSet]


def halfline(t: float) -> Interval:
    """(-inf, t], the set behind the distribution function G(t)."""
    return Interval(-math.inf, float(t))


@dataclass(frozen=True)
class Indicator:
    """The function theta -> 1{theta in A}. ``integrate`` evaluates it as ``measure_of``."""

    region: SetLike

    def __call__(self, theta):
        return self.region.contains(theta).astype(float)


class MeasureResult(NamedTuple):
    mass: float
    clipped: bool


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class MixingMeasure:
    """Common behaviour of grid and atom layouts."""

    nodes: np.ndarray
    values: np.ndarray
    quad_weights: np.ndarray

    # -- construction -------------------------------------------------
    def with_values(self, values, normalize: bool = True) -> "MixingMeasure":
        raise NotImplementedError

    def same_layout(self, other: "MixingMeasure") -> bool:
        raise NotImplementedError

    def normalized(self) -> "MixingMeasure":
        return self.with_values(self.values, normalize=True)

    # -- queries ------------------------------------------------------
    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values * self.quad_weights))

    def set_weights(self, region: SetLike) -> np.ndarray:
        """Vector ``c`` with ``measure_of(region) == c @ values`` for any values on this layout."""
        raise NotImplementedError

    def _clipped(self, region: SetLike) -> bool:
        raise NotImplementedError

    def measure_of(self, region: SetLike, full_output: bool = False):
        mass = float(self.set_weights(region) @ self.values)
        if full_output:
            return MeasureResult(mass, self._clipped(region))
        return mass

    def integrate(self, h) -> float:
        if isinstance(h, Indicator):
            return self.measure_of(h.region)
        vals = np.asarray(h(self.nodes) if callable(h) else h, dtype=float)
        vals = np.broadcast_to(vals, self.nodes.shape)
        if not np.all(np.isfinite(vals)):
            raise NumericalDomainError("integrand is not finite at every node")
        return float(np.sum(vals * self.values * self.quad_weights))

    def mean(self) -> float:
        return self.integrate(lambda t: t)

    def var(self) -> float:
        mu = self.mean()
        return self.integrate(lambda t: (t - mu) ** 2)

    def cdf(self, t):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return self.quantile(u)

    def quantile(self, u):
        q = self.quantile_rows(self.values[None, :], np.ravel(u)[:, None] if np.ndim(u) else np.array([[u]]))
        return q.reshape(np.shape(u)) if np.ndim(u) else float(q.ravel()[0])

    def quantile_rows(self, values: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Inverse CDF applied row-wise to a stack of value vectors on this layout.

        ``values`` has shape (R, m); ``u`` has shape (R,) or (R, k).
        """
        raise NotImplementedError

    # -- io -----------------------------------------------------------
    def to_csv(self, path) -> None:
        raise NotImplementedError


class GridDensity(MixingMeasure):
    """A density sampled on ``m`` equally spaced nodes spanning [lower, upper]."""

    def __init__(self, lower: float, upper: float, values, normalize: bool = True):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("grid needs at least two values")
        if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
            raise ValueError(f"bad grid window [{lower}, {upper}]")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("grid density values must be finite and nonnegative")
        self.lower = float(lower)
        self.upper = float(upper)
        self.m = values.size
        self.step = (self.upper - self.lower) / (self.m - 1)
        self.nodes = _readonly(np.linspace(self.lower, self.upper, self.m))
        qw = np.full(self.m, self.step)
        qw[0] = qw[-1] = self.step / 2
        self.quad_weights = _readonly(qw)
        if normalize:
            values = _normalize(values, self.quad_weights)
        self.values = _readonly(values)

    @classmethod
    def from_pdf(cls, pdf: Callable, lower: float, upper: float, m: int = 1001) -> "GridDensity":
        nodes = np.linspace(lower, upper, m)
        return cls(lower, upper, pdf(nodes))

    def with_values(self, values, normalize=True):
        out = object.__new__(GridDensity)
        out.lower, out.upper, out.m, out.step = self.lower, self.upper, self.m, self.step
        out.nodes, out.quad_weights = self.nodes, self.quad_weights
        values = np.asarray(values, dtype=float)
        if values.shape != self.nodes.shape:
            raise LayoutError("values do not match the grid")
        if normalize:
            values = _normalize(values, self.quad_weights)
        out.values = _readonly(values)
        return out

    def same_layout(self, other):
        return (
            isinstance(other, GridDensity)
            and other.m == self.m
            and other.lower == self.lower
            and other.upper == self.upper
        )

    def _cum_row(self, j: int) -> np.ndarray:
        r = np.zeros(self.m)
        if j > 0:
            r[:j] = self.step
            r[0] = self.step / 2
            r[j] = self.step / 2
        return r

    def _cdf_weights(self, t: float) -> np.ndarray:
        if t <= self.lower:
            return np.zeros(self.m)
        if t >= self.upper:
            return np.array(self.quad_weights)
        pos = (t - self.lower) / self.step
        j = min(int(math.floor(pos)), self.m - 2)
        lam = pos - j
        return (1 - lam) * self._cum_row(j) + lam * self._cum_row(j + 1)

    def set_weights(self, region):
        if isinstance(region, Interval):
            return self._cdf_weights(region.upper) - self._cdf_weights(region.lower)
        if isinstance(region, AtomSet):
            # atoms carry no Lebesgue mass
            return np.zeros(self.m)
        raise TypeError(f"unsupported set {region!r}")

    def _clipped(self, region):
        if isinstance(region, Interval):
            return region.lower < self.lower or region.upper > self.upper
        return False

    def cumulative(self, values=None) -> np.ndarray:
        v = self.values if values is None else values
        inc = 0.5 * self.step * (v[..., :-1] + v[..., 1:])
        zero = np.zeros(v.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(inc, axis=-1)], axis=-1)

    def cdf(self, t):
        return np.interp(t, self.nodes, self.cumulative(), left=0.0, right=1.0)

    def density_at(self, t):
        """Piecewise-linear interpolation of the density, zero outside the window."""
        return np.interp(t, self.nodes, self.values, left=0.0, right=0.0)

    def quantile_rows(self, values, u):
        values = np.atleast_2d(values)
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        cum = self.cumulative(values)
        target = u * cum[:, -1:]
        # cell index j with cum[j] < target <= cum[j+1]
        j = _count_below(cum, target) - 1
        j = np.clip(j, 0, self.m - 2)
        c0 = np.take_along_axis(cum, j, axis=1)
        c1 = np.take_along_axis(cum, j + 1, axis=1)
        width = c1 - c0
        frac = np.divide(target - c0, width, out=np.full_like(target, 0.5), where=width > 0)
        return self.lower + (j + np.clip(frac, 0.0, 1.0)) * self.step

    def to_csv(self, path):
        _write_csv(path, ("theta", "density"), self.nodes, self.values)

    def __repr__(self):
        return f"GridDensity([{self.lower:g}, {self.upper:g}], m={self.m})"


class DiscreteMixing(MixingMeasure):
    """Probability weights on distinct atoms (finite mixtures)."""

    def __init__(self, atoms, weights, normalize: bool = True):
        atoms = np.asarray(atoms, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if atoms.size == 0 or atoms.shape != weights.shape:
            raise ValueError("atoms and weights must be non-empty and of equal length")
        if np.unique(atoms).size != atoms.size:
            raise ValueError("atoms must be distinct")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("weights must be finite and nonnegative")
        self.nodes = _readonly(atoms)
        self.quad_weights = _readonly(np.ones(atoms.size))
        if normalize:
            weights = _normalize(weights, self.quad_weights)
        self.values = _readonly(weights)

    @property
    def atoms(self):
        return self.nodes

    @property
    def weights(self):
        return self.values

    def with_values(self, values, normalize=True):
        out = object.__new__(DiscreteMixing)
        out.nodes, out.quad_weights = self.nodes, self.quad_weights
        values = np.asarray(values, dtype=float)
        if values.shape != self.nodes.shape:
            raise LayoutError("values do not match the atoms")
        if normalize:
            values = _normalize(values, self.quad_weights)
        out.values = _readonly(values)
        return out

    def same_layout(self, other):
        return isinstance(other, DiscreteMixing) and np.array_equal(other.nodes, self.nodes)

    def set_weights(self, region):
        return region.contains(self.nodes).astype(float)

    def _clipped(self, region):
        if isinstance(region, AtomSet):
            return not np.all(np.isin(region.atoms, self.nodes))
        return False

    def cdf(self, t):
        order = np.argsort(self.nodes)
        cum = np.cumsum(self.values[order])
        idx = np.searchsorted(self.nodes[order], np.asarray(t, dtype=float), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def quantile_rows(self, values, u):
        values = np.atleast_2d(values)
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        cum = np.cumsum(values, axis=1)
        target = u * cum[:, -1:]
        j = np.clip(_count_below(cum, target), 0, self.size - 1)
        return self.nodes[j]

    def to_csv(self, path):
        _write_csv(path, ("atom", "weight"), self.nodes, self.values)

    def __repr__(self):
        return f"DiscreteMixing(atoms={self.nodes.tolist()}, weights={self.values.tolist()})"


def _count_below(cum: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per row, the number of entries of ``cum`` strictly below each target."""
    if target.shape[1] == 1:
        return np.sum(cum < target, axis=1, keepdims=True)
    out = np.empty(target.shape, dtype=np.intp)
    for r in range(cum.shape[0]):
        out[r] = np.searchsorted(cum[r], target[r], side="left")
    return out


def _normalize(values: np.ndarray, quad_weights: np.ndarray) -> np.ndarray:
    mass = float(np.sum(values * quad_weights))
    if not mass > 0 or not math.isfinite(mass):
        raise NumericalDomainError(f"cannot normalize a measure of mass {mass}")
    if abs(mass - 1.0) <= _NORMALIZE_SLACK:
        return values
    return values / mass


# -- module-level operations ---------------------------------------------

def measure_of(mix: MixingMeasure, region: SetLike, full_output: bool = False):
    """Mass that ``mix`` assigns to ``region``.

    For grids the distribution function between nodes is the linear
    interpolation of the cumulative trapezoid sum; parts of the set outside
    the window carry no mass, and ``full_output=True`` reports that clipping.
    """
    return mix.measure_of(region, full_output=full_output)


def integrate(mix: MixingMeasure, h) -> float:
    """Quadrature of ``h`` against ``mix`` (trapezoid on grids, weighted sum on atoms)."""
    return mix.integrate(h)


def l1_distance(a: MixingMeasure, b: MixingMeasure) -> float:
    """L1 distance between densities (grids) or weight vectors (atoms); lies in [0, 2]."""
    if isinstance(a, DiscreteMixing) and isinstance(b, DiscreteMixing):
        atoms = np.union1d(a.nodes, b.nodes)
        wa = np.zeros(atoms.size)
        wb = np.zeros(atoms.size)
        wa[np.searchsorted(atoms, a.nodes)] = a.values
        wb[np.searchsorted(atoms, b.nodes)] = b.values
        return float(np.sum(np.abs(wa - wb)))
    if not a.same_layout(b):
        raise LayoutError(f"layouts differ: {a!r} vs {b!r}")
    return float(np.sum(np.abs(a.values - b.values) * a.quad_weights))


# -- factories ------------------------------------------------------------

def normal_grid(mean: float, var: float, m: int = 1001, width: float = 6.0,
                lower: float | None = None, upper: float | None = None) -> GridDensity:
    """N(mean, var) on [mean - width*sd, mean + width*sd] unless a window is given."""
    sd = math.sqrt(var)
    lo = mean - width * sd if lower is None else lower
    hi = mean + width * sd if upper is None else upper
    return GridDensity.from_pdf(lambda t: stats.norm.pdf(t, mean, sd), lo, hi, m)


def normal_mixture_grid(weights, means, variances, lower: float, upper: float, m: int = 1001) -> GridDensity:
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    sds = np.sqrt(np.asarray(variances, dtype=float))

    def pdf(t):
        t = np.asarray(t)[..., None]
        return np.sum(weights * stats.norm.pdf(t, means, sds), axis=-1)

    return GridDensity.from_pdf(pdf, lower, upper, m)


def gamma_grid(shape: float, rate: float, m: int = 1001, tail: float = 1e-8,
               lower: float | None = None, upper: float | None = None) -> GridDensity:
    """Gamma(shape, rate) density on a grid over its central 1 - 2 tail mass.

    Shapes below 1 have a density unbounded at 0, which a trapezoid grid
    cannot represent; they need an explicit ``lower`` > 0.
    """
    if not (shape > 0 and rate > 0):
        raise ValueError("shape and rate must be positive")
    if shape < 1 and lower is None:
        raise ValueError("gamma prior with shape < 1 needs an explicit lower bound > 0")
    dist = stats.gamma(shape, scale=1.0 / rate)
    lo = max(dist.ppf(tail), 1e-9) if lower is None else lower
    hi = dist.isf(tail) if upper is None else upper
    return GridDensity.from_pdf(dist.pdf, lo, hi, m)


def uniform_grid(lower: float, upper: float, m: int = 1001) -> GridDensity:
    return GridDensity(lower, upper, np.ones(m))


def point_mass(c: float) -> DiscreteMixing:
    return DiscreteMixing([c], [1.0])


def _kv(text: str) -> dict[str, str]:
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def parse_mixing(text: str, m: int = 1001) -> MixingMeasure:
    """Build a measure from a spec string or a CSV path.

    Recognised forms::

        normal:mean=1,var=3[,lower=..,upper=..,width=6]
        gamma:shape=2,rate=1[,lower=..,upper=..]
        uniform:lower=0,upper=10
        discrete:atoms=-5|5[,weights=0.5|0.5]
        point:at=0
        path/to/file.csv
    """
    text = text.strip()
    if text.endswith(".csv") or Path(text).is_file():
        return read_csv(text)
    name, _, rest = text.partition(":")
    p = _kv(rest)
    f = {k: float(v) for k, v in p.items() if k not in ("atoms", "weights")}
    name = name.lower()
    m = int(f.pop("m", m))
    if name == "normal":
        return normal_grid(f["mean"], f["var"], m=m, width=f.get("width", 6.0),
                           lower=f.get("lower"), upper=f.get("upper"))
    if name == "gamma":
        return gamma_grid(f["shape"], f["rate"], m=m, lower=f.get("lower"), upper=f.get("upper"))
    if name == "uniform":
        return uniform_grid(f["lower"], f["upper"], m=m)
    if name == "discrete":
        atoms = [float(a) for a in p["atoms"].split("|")]
        weights = [float(w) for w in p["weights"].split("|")] if "weights" in p else np.ones(len(atoms))
        return DiscreteMixing(atoms, weights)
    if name == "point":
        return point_mass(f["at"])
    raise ValueError(f"unknown mixing distribution {name!r}")


# -- csv ------------------------------------------------------------------

def _write_csv(path, header, col1, col2) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(col1, col2):
            w.writerow((repr(float(a)), repr(float(b))))


def read_csv(path) -> MixingMeasure:
    """Read a ``theta,density`` grid or an ``atom,weight`` list."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [h.strip().lower() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    if header == ["theta", "density"]:
        nodes = data[:, 0]
        steps = np.diff(nodes)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise LayoutError("grid nodes in CSV are not equally spaced")
        return GridDensity(nodes[0], nodes[-1], data[:, 1])
    if header == ["atom", "weight"]:
        return DiscreteMixing(data[:, 0], data[:, 1])
    raise ValueError(f"unrecognised CSV header {rows[0]}")
