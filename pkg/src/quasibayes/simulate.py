"""Data generation: the c.i.d. model implied by the recursion, i.i.d. mixtures, permutations.

The c.i.d. process draws theta_1 ~ G_0 and then, for k = 1, 2, ...::

    x_k ~ f(. | theta_k);  G_k = update(G_{k-1}, x_k);  theta_{k+1} ~ G_k

theta_{k+1} is drawn independently of theta_{1:k} given x_{1:k}. Replicas are
simulated as rows of one array so a single loop over time serves all of them;
the random stream is fixed by the seed and the replica count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegenerateEvidenceError
from .kernels import Kernel
from .mixing import MixingMeasure
from .recursion import EstimatorState, WeightSchedule, _newton_values, fit

__all__ = [
    "CidTrajectory",
    "CidEnsemble",
    "simulate_cid",
    "simulate_cid_replicas",
    "simulate_iid_mixture",
    "permute",
    "permutation_averaged_fit",
    "max_pairwise_l1",
]


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@dataclass
class CidTrajectory:
    """One path of the c.i.d. process with optional snapshots of the estimate."""

    xs: np.ndarray
    thetas: np.ndarray
    seed: object = None
    snapshots: list = field(default_factory=list)  # [(step, MixingMeasure)]
    final: EstimatorState | None = None


@dataclass
class CidEnsemble:
    """Many replicas advanced in lockstep.

    ``values`` holds the final estimate of each replica as rows on the layout
    of ``start.current``; ``xs`` and ``thetas`` have shape (replicas, n).
    """

    start: EstimatorState
    xs: np.ndarray
    thetas: np.ndarray
    values: np.ndarray
    snapshots: dict = field(default_factory=dict)  # step -> (replicas, m) array

    @property
    def n(self) -> int:
        return self.start.n + self.xs.shape[1]

    def measure(self, r: int) -> MixingMeasure:
        return self.start.current.with_values(self.values[r], normalize=False)

    def state(self, r: int) -> EstimatorState:
        return replace(self.start, n=self.n, current=self.measure(r))

    def masses(self, region) -> np.ndarray:
        """G_N(region) for every replica."""
        return self.values @ self.start.current.set_weights(region)


def simulate_cid_replicas(start: EstimatorState, n: int, replicas: int, rng,
                          snapshot_steps: Sequence[int] = (), keep_paths: bool = True) -> CidEnsemble:
    """Continue ``replicas`` independent c.i.d. paths for ``n`` steps from a common state.

    Starting from ``start`` (G_0 when ``start.n == 0``, or a fitted prefix)
    each replica draws theta ~ G, x ~ f(. | theta), then updates G.
    ``snapshot_steps`` are absolute step counts at which the row values are kept.
    """
    rng = _rng(rng)
    if n < 0 or replicas < 1:
        raise ValueError("need n >= 0 and replicas >= 1")
    mix, kernel, schedule = start.current, start.kernel, start.schedule
    nodes, qw = mix.nodes, mix.quad_weights
    values = np.repeat(mix.values[None, :], replicas, axis=0)
    xs = np.empty((replicas, n)) if keep_paths else np.empty((replicas, 0))
    thetas = np.empty((replicas, n)) if keep_paths else np.empty((replicas, 0))
    wanted = set(snapshot_steps)
    snaps = {}
    if start.n in wanted:
        snaps[start.n] = values.copy()
    for k in range(n):
        step = start.n + k + 1
        theta = mix.quantile_rows(values, rng.random(replicas))[:, 0]
        x = np.asarray(kernel.sample(theta, rng), dtype=float)
        loglik = kernel.log_density(x[:, None], nodes[None, :])
        values, ok = _newton_values(values, loglik, qw, schedule.weight(step))
        if not np.all(ok):
            r = int(np.flatnonzero(~ok)[0])
            raise DegenerateEvidenceError(float(x[r]), index=k)
        if keep_paths:
            xs[:, k] = x
            thetas[:, k] = theta
        if step in wanted:
            snaps[step] = values.copy()
    return CidEnsemble(start, xs, thetas, values, snaps)


def simulate_cid(g0: MixingMeasure, kernel: Kernel, schedule: WeightSchedule, n: int, rng,
                 snapshot_steps: Sequence[int] = ()) -> CidTrajectory:
    """A single c.i.d. trajectory of length ``n`` started at ``g0``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    seed = rng if not isinstance(rng, np.random.Generator) else None
    start = EstimatorState(kernel, schedule, g0)
    ens = simulate_cid_replicas(start, n, 1, rng, snapshot_steps=snapshot_steps)
    snaps = [(s, g0.with_values(v[0], normalize=False)) for s, v in sorted(ens.snapshots.items())]
    return CidTrajectory(ens.xs[0], ens.thetas[0], seed, snaps, ens.state(0))


def simulate_iid_mixture(true_mix: MixingMeasure, kernel: Kernel, n: int, rng) -> np.ndarray:
    """n i.i.d. draws from int f(. | theta) d true_mix(theta)."""
    rng = _rng(rng)
    if n == 0:
        return np.empty(0)
    theta = true_mix.sample(rng, size=n)
    return np.asarray(kernel.sample(theta, rng), dtype=float)


def permute(xs, rng) -> np.ndarray:
    """A uniformly random reordering of ``xs``."""
    return _rng(rng).permutation(np.asarray(xs))


def permutation_averaged_fit(xs, g0: MixingMeasure, kernel: Kernel, schedule: WeightSchedule,
                             replicates: int, rng) -> MixingMeasure:
    """Average of the final estimates over ``replicates`` random orderings of ``xs``."""
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    rng = _rng(rng)
    start = EstimatorState(kernel, schedule, g0)
    acc = np.zeros(g0.size)
    for _ in range(replicates):
        acc += fit(start, permute(xs, rng)).current.values
    return g0.with_values(acc / replicates)


def max_pairwise_l1(measures: Sequence[MixingMeasure]) -> float:
    """Largest L1 distance between any two of ``measures`` (ordering-sensitivity metric)."""
    from .mixing import l1_distance

    best = 0.0
    for i in range(len(measures)):
        for j in range(i + 1, len(measures)):
            best = max(best, l1_distance(measures[i], measures[j]))
    return best
