"""Reproduction studies. Each ``run_*`` returns plot-ready tables; nothing is drawn.

* ``run_fig1``  -- law of G_N(0) under the c.i.d. model versus the Dirichlet-process Beta law.
* ``run_fig2``  -- sensitivity of g_n to the ordering of one sample under three gain schedules.
* ``run_fig3``  -- marginal asymptotic credible bands for the mixing distribution function.
* ``run_classifier_demo`` -- sequential unsupervised classification with known components.

All randomness derives from ``config.seed`` through ``numpy.random.SeedSequence``.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal, stats

from .asymptotics import DEFAULT_EPSILON, cov_hat, rate
from .kernels import GaussianLocation, parse_kernel
from .mixing import DiscreteMixing, GridDensity, halfline, l1_distance, normal_mixture_grid, parse_mixing
from .recursion import EstimatorState, classify, fit, parse_schedule, update
from .simulate import max_pairwise_l1, permute, simulate_cid_replicas, simulate_iid_mixture

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "Table",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_classifier_demo",
    "run_custom",
    "run_experiment",
    "count_modes",
    "load_config_file",
]

# Fig. 2 / Fig. 3 ground truth: 0.3 N(-1, 2) + 0.7 N(3, 1.5)
TRUE_WEIGHTS = (0.3, 0.7)
TRUE_MEANS = (-1.0, 3.0)
TRUE_VARS = (2.0, 1.5)

FIG2_SCHEDULES = {
    "poly_alpha1": "poly:alpha=1,beta=1",
    "poly_alpha100": "poly:alpha=100,beta=1",
    "piecewise": "piecewise:alpha=100,n0=500,beta1=1,beta2=0.75",
}

_DEFAULTS = {
    "fig1": dict(g0="normal:mean=1,var=3", schedule="poly:alpha=5,beta=1", n=1000, replicas=200,
                 sigma2="0.01,1", sets="(-inf,0]"),
    "fig2": dict(g0="normal:mean=1,var=9", kernel="gaussian:sigma2=1", n=1000, replicas=3,
                 snapshots="1,300,500,1000"),
    "fig3": dict(g0="normal:mean=1,var=9", kernel="gaussian:sigma2=1", n=1000,
                 schedule="poly:alpha=100,beta=1;piecewise:alpha=100,n0=500,beta1=1,beta2=0.75",
                 t_grid="-4,-3,-2,-1,0,1,2,3,4,5,6", level=0.95),
    "classifier": dict(g0="discrete:atoms=-5|5", kernel="gaussian:sigma2=1", schedule="poly:alpha=1,beta=1",
                       true_mix="discrete:atoms=-5|5,weights=0.5|0.5", n=500),
    "custom": dict(g0="normal:mean=0,var=4", kernel="gaussian:sigma2=1", schedule="poly:alpha=1,beta=1",
                   n=1000, sets="(-inf,0];(-inf,1]", level=0.95),
}


class ConfigError(ValueError):
    """Inconsistent experiment configuration, detected before any computation."""


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    kernel: str | None = None
    g0: str | None = None
    schedule: str | None = None
    n: int | None = None
    replicas: int | None = None
    seed: int = 0
    out_dir: str | None = None
    sets: str | None = None
    grid_m: int = 1001
    proxy_n: int | None = None
    sigma2: str | None = None
    snapshots: str | None = None
    t_grid: str | None = None
    level: float | None = None
    epsilon: float = DEFAULT_EPSILON
    true_mix: str | None = None

    def resolved(self) -> "ExperimentConfig":
        """Copy with experiment defaults filled in for every unset field."""
        if self.experiment not in _DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        out = ExperimentConfig(**asdict(self))
        for key, value in _DEFAULTS[self.experiment].items():
            if getattr(out, key) is None:
                setattr(out, key, value)
        if out.experiment == "fig1" and out.proxy_n is not None:
            out.n = out.proxy_n
        out.validate()
        return out

    def validate(self) -> None:
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be positive")
        if self.replicas is not None and self.replicas < 1:
            raise ConfigError("replicas must be positive")
        if self.grid_m < 3:
            raise ConfigError("grid_m must be at least 3")
        if self.level is not None and not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        try:
            if self.kernel is not None:
                parse_kernel(self.kernel)
            if self.g0 is not None:
                parse_mixing(self.g0, m=self.grid_m)
            if self.true_mix is not None:
                parse_mixing(self.true_mix, m=self.grid_m)
            for spec in (self.schedule or "").split(";"):
                if spec.strip():
                    parse_schedule(spec)
            if self.sets is not None:
                _parse_sets(self.sets)
            _floats(self.sigma2), _floats(self.t_grid), _floats(self.snapshots)
        except ConfigError:
            raise
        except (ValueError, KeyError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.experiment == "fig1":
            if self.kernel is not None and not self.kernel.startswith("gaussian"):
                raise ConfigError("fig1 uses Gaussian location kernels; set sigma2 instead of kernel")
            for s in _floats(self.sigma2):
                if not s > 0:
                    raise ConfigError("sigma2 values must be positive")
        if self.experiment == "fig2" and self.replicas is not None and self.replicas < 2:
            raise ConfigError("fig2 needs at least two orderings")
        if self.experiment == "classifier":
            g0 = parse_mixing(self.g0)
            truth = parse_mixing(self.true_mix)
            if not isinstance(g0, DiscreteMixing) or not g0.same_layout(truth):
                raise ConfigError("classifier needs discrete g0 and true_mix on the same atoms")


@dataclass
class Table:
    """Column-oriented table written as CSV."""

    columns: dict

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name):
        return np.asarray(self.columns[name])

    def write(self, path) -> None:
        names = list(self.columns)
        cols = [self.columns[k] for k in names]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for row in zip(*cols):
                w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    tables: dict
    summary: dict
    seeds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    elapsed_s: float = 0.0

    def write(self, out_dir=None) -> Path:
        out = Path(out_dir or self.config.out_dir or f"out_{self.config.experiment}")
        out.mkdir(parents=True, exist_ok=True)
        for name, table in self.tables.items():
            table.write(out / f"{name}.csv")
        manifest = {
            "experiment": self.config.experiment,
            "config": asdict(self.config),
            "git_describe": _git_describe(),
            "wall_clock_s": self.elapsed_s,
            "seeds": self.seeds,
            "outputs": sorted(f"{name}.csv" for name in self.tables),
            "summary": self.summary,
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, default=_json_default)
        return out


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=10)
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _floats(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _children(seed: int, k: int):
    ss = np.random.SeedSequence(seed)
    return ss, ss.spawn(k)


def _grid_g0(spec: str, m: int) -> GridDensity:
    g0 = parse_mixing(spec, m=m)
    if not isinstance(g0, GridDensity):
        raise ConfigError("this experiment needs a grid prior guess")
    return g0


def count_modes(values, rel_prominence: float = 0.01) -> int:
    """Local maxima of a grid density with prominence above a fraction of its peak."""
    values = np.asarray(values)
    peaks, _ = signal.find_peaks(values, prominence=rel_prominence * values.max())
    return len(peaks)


# ---------------------------------------------------------------------------

def run_fig1(config: ExperimentConfig) -> ExperimentResult:
    """Monte Carlo law of G_N(A), A = (-inf, 0], against Beta(a G_0(A), a (1 - G_0(A)))."""
    cfg = config.resolved()
    t0 = time.perf_counter()
    schedule = parse_schedule(cfg.schedule)
    alpha = getattr(schedule, "alpha", None)
    if alpha is None:
        raise ConfigError("fig1 needs a schedule with an alpha parameter")
    g0 = _grid_g0(cfg.g0, cfg.grid_m)
    region = halfline(0.0) if cfg.sets is None else _parse_sets(cfg.sets)[0]
    sigma2s = _floats(cfg.sigma2)
    ss, kids = _children(cfg.seed, len(sigma2s))

    # reference from the continuous prior guess
    g0_params = _normal_params(cfg.g0)
    p0 = stats.norm.cdf(region.upper, g0_params[0], math.sqrt(g0_params[1])) if g0_params else g0.measure_of(region)
    a_ref, b_ref = alpha * p0, alpha * (1 - p0)
    beta = stats.beta(a_ref, b_ref)
    probs = np.linspace(0.005, 0.995, 199)

    samples = {"sigma2": [], "replica": [], "G_N0": []}
    dens = {"sigma2": [], "replica": [], "theta": [], "density": []}
    summ = {"sigma2": [], "ks_distance": [], "ks_pvalue": [], "mean_G_N0": [], "sd_G_N0": [],
            "median_modes": [], "frac_modes_ge3": [], "frac_modes_le2": []}
    for s2, kid in zip(sigma2s, kids):
        start = EstimatorState(GaussianLocation(s2), schedule, g0)
        ens = simulate_cid_replicas(start, cfg.n, cfg.replicas, np.random.default_rng(kid), keep_paths=False)
        g = ens.masses(region)
        modes = np.array([count_modes(v) for v in ens.values])
        ks = stats.kstest(g, beta.cdf)
        samples["sigma2"] += [s2] * cfg.replicas
        samples["replica"] += list(range(cfg.replicas))
        samples["G_N0"] += list(g)
        for r in range(cfg.replicas):
            dens["sigma2"] += [s2] * g0.size
            dens["replica"] += [r] * g0.size
            dens["theta"] += list(g0.nodes)
            dens["density"] += list(ens.values[r])
        summ["sigma2"].append(s2)
        summ["ks_distance"].append(float(ks.statistic))
        summ["ks_pvalue"].append(float(ks.pvalue))
        summ["mean_G_N0"].append(float(g.mean()))
        summ["sd_G_N0"].append(float(g.std(ddof=1)))
        summ["median_modes"].append(float(np.median(modes)))
        summ["frac_modes_ge3"].append(float(np.mean(modes >= 3)))
        summ["frac_modes_le2"].append(float(np.mean(modes <= 2)))

    tables = {
        "gN0_samples": Table(samples),
        "beta_reference": Table({"prob": probs, "quantile": beta.ppf(probs),
                                 "a": [a_ref] * probs.size, "b": [b_ref] * probs.size}),
        "gn_density": Table(dens),
        "g0_density": Table({"theta": g0.nodes, "density": g0.values}),
        "fig1_summary": Table(summ),
    }
    summary = {"beta_a": a_ref, "beta_b": b_ref, "G0_A": p0,
               "ks_distance": dict(zip(map(str, sigma2s), summ["ks_distance"]))}
    return ExperimentResult(cfg, tables, summary, {"master": cfg.seed, "entropy": ss.entropy},
                            elapsed_s=time.perf_counter() - t0)


def _normal_params(spec: str):
    name, _, rest = spec.partition(":")
    if name.strip().lower() != "normal":
        return None
    p = dict(item.split("=") for item in rest.split(",") if item)
    return float(p["mean"]), float(p["var"])


def _parse_sets(text: str):
    from .mixing import Interval

    return [Interval.parse(part) for part in text.split(";") if part.strip()]


def _fig2_data(cfg: ExperimentConfig, g0: GridDensity):
    kernel = parse_kernel(cfg.kernel)
    truth = normal_mixture_grid(TRUE_WEIGHTS, TRUE_MEANS, TRUE_VARS, g0.lower, g0.upper, g0.size)
    ss, (data_seed, perm_seed) = _children(cfg.seed, 2)
    xs = simulate_iid_mixture(truth, kernel, cfg.n, np.random.default_rng(data_seed))
    return kernel, truth, xs, ss, perm_seed


def run_fig2(config: ExperimentConfig) -> ExperimentResult:
    """Fits under three schedules on the original sample and seeded permutations of it."""
    cfg = config.resolved()
    t0 = time.perf_counter()
    g0 = _grid_g0(cfg.g0, cfg.grid_m)
    kernel, truth, xs, ss, perm_seed = _fig2_data(cfg, g0)
    rng = np.random.default_rng(perm_seed)
    orderings = [xs] + [permute(xs, rng) for _ in range(cfg.replicas - 1)]
    steps = sorted(int(s) for s in _floats(cfg.snapshots) if 0 < s <= cfg.n)
    if cfg.n not in steps:
        steps.append(cfg.n)
    schedules = FIG2_SCHEDULES if cfg.schedule is None else {
        f"schedule{i}": s for i, s in enumerate(cfg.schedule.split(";"))}

    dens = {"schedule": [], "ordering": [], "step": [], "theta": [], "density": []}
    sens = {"schedule": [], "spec": [], "sensitivity": [], "l1_truth_mean": []}
    for o in range(len(orderings)):
        sens[f"l1_truth_ordering{o}"] = []
    finals = {}
    for name, spec in schedules.items():
        schedule = parse_schedule(spec)
        fits = []
        for o, data in enumerate(orderings):
            state = EstimatorState(kernel, schedule, g0)
            done = 0
            for s in steps:
                state = fit(state, data[done:s])
                done = s
                dens["schedule"] += [name] * g0.size
                dens["ordering"] += [o] * g0.size
                dens["step"] += [s] * g0.size
                dens["theta"] += list(g0.nodes)
                dens["density"] += list(state.current.values)
            fits.append(state)
        finals[name] = fits
        l1s = [l1_distance(f.current, truth) for f in fits]
        sens["schedule"].append(name)
        sens["spec"].append(spec)
        sens["sensitivity"].append(max_pairwise_l1([f.current for f in fits]))
        sens["l1_truth_mean"].append(float(np.mean(l1s)))
        for o, v in enumerate(l1s):
            sens[f"l1_truth_ordering{o}"].append(v)

    tables = {
        "densities": Table(dens),
        "sensitivity": Table(sens),
        "truth": Table({"theta": truth.nodes, "density": truth.values}),
        "data": Table({"ordering": np.repeat(np.arange(len(orderings)), cfg.n),
                       "position": np.tile(np.arange(1, cfg.n + 1), len(orderings)),
                       "x": np.concatenate(orderings)}),
    }
    summary = {
        "sensitivity": dict(zip(sens["schedule"], sens["sensitivity"])),
        "l1_truth_mean": dict(zip(sens["schedule"], sens["l1_truth_mean"])),
    }
    return ExperimentResult(cfg, tables, summary, {"master": cfg.seed, "entropy": ss.entropy},
                            extra={"finals": finals, "truth": truth, "orderings": orderings},
                            elapsed_s=time.perf_counter() - t0)


def run_fig3(config: ExperimentConfig) -> ExperimentResult:
    """Marginal credible intervals for G(t_j) on the original Fig. 2 sample, two schedules side by side."""
    cfg = config.resolved()
    t0 = time.perf_counter()
    g0 = _grid_g0(cfg.g0, cfg.grid_m)
    kernel, truth, xs, ss, _ = _fig2_data(cfg, g0)
    ts = _floats(cfg.t_grid)
    sets = [halfline(t) for t in ts]
    z = stats.norm.ppf(0.5 + cfg.level / 2)

    cols = {k: [] for k in ("schedule", "t", "G_n", "lo", "hi", "half_width", "true_G", "vhat", "rate")}
    for spec in cfg.schedule.split(";"):
        schedule = parse_schedule(spec)
        state = fit(EstimatorState(kernel, schedule, g0), xs)
        C = cov_hat(state, sets)
        r = rate(schedule, state.n)
        for i, (t, A) in enumerate(zip(ts, sets)):
            point = state.current.measure_of(A)
            half = z * math.sqrt(max(C[i, i], cfg.epsilon) / r)
            cols["schedule"].append(spec)
            cols["t"].append(t)
            cols["G_n"].append(point)
            cols["lo"].append(max(point - half, 0.0))
            cols["hi"].append(min(point + half, 1.0))
            cols["half_width"].append(half)
            cols["true_G"].append(truth.measure_of(A))
            cols["vhat"].append(C[i, i])
            cols["rate"].append(r)
    tables = {"bands": Table(cols)}
    return ExperimentResult(cfg, tables, {"level": cfg.level}, {"master": cfg.seed, "entropy": ss.entropy},
                            elapsed_s=time.perf_counter() - t0)


def run_classifier_demo(config: ExperimentConfig) -> ExperimentResult:
    """Stream labelled draws, classify each before updating on it, score against the hidden labels."""
    cfg = config.resolved()
    t0 = time.perf_counter()
    kernel = parse_kernel(cfg.kernel)
    g0 = parse_mixing(cfg.g0)
    truth = parse_mixing(cfg.true_mix)
    schedule = parse_schedule(cfg.schedule)
    ss, (seed,) = _children(cfg.seed, 1)
    rng = np.random.default_rng(seed)
    labels_true = rng.choice(truth.size, size=cfg.n, p=truth.values)
    xs = np.asarray(kernel.sample(truth.nodes[labels_true], rng), dtype=float)

    state = EstimatorState(kernel, schedule, g0)
    k = g0.size
    cols = {"step": [], "true_component": []}
    for j in range(k):
        cols[f"p{j}"] = []
    cols.update({"label": [], "correct": [], "running_accuracy": []})
    correct = 0
    for i, x in enumerate(xs):
        c = classify(state, x)
        state = update(state, x)
        hit = int(c.label == labels_true[i])
        correct += hit
        cols["step"].append(i + 1)
        cols["true_component"].append(int(labels_true[i]))
        for j in range(k):
            cols[f"p{j}"].append(float(c.probabilities[j]))
        cols["label"].append(c.label)
        cols["correct"].append(hit)
        cols["running_accuracy"].append(correct / (i + 1))
    acc = correct / cfg.n
    summary = {"terminal_accuracy": acc, "final_weights": state.current.values.tolist(),
               "majority_rate": float(np.bincount(labels_true, minlength=k).max() / cfg.n)}
    return ExperimentResult(cfg, {"trace": Table(cols)}, summary, {"master": cfg.seed, "entropy": ss.entropy},
                            elapsed_s=time.perf_counter() - t0)


def run_custom(config: ExperimentConfig) -> ExperimentResult:
    """Draw n points from ``true_mix`` (default: g0), fit, and summarise the asymptotic posterior on ``sets``."""
    from .asymptotics import summarize

    cfg = config.resolved()
    t0 = time.perf_counter()
    kernel = parse_kernel(cfg.kernel)
    g0 = parse_mixing(cfg.g0, m=cfg.grid_m)
    truth = parse_mixing(cfg.true_mix, m=cfg.grid_m) if cfg.true_mix else g0
    schedule = parse_schedule(cfg.schedule)
    ss, (seed,) = _children(cfg.seed, 1)
    xs = simulate_iid_mixture(truth, kernel, cfg.n, np.random.default_rng(seed))
    state = fit(EstimatorState(kernel, schedule, g0), xs)
    sets = _parse_sets(cfg.sets)
    summ = summarize(state, sets, cfg.level, cfg.epsilon)
    name, weight = ("theta", "density") if isinstance(g0, GridDensity) else ("atom", "weight")
    tables = {
        "data": Table({"position": np.arange(1, cfg.n + 1), "x": xs}),
        "gn": Table({name: g0.nodes, weight: state.current.values}),
        "intervals": Table({"set": [str(A) for A in sets], "G_n": summ.point,
                            "lo": [iv[0] for iv in summ.intervals], "hi": [iv[1] for iv in summ.intervals],
                            "vhat": np.diag(summ.vhat), "true_G": [truth.measure_of(A) for A in sets]}),
    }
    return ExperimentResult(cfg, tables, summ.to_dict(), {"master": cfg.seed, "entropy": ss.entropy},
                            elapsed_s=time.perf_counter() - t0)


RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "classifier": run_classifier_demo,
           "custom": run_custom}


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    if config.experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    result = RUNNERS[config.experiment](config)
    if write:
        result.write()
    return result


def load_config_file(path) -> dict:
    """Read a flat ``key = value`` file; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key = key.strip().replace("-", "_")
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out
