"""Command-line front end.

    quasibayes fit --data points.csv --kernel gaussian:sigma2=1 --g0 normal:mean=1,var=9 \\
        --schedule poly:alpha=1,beta=1 --out gn.csv
    quasibayes simulate cid --n 1000 --replicas 200 --seed 42 --out sims.csv
    quasibayes posterior --state gn.csv --sets "(-inf,0];(-inf,1]" --out summary.json
    quasibayes experiment fig1 --out-dir out/fig1

``--config path`` reads a flat ``key=value`` file; explicit flags win over it.
Exit codes: 0 success, 2 validation error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .asymptotics import DEFAULT_EPSILON, summarize
from .errors import DegenerateEvidenceError, NumericalDomainError
from .experiments import ConfigError, ExperimentConfig, load_config_file, run_experiment
from .kernels import parse_kernel
from .mixing import DiscreteMixing, Interval, parse_mixing, read_csv
from .recursion import EstimatorState, fit, parse_schedule
from .simulate import simulate_cid_replicas, simulate_iid_mixture

log = logging.getLogger("quasibayes")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def read_observations(path) -> np.ndarray:
    """One observation per line; a non-numeric first line is taken as a header."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]
    try:
        return np.array([float(ln.split(",")[0]) for ln in lines])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def parse_sets(text: str) -> list[Interval]:
    sets = [Interval.parse(part) for part in text.split(";") if part.strip()]
    if not sets:
        raise ValueError("no sets given")
    return sets


def _prior(args):
    return parse_mixing(args.g0, m=args.grid_m)


def _cmd_fit(args) -> int:
    kernel = parse_kernel(args.kernel)
    schedule = parse_schedule(args.schedule)
    state = EstimatorState(kernel, schedule, _prior(args))
    xs = read_observations(args.data)
    t0 = time.perf_counter()
    state = fit(state, xs, skip_degenerate=args.skip_degenerate)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    out = Path(args.out)
    state.current.to_csv(out)
    meta = {"n": state.n, "schedule": args.schedule, "kernel": args.kernel, "elapsed_ms": elapsed_ms,
            "g0": args.g0, "limit": state.report()}
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    kernel = parse_kernel(args.kernel)
    rng = np.random.default_rng(args.seed)
    if args.mode == "cid":
        start = EstimatorState(kernel, parse_schedule(args.schedule), _prior(args))
        ens = simulate_cid_replicas(start, args.n, args.replicas, rng)
        xs, thetas = ens.xs, ens.thetas
    else:
        truth = parse_mixing(args.true_mix or args.g0, m=args.grid_m)
        xs = np.stack([simulate_iid_mixture(truth, kernel, args.n, rng) for _ in range(args.replicas)])
        thetas = None
    steps = np.arange(1, args.n + 1)

    def rows(r):
        for k in range(args.n):
            extra = [repr(float(thetas[r, k]))] if thetas is not None else []
            yield [str(r), str(steps[k]), *extra, repr(float(xs[r, k]))]

    header = ["replica", "step"] + (["theta"] if thetas is not None else []) + ["x"]
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        width = len(str(args.replicas - 1))
        for r in range(args.replicas):
            _write_rows(out / f"replica_{r:0{width}d}.csv", header, rows(r))
    else:
        _write_rows(Path(args.out), header, (row for r in range(args.replicas) for row in rows(r)))
    return EXIT_OK


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _cmd_posterior(args) -> int:
    state_path = Path(args.state)
    meta_path = Path(args.meta) if args.meta else state_path.with_suffix(".json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    mix = read_csv(state_path)
    state = EstimatorState(parse_kernel(meta["kernel"]), parse_schedule(meta["schedule"]), mix, n=int(meta["n"]))
    if isinstance(mix, DiscreteMixing):
        log.info("discrete state: sets select atoms inside each interval")
    summary = summarize(state, parse_sets(args.sets), args.level, args.epsilon).to_dict()
    text = json.dumps(summary, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


_EXPERIMENT_FIELDS = ("kernel", "g0", "schedule", "n", "replicas", "seed", "out_dir", "sets", "grid_m",
                      "proxy_n", "sigma2", "snapshots", "t_grid", "level", "epsilon", "true_mix")


def _cmd_experiment(args) -> int:
    kw = {k: getattr(args, k) for k in _EXPERIMENT_FIELDS if getattr(args, k, None) is not None}
    cfg = ExperimentConfig(experiment=args.name, **kw)
    result = run_experiment(cfg, write=False)
    out = result.write(args.out_dir or f"out_{args.name}")
    print(f"{args.name}: wrote {len(result.tables)} tables to {out} in {result.elapsed_s:.1f}s")
    return EXIT_OK


def _model_flags(p, prior_default="normal:mean=0,var=4"):
    p.add_argument("--kernel", default="gaussian:sigma2=1", help="gaussian:sigma2=.. | poisson | gamma:shape=..")
    p.add_argument("--g0", default=prior_default, help="prior guess spec or CSV path")
    p.add_argument("--schedule", default="poly:alpha=1,beta=1",
                   help="poly:alpha=..,beta=.. | piecewise:alpha=..,n0=..,beta1=..,beta2=.. | explicit:a|b|..")
    p.add_argument("--grid-m", dest="grid_m", type=int, default=1001, help="grid size for parametric g0 specs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasibayes", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="flat key=value file; explicit flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run the recursion over a data file")
    p.add_argument("--data", required=True)
    _model_flags(p)
    p.add_argument("--out", default="gn.csv")
    p.add_argument("--skip-degenerate", dest="skip_degenerate", action="store_true",
                   help="log and skip observations with zero predictive density instead of aborting")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="draw c.i.d. or i.i.d. sequences")
    p.add_argument("mode", choices=["cid", "iid"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _model_flags(p)
    p.add_argument("--true-mix", dest="true_mix", help="mixing distribution for iid draws (default: g0)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--out", default="simulations.csv", help="single long-format CSV")
    group.add_argument("--out-dir", dest="out_dir", help="one CSV per replica")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("posterior", help="asymptotic credible intervals and region from a fitted state")
    p.add_argument("--state", required=True)
    p.add_argument("--meta", help="JSON sidecar written by fit (default: next to --state)")
    p.add_argument("--sets", required=True, help='e.g. "(-inf,0];(-inf,1]"')
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_posterior)

    p = sub.add_parser("experiment", help="reproduction studies")
    p.add_argument("name", choices=["fig1", "fig2", "fig3", "classifier", "custom"])
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--proxy-n", dest="proxy_n", type=int, help="fig1 horizon N used as a proxy for the limit")
    p.add_argument("--grid-m", dest="grid_m", type=int)
    p.add_argument("--kernel")
    p.add_argument("--g0")
    p.add_argument("--schedule", help="';'-separated for fig3")
    p.add_argument("--sets")
    p.add_argument("--sigma2", help="comma-separated kernel variances for fig1")
    p.add_argument("--snapshots", help="comma-separated steps for fig2")
    p.add_argument("--t-grid", dest="t_grid", help="comma-separated t_j for fig3")
    p.add_argument("--level", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--true-mix", dest="true_mix")
    p.set_defaults(func=_cmd_experiment)
    return parser


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def _apply_config(parser, path) -> None:
    """Install config values as defaults so that explicit flags override them."""
    values = load_config_file(path)
    known = set()
    for sp in _subparsers(parser).values():
        types = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in values.items():
            action = types.get(key)
            if action is None or not action.option_strings:
                continue
            known.add(key)
            if action.const is True and action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(raw) if action.type else raw
            action.required = False
        sp.set_defaults(**defaults)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    try:
        if known.config:
            _apply_config(parser, known.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DegenerateEvidenceError, NumericalDomainError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
