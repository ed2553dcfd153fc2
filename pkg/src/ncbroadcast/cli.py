"""Command-line harness.

::

    ncbroadcast simulate --coding b --lambda 0.7 --horizon 100000
    ncbroadcast analyze --lambda 0.5 0.6 0.7 --mu 0.8
    ncbroadcast sweep --config grid.txt --out results/grid
    ncbroadcast reproduce fig10 --horizon 200000 --out results/fig10
    ncbroadcast compare results/fig3/fig3.csv results/fig3/fig3_analytic.csv --tol 0.05

Set ``NCB_WORKERS`` to run sweep points in parallel.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, analytic
from .config import ConfigError, load_config
from .csvio import dumps, read_csv, write_csv
from .experiments import (
    CUSTOM_HEADER,
    EXPERIMENTS,
    GRID_KEYS,
    ExperimentSpec,
    custom_configs,
    metrics_row,
    run_experiment,
    run_many,
)
from .ratectrl import expected_time_to_zero
from .seeds import point_seed
from .sim import TRACE_HEADER, iter_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

RATE_CHOICES = ("baseline", "threshold", "dynamic")
MODE_CHOICES = ("full", "zero", "zero-leader")


class CompareError(ValueError):
    pass


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters (several values form a grid)")
    g.add_argument("--receivers", "-R", type=int, nargs="+")
    g.add_argument("--mu", type=float, nargs="+")
    g.add_argument("--coding", choices=("a", "b", "rlnc"), nargs="+")
    g.add_argument("--rate", choices=RATE_CHOICES, nargs="+")
    g.add_argument("--lambda", dest="lam", type=float, nargs="+")
    g.add_argument("--td", type=int, nargs="+")
    g.add_argument("--f", type=float, nargs="+")
    g.add_argument("--field-exp", type=int, nargs="+")
    g.add_argument("--delivery-mode", choices=MODE_CHOICES, nargs="+")
    p.add_argument("--horizon", type=int, help="slots per run")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None, help="repetitions per point")
    p.add_argument("--config", type=Path, help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncbroadcast", description="Network-coded broadcast simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration")
    _add_params(p)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")
    p.add_argument("--trace", type=Path, help="write the per-slot trace of the first repetition")

    p = sub.add_parser("analyze", help="tabulate closed-form quantities")
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[0.3, 0.5, 0.6, 0.7, 0.75])
    p.add_argument("--mu", type=float, nargs="+", default=[0.8])
    p.add_argument("--t-max", type=int, default=analytic.DEFAULT_T_MAX)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    for name, help_text in (("sweep", "run a parameter grid"), ("reproduce", "regenerate a figure's data")):
        p = sub.add_parser(name, help=help_text)
        if name == "reproduce":
            p.add_argument("experiment", choices=EXPERIMENTS)
        _add_params(p)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--no-plots", action="store_true", help="write CSV only")

    p = sub.add_parser("compare", help="check a simulated CSV against a reference CSV")
    p.add_argument("sim_csv", type=Path)
    p.add_argument("reference_csv", type=Path)
    p.add_argument("--value", default="delay", help="column to compare")
    p.add_argument("--key", help="comma-separated key columns (default: shared columns)")
    p.add_argument("--tol", type=float, default=0.05, help="relative tolerance")
    return parser


# -- argument plumbing ---------------------------------------------------------

def _grids(args) -> tuple[dict, dict]:
    """Merge the config file and flags into (grids, scalars)."""
    grids, scalars = {}, {}
    if args.config is not None:
        for key, values in load_config(args.config).items():
            if key in GRID_KEYS:
                grids[key] = values
            else:
                scalars[key] = values[0]
    for key in GRID_KEYS:
        values = getattr(args, key, None)
        if values is not None:
            grids[key] = list(values)
    for key in ("horizon", "seed", "reps"):
        value = getattr(args, key, None)
        if value is not None:
            scalars[key] = value
    return grids, scalars


def _spec(args, name: str) -> ExperimentSpec:
    grids, scalars = _grids(args)
    out = args.out or scalars.get("out") or Path("results") / name
    return ExperimentSpec(
        name=name,
        grids=grids,
        horizon=scalars.get("horizon"),
        seed=scalars.get("seed", 0),
        reps=scalars.get("reps", 1),
        out=Path(out),
        plots=not args.no_plots,
    )


# -- subcommands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = _spec_simulate(args)
    configs = custom_configs(spec)
    if len(configs) != 1:
        raise ValueError("simulate takes one value per parameter; use sweep for grids")
    base = configs[0]
    if spec.reps == 1:
        reps = [replace(base, seed=spec.seed)]
    else:
        reps = [replace(base, seed=point_seed(spec.seed, r, 0)) for r in range(spec.reps)]
    metrics = run_many(reps)
    text = dumps(CUSTOM_HEADER, [metrics_row(base, metrics)])
    _emit(text, args.out)
    if args.trace is not None:
        rows = (s.to_row() for s in iter_trace(reps[0]))
        write_csv(args.trace, TRACE_HEADER, rows)
    return EXIT_OK


def _spec_simulate(args) -> ExperimentSpec:
    grids, scalars = _grids(args)
    return ExperimentSpec(
        name="custom", grids=grids, horizon=scalars.get("horizon"),
        seed=scalars.get("seed", 0), reps=scalars.get("reps", 1),
    )


ANALYZE_HEADER = [
    "lam", "mu", "rho", "p", "q", "stationary_0", "mean_state", "cycle_mass",
    "zero_state_delay", "zero_state_delay_printed", "time_to_zero_1",
]


def cmd_analyze(args) -> int:
    rows = []
    for lam in args.lam:
        for mu in args.mu:
            cp = analytic.ChainParams(lam, mu)
            if not lam < mu:
                continue
            a = cp.ratio
            rows.append([
                lam, mu, cp.rho, cp.p, cp.q,
                analytic.stationary(lam, mu, 0),
                a / (1 - a),
                analytic.expected_cycle_mass(lam, mu, args.t_max),
                analytic.zero_state_delay_estimate(lam, mu, args.t_max, "consistent"),
                analytic.zero_state_delay_estimate(lam, mu, args.t_max, "printed"),
                expected_time_to_zero(1, lam, mu),
            ])
    if not rows:
        raise ValueError("no stable (lambda < mu) pairs in the grid")
    _emit(dumps(ANALYZE_HEADER, rows), args.out)
    return EXIT_OK


def cmd_experiment(args, name: str) -> int:
    spec = _spec(args, name)
    if spec.plots:
        try:
            import matplotlib  # noqa: F401
        except ImportError:
            print("matplotlib not installed; writing CSV only", file=sys.stderr)
            spec.plots = False
    for path in run_experiment(spec):
        print(path)
    return EXIT_OK


def compare_tables(sim_csv, ref_csv, value: str, keys: list[str] | None, tol: float):
    """Yield (key, sim, ref, rel_error, ok) per point; raises CompareError on key trouble."""
    sh, srows = read_csv(sim_csv)
    rh, rrows = read_csv(ref_csv)
    for name, header in (("simulation", sh), ("reference", rh)):
        if value not in header:
            raise CompareError(f"{name} file has no column {value!r}")
    if keys is None:
        keys = [c for c in sh if c in rh and c != value]
    if not keys:
        raise CompareError("no key columns shared by both files")
    for k in keys:
        if k not in sh or k not in rh:
            raise CompareError(f"key column {k!r} missing from one file")

    def index(header, rows, label):
        ki = [header.index(k) for k in keys]
        vi = header.index(value)
        out = {}
        for row in rows:
            key = tuple(row[i] for i in ki)
            if key in out:
                raise CompareError(f"duplicate key {key} in {label} file")
            out[key] = row[vi]
        return out

    sim = index(sh, srows, "simulation")
    ref = index(rh, rrows, "reference")
    if set(sim) != set(ref):
        missing = sorted(set(sim) ^ set(ref), key=str)
        raise CompareError(f"key mismatch: {missing[:5]}")
    results = []
    for key in sim:
        a, b = sim[key], ref[key]
        if not isinstance(a, (int, float)) or not isinstance(b, (int, float)):
            raise CompareError(f"non-numeric value at {key}")
        # absolute error when the reference is exactly zero
        err = abs(a - b) / abs(b) if b else abs(a - b)
        ok = not math.isnan(err) and err <= tol
        results.append((key, a, b, err, ok))
    return keys, results


def cmd_compare(args) -> int:
    keys = args.key.split(",") if args.key else None
    try:
        keys, results = compare_tables(args.sim_csv, args.reference_csv, args.value, keys, args.tol)
    except CompareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = [[*key, a, b, err, "pass" if ok else "FAIL"] for key, a, b, err, ok in results]
    sys.stdout.write(dumps([*keys, "sim", "reference", "rel_error", "status"], rows))
    failed = sum(not r[-1] for r in results)
    print(f"{len(results) - failed}/{len(results)} within {args.tol:g}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "sweep":
            return cmd_experiment(args, "custom")
        if args.command == "reproduce":
            return cmd_experiment(args, args.experiment)
        return cmd_compare(args)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
