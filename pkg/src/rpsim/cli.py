"""Command-line front end.

Four subcommands mirror the library layers: ``simulate`` (event-driven
ensembles), ``meanfield`` (deterministic limit), ``fluctuation`` (second
moments and sample paths of the Gaussian correction), ``validate`` (the
statistical harness).  All output is deterministic for fixed arguments.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .core import ModelSpec, RpsimError, counts_from_fractions, symmetric_counts
from .fluctuation import FluctuationModel, propagate_covariance, run_sde_ensemble
from .meanfield import DEFAULT_STEP, integrate
from .simulate import DEFAULT_MAX_EVENTS, run_ensemble
from .validate import ValidationConfig, run_validation

__all__ = ["main"]


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _spec_from_args(args) -> ModelSpec:
    if args.initial is not None:
        counts = _ints(args.initial)
        return ModelSpec(n=len(counts), lam=args.rate, total=sum(counts),
                         initial=counts)
    if args.fractions is not None:
        fracs = _floats(args.fractions)
        counts = counts_from_fractions(fracs, args.total)
        return ModelSpec(n=len(counts), lam=args.rate, total=args.total,
                         initial=counts)
    counts = symmetric_counts(args.n, args.total)
    return ModelSpec(n=args.n, lam=args.rate, total=args.total, initial=counts)


def _grid_from_args(args, t_end: float) -> np.ndarray:
    if getattr(args, "grid", None) is not None:
        return np.array(_floats(args.grid))
    return np.linspace(0.0, t_end, args.grid_points)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=3, help="number of species")
    p.add_argument("--rate", type=float, default=1.0,
                   help="pairwise collision rate")
    p.add_argument("--total", type=int, default=1000,
                   help="population size M")
    p.add_argument("--initial", help="comma-separated species counts "
                   "(overrides --n/--total/--fractions)")
    p.add_argument("--fractions", help="comma-separated initial fractions, "
                   "converted to counts by largest remainder")


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    grid = _grid_from_args(args, args.t_end)
    ens = run_ensemble(spec, args.replicas, args.t_end, grid, args.base_seed,
                       workers=args.workers, record_events=args.events,
                       max_events=args.max_events)
    out = io.write_ensemble(ens, args.out)
    absorbed = sum(t.absorbed is not None for t in ens.trajectories)
    print(f"wrote {ens.replicas} trajectories to {out} "
          f"({absorbed} absorbed by t={args.t_end:g})")
    return 0


def _cmd_meanfield(args) -> int:
    u0 = _floats(args.u0) if args.u0 is not None else \
        np.full(args.n, 1.0 / args.n)
    grid = _grid_from_args(args, args.t_end)
    path = integrate(u0, args.rate, t_end=args.t_end, step=args.step,
                     grid=grid)
    out = io.write_meanfield(path, args.out)
    audit = path.invariant_audit
    print(f"wrote {len(path.states)} states to {out} "
          f"(max |sum-1|={np.max(np.abs(audit.sums - audit.sums[0])):.3e}, "
          f"max |prod drift|="
          f"{np.max(np.abs(audit.products - audit.products[0])):.3e})")
    return 0


def _cmd_fluctuation(args) -> int:
    u0 = _floats(args.u0) if args.u0 is not None else \
        np.full(args.n, 1.0 / args.n)
    n = len(u0)
    grid = _grid_from_args(args, args.t_end)
    path = integrate(u0, args.rate, t_end=args.t_end, step=args.step,
                     grid=grid)
    model = FluctuationModel.from_path(path, args.rate)
    if args.sigma0 is None:
        sigma0 = np.zeros((n, n))
    else:
        vals = _floats(args.sigma0)
        sigma0 = np.array(vals).reshape(n, n)
    states = propagate_covariance(model, sigma0)
    from pathlib import Path
    out = Path(args.out)
    io.write_meanfield(path, out / "meanfield.csv")
    io.write_covariances(states, out / "covariance.csv")
    wrote = ["meanfield.csv", "covariance.csv"]
    if args.paths > 0:
        sde = run_sde_ensemble(model, None, args.step, grid, args.paths,
                               args.base_seed)
        io.write_gaussian_paths(sde, out / "paths.csv")
        wrote.append("paths.csv")
    print(f"wrote {', '.join(wrote)} to {out}")
    return 0


def _cmd_validate(args) -> int:
    config = ValidationConfig.from_ini(args.config) if args.config \
        else ValidationConfig()
    reports = run_validation(config, workers=args.workers, echo=print)
    io.write_validation_reports(reports, args.out)
    ok = all(r.passed for r in reports.values())
    print(f"summary: {'ALL PASS' if ok else 'FAILURES'} (reports in {args.out})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpsim",
        description="cyclic prey-predator collision model: exact simulation, "
                    "deterministic limit, Gaussian fluctuations, validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an event-driven ensemble")
    _add_model_args(p)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--grid-points", type=int, default=11)
    p.add_argument("--grid", help="explicit comma-separated sample times")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-events", type=int, default=DEFAULT_MAX_EVENTS)
    events = p.add_mutually_exclusive_group()
    events.add_argument("--events", dest="events", action="store_true",
                        default=None, help="force event-log retention")
    events.add_argument("--no-events", dest="events", action="store_false",
                        help="samples-only mode")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("meanfield", help="integrate the deterministic limit")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--u0", help="comma-separated initial fractions")
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--grid", help="explicit comma-separated report times")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=_cmd_meanfield)

    p = sub.add_parser("fluctuation",
                       help="propagate fluctuation covariance (and sample "
                            "linear-noise paths)")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--u0", help="comma-separated initial fractions")
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--grid-points", type=int, default=11)
    p.add_argument("--grid", help="explicit comma-separated report times")
    p.add_argument("--sigma0", help="initial covariance, row-major "
                   "comma-separated (default zeros)")
    p.add_argument("--paths", type=int, default=0,
                   help="number of sample paths to draw (0 = none)")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fluctuation)

    p = sub.add_parser("validate", help="run the statistical harness")
    p.add_argument("--config", help="INI file; defaults are used when omitted")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RpsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
