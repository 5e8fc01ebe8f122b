"""Command-line front end: ``pbpulse {gen,scan,metrics,solve,simulate,overlap}``.

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 internal
consistency failure.  ``PBPULSE_WORKERS`` sets the thread count for scans
and multi-start solves.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import profiles, sequences, solver, timesim
from .errors import ConsistencyError, ConvergenceError, InvalidInputError

EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_CONSISTENCY = 4

KIND_CHOICES = ("single", "bb", "nb", "nb-of-bb", "bb-of-nb", "wimperis-pb2")


def _workers() -> int:
    raw = os.environ.get("PBPULSE_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInputError(f"PBPULSE_WORKERS must be an integer, got {raw!r}") from None


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise InvalidInputError(f"cannot write {path}: {exc}") from exc


def _round_floats(obj, digits):
    if digits is None:
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, list):
        return [_round_floats(x, digits) for x in obj]
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    return obj


def _sequence_from_args(args) -> sequences.PhaseList:
    if getattr(args, "sequence", None):
        if args.kind:
            raise InvalidInputError("give either a sequence or --kind, not both")
        return sequences.load_sequence(args.sequence)
    kind = args.kind
    if kind is None:
        raise InvalidInputError("a sequence selector, JSON path or --kind is required")
    raw = getattr(args, "raw", False)
    if kind == "single":
        return sequences.single_pulse()
    if kind == "wimperis-pb2":
        return sequences.wimperis_pb2()
    if kind == "bb":
        return sequences.broadband_phases(_need(args.bb, "--bb"))
    if kind == "nb":
        ph = sequences.narrowband_phases(_need(args.nb, "--nb"))
        return ph if raw else sequences.canonicalize(ph)
    if kind == "nb-of-bb":
        return sequences.nest_nb(_need(args.nb, "--nb"), _need(args.bb, "--bb"), canonical=not raw)
    return sequences.nest_bn(_need(args.bb, "--bb"), _need(args.nb, "--nb"), canonical=not raw)


def _need(value, flag):
    if value is None:
        raise InvalidInputError(f"{flag} is required for this kind")
    return value


def _add_sequence_args(p, positional=True):
    if positional:
        p.add_argument("sequence", nargs="?",
                       help='selector such as "N3(B5)", "B3(N5)", "B7", "wimperis", or a JSON file')
    p.add_argument("--kind", choices=KIND_CHOICES)
    p.add_argument("--bb", type=int, help="broadband order N_b")
    p.add_argument("--nb", type=int, help="narrowband order N_n")


def _grid(args):
    return profiles.area_grid(args.start * math.pi, args.stop * math.pi, args.points)


def cmd_gen(args):
    ph = _sequence_from_args(args)
    _emit(ph.to_json() + "\n", args.output)


def cmd_scan(args):
    ph = _sequence_from_args(args)
    grid = _grid(args)
    if args.source == "analytic":
        scan = profiles.scan_analytic(ph, grid)
    else:
        scan = profiles.scan_matrix(ph, grid, workers=_workers())
    _emit(scan.to_csv(round_digits=args.round), args.output)


def cmd_metrics(args):
    ph = _sequence_from_args(args)
    metrics = profiles.fidelity_bands(ph, args.threshold, _grid(args))
    data = _round_floats(metrics.to_dict(), args.round)
    data["sequence"] = ph.label
    _emit(json.dumps(data, indent=2) + "\n", args.output)


def cmd_solve(args):
    if args.seed in ("nested", "random"):
        seed = args.seed
    else:
        seed = sequences.load_sequence(args.seed)
    config = solver.SolverConfig(tol=args.tol, max_iter=args.max_iter, n_starts=args.starts,
                                 perturb=args.perturb, rng_seed=args.rng_seed,
                                 workers=_workers())
    try:
        result = solver.solve_pb(args.n, args.bb, args.nb, seed, config)
    except ConvergenceError as exc:
        if exc.best is not None and args.report:
            _emit(exc.best.report_json() + "\n", args.report)
        raise
    _emit(result.phases.to_json() + "\n", args.output)
    if args.report:
        _emit(result.report_json() + "\n", args.report)


def _train_kwargs(args):
    return dict(shape=timesim.PulseShape.parse(args.shape), overlap_fraction=args.overlap,
                inter_pulse_gap=args.gap)


def cmd_simulate(args):
    ph = _sequence_from_args(args)
    kw = _train_kwargs(args)
    if args.epsilon is not None:
        upper, lower = timesim.evolution_trace_pair(ph, args.epsilon, **kw)
        stem = args.output or "trace"
        if stem == "-":
            raise InvalidInputError("a trace pair needs a file stem, not stdout")
        stem = stem[:-4] if stem.endswith(".csv") else stem
        _emit(upper.to_csv(round_digits=args.round), f"{stem}_upper.csv")
        _emit(lower.to_csv(round_digits=args.round), f"{stem}_lower.csv")
        return
    area = (args.area if args.area is not None else 1.0) * math.pi
    trace = timesim.integrate(timesim.PulseTrainSpec(ph, area, **kw), args.samples)
    _emit(trace.to_csv(round_digits=args.round), args.output)


def cmd_overlap(args):
    ph = _sequence_from_args(args)
    try:
        overlaps = [float(x) for x in args.overlaps.split(",")]
    except ValueError:
        raise InvalidInputError(f"bad overlap list {args.overlaps!r}") from None
    scans = timesim.overlap_scan(ph, overlaps, _grid(args),
                                 shape=timesim.PulseShape.parse(args.shape),
                                 samples_per_pulse=args.samples)
    _emit(timesim.overlap_csv(overlaps, scans, round_digits=args.round), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbpulse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a phase sequence as JSON")
    _add_sequence_args(p)
    p.add_argument("--raw", action="store_true", help="keep signed phases (no mod 2pi)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    def grid_args(p, points):
        p.add_argument("--start", type=float, default=0.0, help="first area, units of pi")
        p.add_argument("--stop", type=float, default=2.0, help="last area, units of pi")
        p.add_argument("--points", type=int, default=points)
        p.add_argument("--round", type=int, default=None, metavar="DIGITS")
        p.add_argument("-o", "--output")

    p = sub.add_parser("scan", help="excitation profile CSV")
    _add_sequence_args(p)
    p.add_argument("--source", choices=("matrix", "analytic"), default="matrix")
    grid_args(p, profiles.DEFAULT_POINTS)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("metrics", help="HWHM, steepness and fidelity bands as JSON")
    _add_sequence_args(p)
    p.add_argument("--threshold", type=float, default=profiles.DEFAULT_THRESHOLD)
    grid_args(p, profiles.DEFAULT_POINTS)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("solve", help="solve the passband conditions numerically")
    p.add_argument("--n", type=int, required=True, help="number of pulses (odd)")
    p.add_argument("--bb", type=int, required=True, help="flat-top order")
    p.add_argument("--nb", type=int, required=True, help="flat-bottom order")
    p.add_argument("--seed", default="nested", help='"nested", "random", selector or JSON file')
    p.add_argument("--perturb", type=float, default=0.0, help="uniform seed noise (rad)")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--tol", type=float, default=solver.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("-o", "--output")
    p.add_argument("--report", help="write the solver report JSON here")
    p.set_defaults(func=cmd_solve)

    def train_args(p):
        p.add_argument("--shape", default="rect", help="rect | raised-cosine[:edge] | gaussian[:trunc]")
        p.add_argument("--overlap", type=float, default=0.0, help="overlap area fraction")
        p.add_argument("--gap", type=float, default=0.0, help="gap between slots, units of T")
        p.add_argument("--samples", type=int, default=16, help="initial RK4 steps per pulse")

    p = sub.add_parser("simulate", help="time-domain population trace(s)")
    _add_sequence_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--area", type=float, help="per-pulse area, units of pi (default 1)")
    group.add_argument("--epsilon", type=float,
                       help="write traces for areas (1-eps)pi and eps*pi to STEM_upper/lower.csv")
    train_args(p)
    p.add_argument("--round", type=int, default=None, metavar="DIGITS")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("overlap", help="time-domain profiles for several overlap fractions")
    _add_sequence_args(p)
    p.add_argument("--overlaps", default="0,0.0001,0.001,0.01")
    train_args(p)
    grid_args(p, 401)
    p.set_defaults(func=cmd_overlap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    return 0


if __name__ == "__main__":
    sys.exit(main())
