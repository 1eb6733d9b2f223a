"""Batch command-line front end.

Commands write their results to ``--output`` (or stdout when omitted) and
log progress, including wall-clock durations, to stderr.  Output files are
written atomically (temp file plus rename) and contain no timestamps or
machine-dependent values, so a rerun with identical flags is byte-identical
regardless of ``--threads``; the thread count and durations are therefore
deliberately kept out of the files.

Exit codes: 0 success, 2 argument/usage error, 3 numeric range error,
4 solvability or resonance error from the solver, 5 file I/O or input
format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from typing import Sequence

import numpy as np

from torusres import __version__
from torusres.experiments import (
    SampleSpec,
    counting_curve,
    expectation_experiment,
    sample_params,
    tail_transition_experiment,
)
from torusres.fixedpoint import parse_real
from torusres.resonance import (
    DenominatorParams,
    count_resonances,
    margin_scan,
    wave_margin_scan,
)
from torusres.spectral import (
    FourierField,
    ReducedGeometry,
    ResonanceError,
    SolvabilityError,
    TorusGeometry,
    apply_operator,
    solve_schrodinger,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RANGE = 3
EXIT_SOLVE = 4
EXIT_IO = 5


class _InputFormatError(Exception):
    """Unreadable or malformed input file; mapped to the I/O exit code."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def _exponent(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be finite and positive: {text}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be finite and positive: {text}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"must be finite and nonnegative: {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text}")
    return value


def _real_literal(text: str) -> str:
    try:
        parse_real(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return text


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        _write_text_atomic(path, text)


def _report_text(command: str, config: dict, payload: dict) -> str:
    obj = {"command": command, "version": __version__, "config": config}
    obj.update(payload)
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(command: str, config: dict, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# torusres {__version__} {command} {json.dumps(config)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _log_duration(command: str, started: float) -> None:
    print(f"{command}: completed in {time.perf_counter() - started:.3f}s", file=sys.stderr)


def _params_from_args(args: argparse.Namespace) -> DenominatorParams:
    return DenominatorParams.from_strings(args.x, args.y)


def _params_config(args: argparse.Namespace, params: DenominatorParams) -> dict:
    # inputs echoed verbatim, plus the exact fixed-point resolution
    return {"x": args.x, "y": args.y, "params": params.to_json_dict()}


def cmd_count(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    params = _params_from_args(args)
    report = count_resonances(
        params, args.v, args.k, retain_witnesses=args.witnesses is not None, threads=args.threads
    )
    config = _params_config(args, params)
    config.update({"v": args.v, "k": args.k})
    _emit(args.output, _report_text("count", config, report.to_json_dict()))
    if args.witnesses is not None:
        rows = [
            (w.a, w.b, w.dist, w.threshold, w.nearest_c) for w in report.witnesses
        ]
        _write_text_atomic(
            args.witnesses,
            _csv_text("count", config, ("a", "b", "dist", "threshold", "nearest_c"), rows),
        )
    _log_duration("count", started)
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    params = _params_from_args(args)
    if args.equation == "schrodinger":
        result = margin_scan(params, args.v, args.k, threads=args.threads)
        form = None
    else:
        form = args.form
        result = wave_margin_scan(params, args.v, args.k, form, threads=args.threads)
    config = _params_config(args, params)
    config.update({"v": args.v, "k": args.k, "equation": args.equation, "form": form})
    _emit(args.output, _report_text("scan", config, result.to_json_dict()))
    _log_duration("scan", started)
    return EXIT_OK


def _load_field(path: str) -> FourierField:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise _InputFormatError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return FourierField.from_json_dict(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise _InputFormatError(f"{path}: {exc}") from exc


def _field_text(field: FourierField) -> str:
    return json.dumps(field.to_json_dict()) + "\n"


def _geometry_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser):
    physical = args.alpha is not None or args.beta is not None
    reduced = args.x is not None or args.y is not None
    if physical == reduced:
        parser.error("give either --alpha and --beta, or --x and --y")
    if physical:
        if args.alpha is None or args.beta is None:
            parser.error("--alpha and --beta must be given together")
        return TorusGeometry(
            alpha=args.alpha, beta=args.beta, gamma=args.gamma, mass=args.mass, hbar=args.hbar
        )
    if args.x is None or args.y is None:
        parser.error("--x and --y must be given together")
    return ReducedGeometry(
        params=DenominatorParams.from_strings(args.x, args.y), gamma=args.gamma, hbar=args.hbar
    )


def cmd_solve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    geometry = _geometry_from_args(args, parser)
    forcing = _load_field(args.forcing)
    solution = solve_schrodinger(forcing, geometry, args.min_denominator)
    _emit(args.output, _field_text(solution))
    back = apply_operator(solution, geometry)
    scale = forcing.max_abs()
    gap = float(np.max(np.abs(back.coefficients - forcing.coefficients)))
    residual = gap / scale if scale > 0 else 0.0
    params = geometry.reduce()
    config = {
        "forcing": args.forcing,
        "geometry": {
            "kind": "physical" if isinstance(geometry, TorusGeometry) else "reduced",
            "gamma": args.gamma,
            "hbar": args.hbar,
        },
        "params": params.to_json_dict(),
        "min_denominator": args.min_denominator,
    }
    if isinstance(geometry, TorusGeometry):
        config["geometry"].update({"alpha": args.alpha, "beta": args.beta, "mass": args.mass})
    else:
        config["geometry"].update({"x": args.x, "y": args.y})
    payload = {
        "box_radius": solution.box_radius,
        "max_relative_residual": residual,
        "solution_max_abs": solution.max_abs(),
    }
    if args.report is not None:
        _write_text_atomic(args.report, _report_text("solve", config, payload))
    print(f"solve: max relative residual {residual:.3e}", file=sys.stderr)
    _log_duration("solve", started)
    return EXIT_OK


def cmd_expect(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    if args.experiment == "mean":
        if args.k is None:
            parser.error("--k is required for --experiment mean")
        spec = SampleSpec(seed=args.seed, n_samples=args.samples, v=args.v, k=args.k)
        report = expectation_experiment(
            spec, threads=args.threads, keep_counts=args.samples_csv is not None
        )
        config = {"experiment": "mean", "seed": args.seed, "samples": args.samples,
                  "v": args.v, "k": args.k}
        _emit(args.output, _report_text("expect", config, report.to_json_dict()))
        if args.samples_csv is not None:
            rows = []
            for i, count in enumerate(report.counts):
                p = sample_params(args.seed, i)
                rows.append((i, p.x_frac.hex(), p.y_frac.hex(), count))
            _write_text_atomic(
                args.samples_csv,
                _csv_text("expect", config, ("sample_index", "x_hex", "y_hex", "count"), rows),
            )
    else:
        if args.j_max is None:
            parser.error("--j-max is required for --experiment tail")
        report = tail_transition_experiment(
            args.seed, args.v, args.j_max, args.samples, threads=args.threads
        )
        config = {"experiment": "tail", "seed": args.seed, "samples": args.samples,
                  "v": args.v, "j_max": args.j_max}
        _emit(args.output, _report_text("expect", config, report.to_json_dict()))
        if args.blocks_csv is not None:
            rows = [
                (b.j, b.lo, b.hi, b.empirical_mean, b.empirical_sd, b.exact_expectation)
                for b in report.blocks
            ]
            _write_text_atomic(
                args.blocks_csv,
                _csv_text(
                    "expect",
                    config,
                    ("j", "lo", "hi", "empirical_mean", "empirical_sd", "exact_expectation"),
                    rows,
                ),
            )
    _log_duration("expect", started)
    return EXIT_OK


def _plot_cutoffs(k_max: int) -> list[int]:
    ks = []
    j = 0
    while (1 << j) <= k_max:
        ks.append(1 << j)
        j += 1
    if ks[-1] != k_max:
        ks.append(k_max)
    return ks


def cmd_plotdata(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    ks = _plot_cutoffs(args.k_max)
    report = counting_curve(args.seed, args.v, ks, args.samples, threads=args.threads)
    config = {"seed": args.seed, "samples": args.samples, "v": args.v, "k_max": args.k_max}
    rows = []
    for series in ("empirical_mean", "empirical_sd", "exact_expectation", "predicted"):
        for point in report.points:
            rows.append((series, point.k, getattr(point, series)))
    _emit(args.output, _csv_text("plotdata", config, ("series", "k", "value"), rows))
    _log_duration("plotdata", started)
    return EXIT_OK


def _add_params_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--x", required=True, type=_real_literal,
                     help="x as decimal, rational p/q, sqrt:N, or fp:0x<32 hex>")
    sub.add_argument("--y", required=True, type=_real_literal,
                     help="y in the same forms as --x")


def _add_common_output(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--output", default=None, help="output path (default: stdout)")
    sub.add_argument("--threads", type=_positive_int, default=1,
                     help="worker threads; results are identical for any value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusres",
        description="Resonance counting, margin scans and Fourier solving on the 2-torus.",
    )
    parser.add_argument("--version", action="version", version=f"torusres {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    count = commands.add_parser("count", help="count resonant mode pairs")
    _add_params_args(count)
    count.add_argument("--v", required=True, type=_exponent, help="resonance exponent v > 0")
    count.add_argument("--k", required=True, type=_positive_int, help="grid cutoff: 1 <= a, b <= k")
    count.add_argument("--witnesses", default=None, help="optional CSV path for resonant pairs")
    _add_common_output(count)
    count.set_defaults(func=cmd_count)

    scan = commands.add_parser("scan", help="minimum weighted denominator margin over a grid")
    _add_params_args(scan)
    scan.add_argument("--v", required=True, type=_exponent, help="weight exponent v > 0")
    scan.add_argument("--k", required=True, type=_positive_int, help="grid cutoff")
    scan.add_argument("--equation", choices=("schrodinger", "wave"), default="schrodinger")
    scan.add_argument("--form", choices=("quadratic", "factored"), default="quadratic",
                      help="wave margin form (ignored for --equation schrodinger)")
    _add_common_output(scan)
    scan.set_defaults(func=cmd_scan)

    solve = commands.add_parser("solve", help="solve the forced equation in Fourier space")
    solve.add_argument("--forcing", required=True, help="forcing field JSON path")
    solve.add_argument("--alpha", type=_positive_float, default=None, help="torus length alpha")
    solve.add_argument("--beta", type=_positive_float, default=None, help="torus length beta")
    solve.add_argument("--x", type=_real_literal, default=None,
                       help="reduced parameter x (alternative to --alpha/--beta)")
    solve.add_argument("--y", type=_real_literal, default=None, help="reduced parameter y")
    solve.add_argument("--gamma", type=_positive_float, default=2.0 * math.pi,
                       help="time period (default 2*pi)")
    solve.add_argument("--mass", type=_positive_float, default=1.0, help="mass (default 1)")
    solve.add_argument("--hbar", type=_positive_float, default=1.0, help="hbar (default 1)")
    solve.add_argument("--min-denominator", type=_nonneg_float, default=None,
                       help="resonance cutoff (default 1e-14 * max(1, |x|+|y|))")
    solve.add_argument("--report", default=None, help="optional JSON path for the residual report")
    _add_common_output(solve)
    solve.set_defaults(func=None, solve=True)

    expect = commands.add_parser("expect", help="seeded expectation experiments")
    expect.add_argument("--experiment", choices=("mean", "tail"), required=True)
    expect.add_argument("--seed", required=True, type=_seed,
                        help="explicit seed; randomized commands never self-seed")
    expect.add_argument("--samples", required=True, type=_positive_int, help="number of samples")
    expect.add_argument("--v", required=True, type=_exponent)
    expect.add_argument("--k", type=_positive_int, default=None, help="cutoff for --experiment mean")
    expect.add_argument("--j-max", type=_positive_int, default=None,
                        help="largest dyadic block index for --experiment tail")
    expect.add_argument("--samples-csv", default=None,
                        help="optional per-sample CSV (mean experiment)")
    expect.add_argument("--blocks-csv", default=None,
                        help="optional per-block CSV (tail experiment)")
    _add_common_output(expect)
    expect.set_defaults(func=None, expect=True)

    plot = commands.add_parser("plotdata", help="plot-ready counting curves as CSV")
    plot.add_argument("--seed", required=True, type=_seed)
    plot.add_argument("--samples", required=True, type=_positive_int)
    plot.add_argument("--v", required=True, type=_exponent)
    plot.add_argument("--k-max", required=True, type=_positive_int)
    _add_common_output(plot)
    plot.set_defaults(func=cmd_plotdata)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "solve", False):
            return cmd_solve(args, parser)
        if getattr(args, "expect", False):
            return cmd_expect(args, parser)
        return args.func(args)
    except OverflowError as exc:
        print(f"torusres: range error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except (SolvabilityError, ResonanceError) as exc:
        print(f"torusres: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    except (_InputFormatError, OSError) as exc:
        print(f"torusres: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"torusres: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
