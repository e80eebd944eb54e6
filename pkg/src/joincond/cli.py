"""Command-line interface.

Subcommands are thin adapters: each parses its input, calls exactly one
library entry point, and serializes the result (JSON for structured reports,
CSV for experiment tables).  Diagnostics go to stderr only.

Exit codes: 0 success, 2 input error, 3 dimensionally ill-posed (the report
is still emitted where one exists), 4 numerical-certificate failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ModelParams,
    desilva_lim_sequence,
    example_41_kappa,
    example_42_kappa,
    paatero_sequence,
    run_forward_error_experiment,
    sequence_table,
    write_csv,
)
from .grassmann import (
    CertificateError,
    SubspaceTuple,
    distance_to_illposed,
    is_intersecting,
    nearest_intersecting_tuple,
    projection_distance,
)
from .segre import cpd_condition_number
from .tensor import CPDecomposition, normalize_decomposition
from .waring import WaringDecomposition, waring_condition_number

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIMENSION = 3
EXIT_CERTIFICATE = 4


class InputError(Exception):
    """Unreadable or malformed input; maps to exit code 2."""


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON input {path}: {exc}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return seed


def _load_cpd(args) -> CPDecomposition:
    if args.format == "csv":
        paths = [p for p in args.input.split(",") if p]
        if not paths:
            raise InputError("csv format needs comma-separated factor paths")
        try:
            mats = [np.loadtxt(p, delimiter=",", ndmin=2) for p in paths]
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read factor CSV: {exc}") from exc
        try:
            return normalize_decomposition(mats)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    try:
        return CPDecomposition.from_json_dict(_load_json(args.input))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid decomposition JSON: {exc}") from exc


def cmd_cond_cpd(args) -> int:
    report = cpd_condition_number(_load_cpd(args))
    _emit(report.to_json_dict(), args.out)
    return EXIT_DIMENSION if report.n > report.N else EXIT_OK


def cmd_cond_waring(args) -> int:
    try:
        decomp = WaringDecomposition.from_json_dict(_load_json(args.input))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid decomposition JSON: {exc}") from exc
    report = waring_condition_number(decomp)
    _emit(report.to_json_dict(), args.out)
    return EXIT_DIMENSION if report.n > report.N else EXIT_OK


def _load_tuple(data) -> SubspaceTuple:
    try:
        return SubspaceTuple.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid subspace tuple JSON: {exc}") from exc


def cmd_grassmann(args) -> int:
    data = _load_json(args.input)
    if args.mode == "dist":
        if not (isinstance(data, list) and len(data) == 2):
            raise InputError("dist mode expects a JSON array of two tuples")
        first, second = _load_tuple(data[0]), _load_tuple(data[1])
        try:
            distance = projection_distance(first, second)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        _emit({"distance": distance}, args.out)
        return EXIT_OK
    tup = _load_tuple(data)
    if args.mode == "illposed":
        _emit(
            {
                "distance": distance_to_illposed(tup),
                "intersecting": is_intersecting(tup, args.tol),
            },
            args.out,
        )
        return EXIT_OK
    if tup.n > tup.ambient_dim:
        print("error: total block dimension exceeds the ambient dimension", file=sys.stderr)
        return EXIT_DIMENSION
    try:
        certificate = nearest_intersecting_tuple(tup)
    except CertificateError as exc:
        print(f"error: certificate tolerance not met: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(certificate.to_json_dict(original=tup), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    out_dir = Path(args.out if args.out is not None else ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "model":
        s_lo = args.s_min if args.s_min is not None else 1
        s_hi = args.s_max if args.s_max is not None else 50
        params = ModelParams(
            samples=args.samples if args.samples is not None else 250,
            base_seed=args.seed,
        )
        run_forward_error_experiment(params, range(s_lo, s_hi + 1), out_dir)
        return EXIT_OK
    if args.name in ("paatero", "dsl"):
        s_lo = args.s_min if args.s_min is not None else 1
        s_hi = args.s_max if args.s_max is not None else 90
        sequence = paatero_sequence if args.name == "paatero" else desilva_lim_sequence
        rows = sequence_table(sequence, args.seed, range(s_lo, s_hi + 1))
        write_csv(out_dir / f"{args.name}_kappa.csv", "s,kappa,max_term_norm", rows)
        return EXIT_OK
    # Fixed evaluation grids for the two explicit curve families.
    constant_rows = [(i / 10.0, example_41_kappa(i / 10.0).engine) for i in range(1, 31)]
    write_csv(out_dir / "example_constant_kappa.csv", "t,kappa", constant_rows)
    oscillating_rows = []
    for t in np.linspace(1.0, 10.0, 50):
        engine, analytic = example_42_kappa(float(t))
        oscillating_rows.append((float(t), engine, analytic))
    write_csv(
        out_dir / "example_oscillating_kappa.csv",
        "t,kappa,kappa_analytic",
        oscillating_rows,
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="joincond",
        description="Condition numbers of join decompositions: CP, Waring, "
        "and Grassmannian distance-to-ill-posedness certificates.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    cond_cpd = sub.add_parser("cond-cpd", help="condition number of a CP decomposition")
    cond_cpd.add_argument("--input", required=True, help="decomposition JSON, or comma-separated per-mode factor CSVs with --format csv")
    cond_cpd.add_argument("--format", choices=("json", "csv"), default="json")
    cond_cpd.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    cond_cpd.set_defaults(func=cmd_cond_cpd)

    cond_waring = sub.add_parser("cond-waring", help="condition number of a symmetric decomposition")
    cond_waring.add_argument("--input", required=True, help="decomposition JSON")
    cond_waring.add_argument("--out", default=None)
    cond_waring.set_defaults(func=cmd_cond_waring)

    grassmann = sub.add_parser("grassmann", help="subspace-tuple distances and certificates")
    grassmann.add_argument("--input", required=True, help="subspace tuple JSON (an array of two tuples for --mode dist)")
    grassmann.add_argument("--mode", choices=("dist", "illposed", "certify"), default="illposed")
    grassmann.add_argument("--tol", type=float, default=1e-8, help="intersection tolerance for illposed mode")
    grassmann.add_argument("--out", default=None)
    grassmann.set_defaults(func=cmd_grassmann)

    experiment = sub.add_parser("experiment", help="reproduction experiments, CSV output")
    experiment.add_argument("--name", choices=("model", "paatero", "dsl", "examples"), required=True)
    experiment.add_argument("--seed", type=_seed, default=0)
    experiment.add_argument("--samples", type=int, default=None, help="samples per s (model experiment)")
    experiment.add_argument("--s-min", type=int, default=None)
    experiment.add_argument("--s-max", type=int, default=None)
    experiment.add_argument("--out", default=None, help="output directory (default: current)")
    experiment.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
