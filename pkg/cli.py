#!/usr/bin/env python3
"""
Command-line front end: group, kernel, extend, decompose, bmo-norm, h1-norm
and verify subcommands over the JSON/CSV interfaces.

Exit status: 0 on success, 1 when a check or a validation fails, 2 on usage,
input or I/O errors. Every output carries the run-config fingerprint.
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from adapters.serialization import (
    atom_list_to_dict,
    chamber_from_dict,
    chamber_to_dict,
    dumps,
    frame_to_csv,
    function_to_dict,
    load_atom_list,
    load_function,
    read_json,
    sampled_to_frame,
    write_csv,
    write_json,
)
from atoms import GLOBAL, LOCAL, decompose_eta, extend_atoms
from bmo import FLAVORS, SAMPLES, CubeFamily, bmo_norm, eta_bmo_norm, intrinsic_M1_M2, sample_functions
from config import RunConfig, load_run_config, parse_t_grid, settings
from errors import EtaHardyError, InvalidArgument
from geometry import EtaVector, SignedChamber, orthogonal_chamber
from gridfn import Box, PCFunction, eta_average, eta_extend
from kernels import (
    HEAT,
    POISSON,
    chamber_lattice,
    eta_heat_kernel,
    eta_poisson_kernel,
    h1_norm_estimate,
    h1_norm_whole_space,
    maximal_transform,
)
from validator import AtomValidator, ValidationMode
from verify import MODULES, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def setup_logging(level: str, log_file: Optional[str]) -> None:
    """stderr sink at the requested level plus a rotating DEBUG file sink."""
    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_file:
        logger.add(log_file, rotation="1 day", level="DEBUG")


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("run configuration")
    group.add_argument("--config", default=None, help="Run file (TOML or JSON); flags override its values")
    group.add_argument("--window", type=int, default=None, help="Half side of the computation window")
    group.add_argument("--h", type=float, default=None, help="Lattice spacing for kernel evaluation")
    group.add_argument("--t-grid", default=None, help="Time grid a:r:b (geometric, ratio r)")
    group.add_argument("--levels", type=int, default=None, help="Finest cube-family level L")
    group.add_argument("--break", dest="break_point", default=None,
                       help="Breaking point a of the local norms (dyadic, e.g. 1 or 1/2)")
    group.add_argument("--kappa", default=None, help="Adjacency slack: cubes within kappa*l(Q) of a minus wall")
    group.add_argument("--seed", type=int, default=None, help="Random seed")
    group.add_argument("--value-mode", choices=["exact", "float"], default=None,
                       help="Value arithmetic for loaded functions")
    group.add_argument("--log-level", default=settings.app.log_level, help="stderr log level")
    group.add_argument("--log-file", default=settings.app.log_file,
                       help="Rotating debug log file (empty string disables it)")
    return common


def _chamber_arguments(parser: argparse.ArgumentParser, eta_required: bool = False) -> None:
    parser.add_argument("--system", default=None, help="Root-system descriptor JSON")
    parser.add_argument("--dimension", type=int, default=None,
                        help="Ambient dimension for the orthogonal system R_k (k = length of --eta)")
    parser.add_argument("--eta", default=None, required=eta_required,
                        help="eta bits, e.g. 1,0 (1 means the wall carries sign -1)")


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """File values first, then every flag that was given."""
    run = load_run_config(args.config)
    return run.with_overrides(
        window_half=args.window,
        h=args.h,
        t_grid=parse_t_grid(args.t_grid) if args.t_grid else None,
        max_level=args.levels,
        break_point=float(Fraction(args.break_point)) if args.break_point is not None else None,
        kappa=float(Fraction(args.kappa)) if args.kappa is not None else None,
        seed=args.seed,
        value_mode=args.value_mode,
    )


def resolve_chamber(args: argparse.Namespace, dimension: Optional[int] = None) -> SignedChamber:
    """--system FILE (with --eta overriding its wall signs) or orthogonal R_k from --eta."""
    if args.system:
        data = read_json(args.system)
        if args.eta is not None:
            if not isinstance(data, dict):
                raise InvalidArgument(f"{args.system}: root-system descriptor must be a JSON object")
            data = dict(data, eta=list(EtaVector.parse(args.eta).signs))
        return chamber_from_dict(data)
    if args.eta is None:
        raise InvalidArgument("Give --system FILE or --eta bits")
    eta = EtaVector.parse(args.eta)
    d = args.dimension or dimension
    if d is None:
        raise InvalidArgument("--eta without --system needs --dimension")
    return orthogonal_chamber(d, eta.k, eta.bits)


def _load(path: str, run: RunConfig) -> PCFunction:
    f = load_function(path)
    return f.as_float() if run.value_mode == "float" else f


def _window(run: RunConfig, d: int) -> Box:
    return Box.window(run.window_half, d)


def _family(run: RunConfig, d: int) -> CubeFamily:
    return CubeFamily(window=_window(run, d), max_level=run.max_level,
                      break_point=Fraction(run.break_point), kappa=Fraction(run.kappa))


def _emit(payload: Dict[str, Any], out: Optional[str], run: RunConfig) -> None:
    payload = dict(payload, fingerprint=run.fingerprint())
    if out:
        write_json(out, payload)
        logger.info(f"Wrote {out}")
    else:
        print(dumps(payload))


def _emit_frame(frame: pd.DataFrame, out: Optional[str], run: RunConfig) -> None:
    comment = f"fingerprint {run.fingerprint()}"
    if out:
        write_csv(out, frame, comment)
        logger.info(f"Wrote {len(frame)} rows to {out}")
    else:
        sys.stdout.write(frame_to_csv(frame, comment))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_group(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    chamber = resolve_chamber(args)
    print(f"Group order: {chamber.order}", file=sys.stderr)
    _emit({"success": True, **chamber_to_dict(chamber, elements=args.elements)}, args.out, run)
    return EXIT_OK


def cmd_kernel(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    mode = args.mode
    if args.input:
        f = _load(args.input, run)
        chamber = resolve_chamber(args, f.dimension)
        sampled = maximal_transform(f, chamber, mode=mode, range_=args.range, t_grid=run.t_grid,
                                    h=run.h, window=_window(run, f.dimension))
        frame = sampled_to_frame(sampled)
    else:
        if args.point is None or args.time is None:
            raise InvalidArgument("kernel needs --input F.json, or --point and --time for kernel values")
        y = np.array([float(Fraction(p)) for p in args.point.split(",")])
        chamber = resolve_chamber(args, len(y))
        if len(y) != chamber.dimension:
            raise InvalidArgument(f"--point has {len(y)} coordinates, the chamber has dimension {chamber.dimension}")
        kernel_fn = eta_heat_kernel if mode == HEAT else eta_poisson_kernel
        points, _ = chamber_lattice(chamber, _window(run, chamber.dimension), run.h)
        values = np.array([kernel_fn(args.time, x, y, chamber) for x in points])
        frame = pd.DataFrame({**{f"x_{a}": points[:, a] for a in range(points.shape[1])}, "value": values})
    _emit_frame(frame, args.out, run)
    return EXIT_OK


def cmd_extend(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    if args.atoms:
        atom_list = load_atom_list(args.atoms)
        eta = EtaVector.parse(args.eta) if args.eta is not None else atom_list.eta
        if eta is None:
            raise InvalidArgument("Atom list carries no eta; pass --eta")
        extended = extend_atoms(atom_list, eta, across=args.across)
        _emit(atom_list_to_dict(extended), args.out, run)
        return EXIT_OK
    if not args.input:
        raise InvalidArgument("extend needs --input F.json or --atoms list.json")
    f = _load(args.input, run)
    chamber = resolve_chamber(args, f.dimension)
    out = eta_average(f, chamber) if args.average else eta_extend(f, chamber)
    _emit(function_to_dict(out), args.out, run)
    return EXIT_OK


def _ledger_lines(ledger: List[Dict[str, Any]]) -> List[str]:
    lines = []
    for entry in ledger:
        step = entry.get("step", "?")
        details = ", ".join(f"{k}={v}" for k, v in entry.items() if k != "step")
        lines.append(f"  {step}: {details}")
    return lines


def cmd_decompose(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    atom_list = load_atom_list(args.atoms)
    eta = EtaVector.parse(args.eta)
    result = decompose_eta(atom_list, eta, mode=args.mode)

    validator = AtomValidator(ValidationMode(args.mode))
    coefficients = [c for c, _ in result.terms]
    report = validator.validate_list(result.atoms, coefficients)

    print("l1 ledger:", file=sys.stderr)
    for line in _ledger_lines(result.ledger):
        print(line, file=sys.stderr)
    if report["errors"]:
        for err in report["errors"]:
            print(f"  invalid: {err}", file=sys.stderr)

    payload = atom_list_to_dict(result)
    payload["validation"] = {k: report[k] for k in ("valid", "errors", "warnings", "first_invalid", "counts")}
    _emit(payload, args.out, run)
    return EXIT_OK if report["valid"] else EXIT_CHECK_FAILED


def cmd_bmo_norm(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    if args.input:
        F = _load(args.input, run)
    elif args.sample:
        F = sample_functions(args.sample, args.sample_level, args.sample_dimension)
    else:
        raise InvalidArgument("bmo-norm needs --input F.json or --sample NAME")
    family = _family(run, F.dimension)

    if args.intrinsic:
        if args.eta is None and not args.system:
            raise InvalidArgument("--intrinsic needs --eta or --system")
        chamber = resolve_chamber(args, F.dimension)
        report = intrinsic_M1_M2(F, chamber, family, mode=args.mode)
    elif args.eta is not None or args.system:
        chamber = resolve_chamber(args, F.dimension)
        report = eta_bmo_norm(F, chamber, family, flavor=args.flavor)
    else:
        report = bmo_norm(F, family, flavor=args.flavor)
    _emit({"success": True, **report.model_dump(mode="json")}, args.out, run)
    return EXIT_OK


def cmd_h1_norm(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    f = _load(args.input, run)
    window = _window(run, f.dimension)
    if args.eta is None and not args.system:
        estimate = h1_norm_whole_space(f, mode=args.mode, range_=args.range, t_grid=run.t_grid,
                                       h=run.h, window=window)
        _emit({"success": True, **estimate.to_dict()}, args.out, run)
        return EXIT_OK

    chamber = resolve_chamber(args, f.dimension)
    estimate = h1_norm_estimate(f, chamber, mode=args.mode, range_=args.range, t_grid=run.t_grid,
                                h=run.h, window=window)
    payload: Dict[str, Any] = {"success": True, **estimate.to_dict()}
    if args.whole_space:
        whole = h1_norm_whole_space(eta_extend(f, chamber), mode=args.mode, range_=args.range,
                                    t_grid=run.t_grid, h=run.h, window=window)
        payload["whole_space"] = whole.to_dict()
        payload["whole_space_over_order"] = whole.value / chamber.order
    _emit(payload, args.out, run)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    report = run_suite(run, only=args.only)
    fmt = args.format or run.output.format
    out = args.out or run.output.report
    text = report.to_markdown() if fmt == "markdown" else report.to_json()
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote suite report to {out}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")

    for entry in report.entries:
        if entry.status != "pass":
            print(f"  {entry.status.upper()}: {entry.name} ({entry.module})", file=sys.stderr)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"Acceptance suite: {verdict} {report.counts}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="eta-hardy", description="Hardy and BMO spaces on Weyl chambers",
                                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", parents=[common], formatter_class=fmt,
                       help="Generate a reflection group and its signed chamber")
    _chamber_arguments(p)
    p.add_argument("--elements", action="store_true", help="List every group element")
    p.add_argument("--out", default=None, help="Output JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_group)

    p = sub.add_parser("kernel", parents=[common], formatter_class=fmt,
                       help="eta maximal transform of a function, or eta kernel values, on the chamber lattice")
    _chamber_arguments(p)
    p.add_argument("--input", default=None, help="PCFunction JSON supported in the chamber")
    p.add_argument("--mode", choices=[HEAT, POISSON], default=HEAT, help="Kernel family")
    p.add_argument("--range", choices=[GLOBAL, LOCAL], default=GLOBAL, help="Time range (local: t < 1)")
    p.add_argument("--point", default=None, help="Source point y for kernel values, e.g. 1/2,3/4")
    p.add_argument("--time", type=float, default=None, help="Time t for kernel values")
    p.add_argument("--out", default=None, help="Output CSV with columns x_0.., value (stdout when omitted)")
    p.set_defaults(handler=cmd_kernel)

    p = sub.add_parser("extend", parents=[common], formatter_class=fmt,
                       help="eta-extension (or averaging) of a function, or extension of an atom list")
    _chamber_arguments(p)
    p.add_argument("--input", default=None, help="PCFunction JSON")
    p.add_argument("--average", action="store_true", help="Apply the eta-average instead of the extension")
    p.add_argument("--atoms", default=None, help="AtomList JSON of (eta, A/B)-atoms")
    p.add_argument("--across", choices=["all", "minus"], default="all",
                   help="Extend atoms across every chamber wall or only across minus walls")
    p.add_argument("--out", default=None, help="Output JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_extend)

    p = sub.add_parser("decompose", parents=[common], formatter_class=fmt,
                       help="Decompose classical atoms into (eta, A/B)-atoms")
    p.add_argument("--atoms", required=True, help="AtomList JSON of classical atoms")
    p.add_argument("--eta", required=True, help="eta bits, e.g. 1,0")
    p.add_argument("--mode", choices=[GLOBAL, LOCAL], default=GLOBAL, help="Global or local atoms")
    p.add_argument("--out", default=None, help="Output AtomList JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("bmo-norm", parents=[common], formatter_class=fmt,
                       help="BMO-type norm of a function over the cube family")
    _chamber_arguments(p)
    p.add_argument("--input", default=None, help="PCFunction JSON")
    p.add_argument("--sample", choices=sorted(SAMPLES), default=None, help="Use a built-in sample function")
    p.add_argument("--sample-level", type=int, default=6, help="Resolution level of the sample")
    p.add_argument("--sample-dimension", type=int, default=1, help="Dimension of the sample")
    p.add_argument("--flavor", choices=list(FLAVORS), default="BMO*", help="Norm flavor")
    p.add_argument("--intrinsic", action="store_true", help="Report the intrinsic M1 and M2 quantities")
    p.add_argument("--mode", choices=[GLOBAL, LOCAL], default=GLOBAL, help="Mode of the intrinsic quantities")
    p.add_argument("--out", default=None, help="Output JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_bmo_norm)

    p = sub.add_parser("h1-norm", parents=[common], formatter_class=fmt,
                       help="Maximal-function H1 norm estimate")
    _chamber_arguments(p)
    p.add_argument("--input", required=True, help="PCFunction JSON")
    p.add_argument("--mode", choices=[HEAT, POISSON], default=HEAT, help="Kernel family")
    p.add_argument("--range", choices=[GLOBAL, LOCAL], default=GLOBAL, help="Time range (local: t < 1)")
    p.add_argument("--whole-space", action="store_true",
                   help="Also report the classical estimate of the eta-extension")
    p.add_argument("--out", default=None, help="Output JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_h1_norm)

    p = sub.add_parser("verify", parents=[common], formatter_class=fmt, help="Run the acceptance suite")
    p.add_argument("--only", action="append", choices=list(MODULES), default=None,
                   help="Restrict to a module (repeatable)")
    p.add_argument("--format", choices=["json", "markdown"], default=None,
                   help="Report format (defaults to the run file's output.format)")
    p.add_argument("--out", default=None, help="Report path (stdout when omitted)")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    setup_logging(args.log_level, args.log_file)
    try:
        return args.handler(args)
    except EtaHardyError as e:
        logger.error(f"{e.kind}: {e}")
        print(dumps({"success": False, "error": e.to_dict()}), file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(dumps({"success": False, "error": {"kind": "io-error", "message": str(e)}}), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
