"""Command-line front end: one subcommand per library operation.

Human-readable tables go to stdout by default; ``--json`` prints the machine
payload instead. ``--out DIR`` additionally persists the payload, any CSV
tables and a run-record sidecar.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import numpy as np
import pandas as pd
import regex as re

from .config import (
    ASYMPTOTIC_EPSILON,
    BAD_RADIUS_DELTA,
    BAD_RADIUS_M0,
    BAD_RADIUS_THRESHOLD,
    DEFAULT_TOL,
    MAX_DEGREE_CAP,
    StudyConfig,
)
from .discrepancy import (
    WeightedPointSet,
    cubature_hypotheses,
    cubature_strength,
    gram_spectrum,
    l2_discrepancy_montecarlo,
    l2_discrepancy_spectral,
)
from .errors import GeodesicDiscrepancyError
from .experiments import bootstrap_slopes, run_bad_radius_scan, run_radius_sweep, run_scaling
from .persistence import ResumeCache, RunRecord, digest_payload, dumps_finite, persist_results, to_jsonable
from .pointsets import (
    GeneratorSpec,
    duplicate_pad,
    generate,
    load_matrix_pointset,
    load_pointset,
    min_separation,
    save_pointset,
)
from .report import generate_brief
from .spaces import SpaceKind, ball_volume, ball_volume_bounds, radial_density, space_params
from .specfun import JacobiParams, bessel_j, bessel_zeros, jacobi_eval, jacobi_zeros
from .spectral import ball_coefficient_table, eigen_dimension_exact

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

_DEGREE_SUFFIX = re.compile(r"(?:°|deg(?:rees?)?|(?<=\d)d)\s*$", re.IGNORECASE)
_PI_FORM = re.compile(r"^(?:(?P<num>\d+(?:\.\d*)?)\s*\*?\s*)?pi(?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?$", re.IGNORECASE)


def radians(text: str) -> float:
    """Radius in radians: a float literal or ``pi``, ``pi/3``, ``2pi/3``. Degree input is refused."""

    raw = text.strip()
    if _DEGREE_SUFFIX.search(raw):
        raise argparse.ArgumentTypeError(f"{text!r} looks like degrees; radii are given in radians")
    match = _PI_FORM.match(raw)
    if match:
        value = float(match.group("num") or 1.0) * math.pi / float(match.group("den") or 1.0)
    else:
        try:
            value = float(raw)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{text!r} is not a radius") from exc
    if not 0.0 <= value <= math.pi + 1e-12:
        raise argparse.ArgumentTypeError(f"radius {text!r} must lie in [0, pi]")
    return min(value, math.pi)


@dataclass
class CommandResult:
    payload: Dict[str, Any]
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    inputs: List[str] = field(default_factory=list)
    name: str = "results"
    brief: Callable[[Path], str] | None = None


def _resolve_space(args: argparse.Namespace) -> SpaceKind | None:
    if getattr(args, "d", None) is not None or getattr(args, "d0", None) is not None:
        if args.d is None or args.d0 is None:
            raise GeodesicDiscrepancyError("abstract spaces need both --d and --d0")
        return SpaceKind.abstract(args.d, args.d0)
    if getattr(args, "space", None) is None:
        return None
    return SpaceKind.parse(args.space, args.n)


def _require_space(args: argparse.Namespace) -> SpaceKind:
    space = _resolve_space(args)
    if space is None:
        raise GeodesicDiscrepancyError("this command needs --space")
    return space


def _load_input(args: argparse.Namespace) -> WeightedPointSet:
    space = _resolve_space(args)
    if args.format == "matrix":
        if space is None:
            raise GeodesicDiscrepancyError("distance-matrix input needs --space")
        return load_matrix_pointset(space, args.input)
    return load_pointset(args.input, fmt=args.format, space=space)


# -- handlers -----------------------------------------------------------------


def cmd_space_info(args: argparse.Namespace) -> CommandResult:
    space = _require_space(args)
    params = space_params(space)
    c1, c2 = ball_volume_bounds(space)
    payload: Dict[str, Any] = {
        "space": space.to_dict(),
        "label": space.label,
        "d": params.d,
        "d0": params.d0,
        "a": params.a,
        "b": params.b,
        "c_ab": params.c_ab,
        "vector_model": space.has_vector_model,
        "volume_bounds": [c1, c2],
        "eigen_dimensions": [float(eigen_dimension_exact(params, m)) for m in range(1, 6)],
    }
    if args.r is not None:
        payload["r"] = args.r
        payload["ball_volume"] = float(ball_volume(params, args.r))
        payload["radial_density"] = float(radial_density(params, args.r))
    return CommandResult(payload)


def cmd_jacobi_eval(args: argparse.Namespace) -> CommandResult:
    params = JacobiParams(args.a, args.b, args.m)
    xs = np.asarray(args.x, dtype=float)
    values = np.atleast_1d(jacobi_eval(params, xs))
    return CommandResult({"a": args.a, "b": args.b, "m": args.m, "x": xs, "values": values})


def _jacobi_ab(args: argparse.Namespace) -> tuple[float, float]:
    space = _resolve_space(args)
    if space is not None:
        params = space_params(space)
        return params.a, params.b
    if args.a is None or args.b is None:
        raise GeodesicDiscrepancyError("give --a and --b, or --space")
    return args.a, args.b


def cmd_jacobi_zeros(args: argparse.Namespace) -> CommandResult:
    a, b = _jacobi_ab(args)
    zeros = jacobi_zeros(a, b, args.m, args.ell or None)
    ells = args.ell or list(range(1, args.m))
    table = pd.DataFrame(
        {
            "ell": ells,
            "theta": [z.location for z in zeros],
            "estimate": [z.initial for z in zeros],
            "residual": [z.residual for z in zeros],
            "order_term": [z.order_term for z in zeros],
            "iterations": [z.iterations for z in zeros],
        }
    )
    payload = {"a": a, "b": b, "m": args.m, "zeros": table.to_dict(orient="records")}
    return CommandResult(payload, tables={"jacobi_zeros": table}, name="jacobi_zeros")


def cmd_bessel_eval(args: argparse.Namespace) -> CommandResult:
    xs = np.asarray(args.x, dtype=float)
    values = np.atleast_1d(bessel_j(args.nu, xs))
    return CommandResult({"nu": args.nu, "x": xs, "values": values})


def cmd_bessel_zeros(args: argparse.Namespace) -> CommandResult:
    zeros = bessel_zeros(args.nu, args.count)
    table = pd.DataFrame(
        {
            "ell": list(range(1, args.count + 1)),
            "j": [z.location for z in zeros],
            "mcmahon": [z.initial for z in zeros],
            "residual": [z.residual for z in zeros],
        }
    )
    return CommandResult({"nu": args.nu, "zeros": table.to_dict(orient="records")}, tables={"bessel_zeros": table}, name="bessel_zeros")


def cmd_coeffs(args: argparse.Namespace) -> CommandResult:
    space = _require_space(args)
    table = ball_coefficient_table(space, args.r, args.max_degree)
    payload = {
        "space": space.to_dict(),
        "r": table.r,
        "volume": table.volume,
        "M": table.degree,
        "parseval_total": table.parseval_total,
        "tail": table.tail(),
        "c_m": table.coeffs,
    }
    return CommandResult(payload, tables={"coefficients": table.to_frame()}, name="coefficients")


def cmd_discrepancy_spectral(args: argparse.Namespace) -> CommandResult:
    pointset = _load_input(args)
    radii = [args.r] if args.r2 is None else [args.r, args.r2]
    reports = [
        l2_discrepancy_spectral(
            pointset, r, tol=args.tol, max_degree=args.max_degree, strict=args.strict, threads=args.threads
        )
        for r in radii
    ]
    payload: Dict[str, Any] = {
        "space": pointset.space.to_dict(),
        "N": pointset.size,
        "value": sum(report.value for report in reports),
        "tail_bound": sum(report.tail_bound for report in reports),
        "converged": all(report.converged for report in reports),
        "radii": [report.to_dict(include_per_m=False) for report in reports],
    }
    return CommandResult(payload, inputs=[args.input], name="discrepancy")


def cmd_discrepancy_mc(args: argparse.Namespace) -> CommandResult:
    pointset = _load_input(args)
    estimate, stderr = l2_discrepancy_montecarlo(pointset, args.r, args.samples, args.seed, threads=args.threads)
    payload = {
        "space": pointset.space.to_dict(),
        "N": pointset.size,
        "r": args.r,
        "samples": args.samples,
        "seed": args.seed,
        "estimate": estimate,
        "stderr": stderr,
    }
    return CommandResult(payload, inputs=[args.input], name="montecarlo")


def cmd_gram(args: argparse.Namespace) -> CommandResult:
    pointset = _load_input(args)
    gram = gram_spectrum(pointset, args.max_degree, threads=args.threads)
    payload = {"space": pointset.space.to_dict(), "N": pointset.size, "M": gram.degree, "weight_sq": gram.weight_sq, "S": gram.S}
    return CommandResult(payload, tables={"gram": gram.to_frame()}, inputs=[args.input], name="gram")


def cmd_cubature_check(args: argparse.Namespace) -> CommandResult:
    pointset = _load_input(args)
    strength = cubature_strength(pointset, tol=args.tol)
    gram = gram_spectrum(pointset, strength + 1)
    big_a, big_b = cubature_hypotheses(pointset)
    payload = {
        "space": pointset.space.to_dict(),
        "N": pointset.size,
        "strength": strength,
        "tol": args.tol,
        "S": gram.S,
        "A": big_a,
        "B": big_b,
        "min_separation": min_separation(pointset) if pointset.size > 1 else math.pi,
    }
    return CommandResult(payload, inputs=[args.input], name="cubature")


def cmd_pointset_gen(args: argparse.Namespace) -> CommandResult:
    space = _require_space(args)
    pointset = generate(space, GeneratorSpec(args.kind, args.N, args.seed, args.path), threads=args.threads)
    written = save_pointset(pointset, args.to, fmt=args.to_format)
    return CommandResult({"space": space.to_dict(), "kind": args.kind, "N": pointset.size, "seed": args.seed, "path": written})


def cmd_pointset_convert(args: argparse.Namespace) -> CommandResult:
    pointset = _load_input(args)
    if args.pad is not None:
        pointset = duplicate_pad(pointset, args.pad)
    written = save_pointset(pointset, args.to, fmt=args.to_format)
    return CommandResult({"space": pointset.space.to_dict(), "N": pointset.size, "path": written}, inputs=[args.input])


def cmd_experiment_scaling(args: argparse.Namespace) -> CommandResult:
    config = StudyConfig.from_json(args.config)
    if args.resume and args.out is None:
        raise GeodesicDiscrepancyError("--resume needs --out")
    cache = None
    if args.out is not None:
        cache = ResumeCache(args.out, digest_payload(config.to_dict()), read=args.resume)
    study = run_scaling(config, cache=cache, threads=args.threads)
    payload = study.to_summary_dict()
    if args.bootstrap:
        slopes = bootstrap_slopes(study, args.bootstrap, seed=config.seed)
        payload["bootstrap_slope_std"] = float(np.std(slopes, ddof=1)) if slopes.size > 1 else 0.0
    if cache is not None:
        payload["resume"] = {"hits": cache.hits, "misses": cache.misses}
    return CommandResult(
        payload,
        tables={"scaling_results": study.results, "scaling_summary": study.summary},
        inputs=[args.config],
        name="scaling",
        brief=lambda path: generate_brief(path, f"Scaling study: {config.name}", study=study),
    )


def cmd_experiment_sweep(args: argparse.Namespace) -> CommandResult:
    space = _resolve_space(args)
    pointsets = [load_pointset(path, fmt=args.format, space=space) for path in args.input]
    r_max = args.r_max if args.r_max is not None else math.pi - args.epsilon
    r_grid = np.linspace(args.r_min, r_max, args.points)
    sweep = run_radius_sweep(pointsets, r_grid, labels=[Path(p).stem for p in args.input], epsilon=args.epsilon)
    payload = {"bounded": sweep.bounded, "r_grid": r_grid, "summary": sweep.summary.to_dict(orient="records")}
    return CommandResult(
        payload,
        tables={"sweep": sweep.table, "sweep_summary": sweep.summary},
        inputs=list(args.input),
        name="sweep",
        brief=lambda path: generate_brief(path, "Radius sweep", sweep=sweep),
    )


def cmd_experiment_badradius(args: argparse.Namespace) -> CommandResult:
    space = _require_space(args)
    r_grid = np.linspace(args.r_min, args.r_max, args.points)
    scan = run_bad_radius_scan(space, r_grid, args.max_degree, args.delta, threshold=args.threshold, m0=args.m0)
    payload = {
        "space": space.to_dict(),
        "M_max": args.max_degree,
        "delta": args.delta,
        "threshold": args.threshold,
        "flagged": scan.loc[scan["flagged"], "r"].tolist(),
        "scores": scan.to_dict(orient="records"),
    }
    return CommandResult(
        payload,
        tables={"bad_radius_scan": scan},
        name="badradius",
        brief=lambda path: generate_brief(path, f"Bad-radius scan on {space.label}", scan=scan, scan_threshold=args.threshold),
    )


# -- parser -------------------------------------------------------------------


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print the machine-readable JSON payload.")
    common.add_argument("--out", help="Directory receiving the JSON payload, CSV tables and run record.")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (default: GEODISC_THREADS or 1).")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging.")
    return common


def _space_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--space", "--family", dest="space", help="sphere2, projreal3, projcomplex2, projquaternion2, octonion, ...")
    parser.add_argument("--n", type=int, default=None, help="Index n when --space names a bare family.")
    parser.add_argument("--d", type=int, default=None, help="Dimension of an abstract space.")
    parser.add_argument("--d0", type=int, default=None, help="Second dimension of an abstract space.")


def _input_options(parser: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        parser.add_argument("--in", dest="input", nargs="+", required=True, help="Point-set files.")
    else:
        parser.add_argument("--in", dest="input", required=True, help="Point-set file.")
    parser.add_argument("--format", choices=("json", "tdesign", "matrix"), default=None, help="Input format (default: by suffix).")
    _space_options(parser)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="geodisc", description="L2 geodesic-ball discrepancy on two-point homogeneous spaces.")
    groups = parser.add_subparsers(dest="command", required=True)

    space = groups.add_parser("space", help="Space parameters.").add_subparsers(dest="action", required=True)
    info = space.add_parser("info", parents=[common], help="Dimensions, Jacobi parameters and ball volumes.")
    _space_options(info)
    info.add_argument("--r", type=radians, default=None)
    info.set_defaults(handler=cmd_space_info)

    jacobi = groups.add_parser("jacobi", help="Jacobi polynomials.").add_subparsers(dest="action", required=True)
    j_eval = jacobi.add_parser("eval", parents=[common], help="Evaluate P_m^{(a,b)}(x).")
    j_eval.add_argument("--a", type=float, required=True)
    j_eval.add_argument("--b", type=float, required=True)
    j_eval.add_argument("--m", type=int, required=True)
    j_eval.add_argument("--x", type=float, nargs="+", required=True)
    j_eval.set_defaults(handler=cmd_jacobi_eval)
    j_zeros = jacobi.add_parser("zeros", parents=[common], help="Zeros in angle of P_{m-1}^{(a+1,b+1)}(cos theta).")
    j_zeros.add_argument("--a", type=float, default=None)
    j_zeros.add_argument("--b", type=float, default=None)
    j_zeros.add_argument("--m", type=int, required=True)
    j_zeros.add_argument("--ell", type=int, nargs="*", default=None)
    _space_options(j_zeros)
    j_zeros.set_defaults(handler=cmd_jacobi_zeros)

    bessel = groups.add_parser("bessel", help="Bessel functions of the first kind.").add_subparsers(dest="action", required=True)
    b_eval = bessel.add_parser("eval", parents=[common], help="Evaluate J_nu(x).")
    b_eval.add_argument("--nu", type=float, required=True)
    b_eval.add_argument("--x", type=float, nargs="+", required=True)
    b_eval.set_defaults(handler=cmd_bessel_eval)
    b_zeros = bessel.add_parser("zeros", parents=[common], help="First positive zeros of J_nu.")
    b_zeros.add_argument("--nu", type=float, required=True)
    b_zeros.add_argument("--count", type=int, default=10)
    b_zeros.set_defaults(handler=cmd_bessel_zeros)

    coeffs = groups.add_parser("coeffs", parents=[common], help="Ball-coefficient table c_m(r).")
    _space_options(coeffs)
    coeffs.add_argument("--r", type=radians, required=True)
    coeffs.add_argument("--max-degree", type=int, default=1000)
    coeffs.set_defaults(handler=cmd_coeffs)

    discrepancy = groups.add_parser("discrepancy", help="L2 ball discrepancy.").add_subparsers(dest="action", required=True)
    spectral = discrepancy.add_parser("spectral", parents=[common], help="Spectral value with certified tail bound.")
    _input_options(spectral)
    spectral.add_argument("--r", type=radians, required=True)
    spectral.add_argument("--r2", type=radians, default=None, help="Second radius; the two values are summed.")
    spectral.add_argument("--tol", type=float, default=DEFAULT_TOL)
    spectral.add_argument("--max-degree", type=int, default=MAX_DEGREE_CAP)
    spectral.add_argument("--strict", action="store_true", help="Fail when the tolerance is unreachable.")
    spectral.set_defaults(handler=cmd_discrepancy_spectral)
    mc = discrepancy.add_parser("mc", parents=[common], help="Monte Carlo estimate and standard error.")
    _input_options(mc)
    mc.add_argument("--r", type=radians, required=True)
    mc.add_argument("--samples", type=int, default=100_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.set_defaults(handler=cmd_discrepancy_mc)

    gram = groups.add_parser("gram", parents=[common], help="Gram spectrum S_m of a point set.")
    _input_options(gram)
    gram.add_argument("--max-degree", type=int, default=64)
    gram.set_defaults(handler=cmd_gram)

    cubature = groups.add_parser("cubature", help="Cubature diagnostics.").add_subparsers(dest="action", required=True)
    check = cubature.add_parser("check", parents=[common], help="Design strength and cubature hypotheses.")
    _input_options(check)
    check.add_argument("--tol", type=float, default=1e-10)
    check.set_defaults(handler=cmd_cubature_check)

    pointset = groups.add_parser("pointset", help="Point-set generation and conversion.").add_subparsers(dest="action", required=True)
    gen = pointset.add_parser("gen", parents=[common], help="Generate a point set.")
    _space_options(gen)
    gen.add_argument("--kind", choices=("uniform", "fibonacci", "tdesign", "matrix"), default="uniform")
    gen.add_argument("--N", type=int, default=0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--path", default=None, help="Source file for tdesign/matrix kinds.")
    gen.add_argument("--to", required=True)
    gen.add_argument("--to-format", choices=("json", "tdesign"), default=None)
    gen.set_defaults(handler=cmd_pointset_gen)
    convert = pointset.add_parser("convert", parents=[common], help="Convert or pad a point set.")
    _input_options(convert)
    convert.add_argument("--to", required=True)
    convert.add_argument("--to-format", choices=("json", "tdesign"), default=None)
    convert.add_argument("--pad", type=int, default=None, help="Pad to this many points by duplication.")
    convert.set_defaults(handler=cmd_pointset_convert)

    experiment = groups.add_parser("experiment", help="Desk-scale studies.").add_subparsers(dest="action", required=True)
    scaling = experiment.add_parser("scaling", parents=[common], help="Scaling study from a JSON config.")
    scaling.add_argument("--config", required=True)
    scaling.add_argument("--resume", action="store_true", help="Reuse verified cells under --out.")
    scaling.add_argument("--bootstrap", type=int, default=0, help="Bootstrap resamples of the slope fit.")
    scaling.set_defaults(handler=cmd_experiment_scaling)
    sweep = experiment.add_parser("sweep", parents=[common], help="Discrepancy over a radius grid.")
    _input_options(sweep, multiple=True)
    sweep.add_argument("--r-min", type=radians, default=0.1)
    sweep.add_argument("--r-max", type=radians, default=None)
    sweep.add_argument("--points", type=int, default=21)
    sweep.add_argument("--epsilon", type=float, default=ASYMPTOTIC_EPSILON)
    sweep.set_defaults(handler=cmd_experiment_sweep)
    bad = experiment.add_parser("badradius", parents=[common], help="Bad-radius score scan.")
    _space_options(bad)
    bad.add_argument("--r-min", type=radians, default=0.05)
    bad.add_argument("--r-max", type=radians, default=math.pi - 0.05)
    bad.add_argument("--points", type=int, default=61)
    bad.add_argument("--max-degree", type=int, default=200)
    bad.add_argument("--delta", type=float, default=BAD_RADIUS_DELTA)
    bad.add_argument("--threshold", type=float, default=BAD_RADIUS_THRESHOLD)
    bad.add_argument("--m0", type=int, default=BAD_RADIUS_M0)
    bad.set_defaults(handler=cmd_experiment_badradius)
    return parser


# -- output -------------------------------------------------------------------


def _full(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _print_human(result: CommandResult) -> None:
    payload = to_jsonable(result.payload)
    for key, value in payload.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            continue
        if isinstance(value, list):
            value = " ".join(_full(v) for v in value)
        elif isinstance(value, dict):
            value = ", ".join(f"{k}={_full(v)}" for k, v in value.items())
        print(f"{key}: {_full(value)}")
    for name, frame in result.tables.items():
        print(f"\n[{name}]")
        print(frame.to_string(index=False, float_format=lambda v: repr(float(v))))


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    arguments = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(arguments)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    _configure_logging(args.verbose)
    try:
        result = args.handler(args)
        if args.out is not None:
            options = {k: v for k, v in vars(args).items() if k not in ("handler", "verbose", "json")}
            record = RunRecord.create(arguments, options, inputs=result.inputs)
            extras = []
            if result.brief is not None:
                extras.append(result.brief(Path(args.out) / "brief.md"))
            persist_results(record, result.payload, args.out, name=result.name, tables=result.tables, extra_outputs=extras)
    except (GeodesicDiscrepancyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.json:
        print(dumps_finite(result.payload))
    else:
        _print_human(result)
    return EXIT_OK


__all__ = ["build_parser", "main", "radians", "EXIT_OK", "EXIT_DOMAIN", "EXIT_USAGE"]
