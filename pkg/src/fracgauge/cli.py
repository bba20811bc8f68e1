"""Command-line front end.

Every command prints (or writes with ``--out``) one JSON envelope::

    {"tool", "version", "command", "config", "seed", "result"}

Exit codes: 0 success, 1 invalid input or usage, 2 solver non-convergence,
3 lifting run whose smallness condition fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .domain import Grid
from .elliptic import DEFAULT_TOL, ConvergenceError, gradient_l2, poisson_dirichlet, wente_rhs
from .frames import (
    Frame,
    coulomb_gauge,
    flat_immersion,
    frame_from_immersion,
    gauge_curve,
    lifting_pipeline,
    stereographic_immersion,
)
from .io import csv_text, dumps, field_from_dict, field_to_dict, frame_from_dict, frame_to_dict, load_json
from .sobolev import bbm_limit, frac_normal_energy, gagliardo_seminorm
from .spectral import (
    PeriodicField,
    embed,
    frac_laplacian,
    lp_decompose,
    riesz_potential,
    riesz_transform,
    singular_integral_frac_laplacian,
    spectral_tail,
    triebel_seminorm,
)

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_NUMERICAL", "EXIT_SMALLNESS"]

TOOL = "fracgauge"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_SMALLNESS = 0, 1, 2, 3
SUITE_NAMES = (
    "conformal",
    "rotation",
    "gauge",
    "lifting",
    "wente",
    "uwu",
    "frame",
    "bbm",
    "spectral",
    "kernels",
    "harmonic",
    "operators",
    "dyadic",
    "collapse",
    "extension",
    "constants",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for solver failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ------------------------------------------------------------ argument types


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit non-negative integer")
    return v


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_radii(text: str) -> list:
    """``a:b:k`` gives ``k`` equally spaced radii from ``a`` to ``b``; a comma list is taken as is."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("radii range must look like a:b:k")
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        if k < 1:
            raise argparse.ArgumentTypeError("need at least one radius")
        return [float(r) for r in np.linspace(a, b, k)] if k > 1 else [b]
    return _float_list(text)


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver tolerance")
    common.add_argument("--max-iter", type=_positive_int, default=None, help="iteration cap for iterative solves")
    common.add_argument("--out", type=Path, default=None, help="write the JSON report here instead of stdout")
    common.add_argument("--csv", type=Path, default=None, help="also write a CSV table (where the command has one)")

    parser = _Parser(prog=TOOL, description="Fractional Sobolev energies, gauges and their numerical checks.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", parents=[common], help="write a random or analytic field/frame")
    p.add_argument("--kind", required=True, choices=["scalar", "unit", "frame", "stereographic", "flat"])
    p.add_argument("--grid", default="disk", choices=["disk", "square"])
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--n", type=_positive_int, default=32)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--smoothness", type=float, default=3.0)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--scale", type=float, default=1.0, help="scale factor for analytic immersions")

    p = sub.add_parser("energy", parents=[common], help="fractional seminorms and the s -> 1 limit")
    p.add_argument("--op", required=True, choices=["gagliardo", "frac-normal", "bbm"])
    p.add_argument("--field", required=True, type=Path)
    p.add_argument("--s", type=float, default=0.75)
    p.add_argument("--p", type=float, default=None, help="integrability; defaults to 2/s")
    p.add_argument("--s-list", type=_float_list, default=[0.9, 0.93, 0.96, 0.98], help="orders for --op bbm")
    p.add_argument("--no-near-field", action="store_true", help="plain midpoint sums in --op bbm")

    p = sub.add_parser("gauge", parents=[common], help="Coulomb gauge of a frame on one or more balls")
    _frame_source(p)
    p.add_argument("--r", type=float, default=None, help="ball radius (default: whole grid)")
    p.add_argument("--radii", type=parse_radii, default=None, help="a:b:k or comma list; reports f(r) only")
    p.add_argument("--include-theta", action="store_true", help="embed the rotation angle field")

    p = sub.add_parser("lift", parents=[common], help="continuity-argument diagnostics for f(r)")
    _frame_source(p)
    p.add_argument("--s", type=float, default=0.75)
    p.add_argument("--radii", type=parse_radii, required=True, help="a:b:k or comma list")
    p.add_argument("--constant-file", type=Path, required=True, help='JSON with key "C"')
    p.add_argument("--margin", type=float, default=0.1)

    p = sub.add_parser("wente", parents=[common], help="zero-boundary solve of Laplace(u) = <perp-grad a, grad b>")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.add_argument("--method", default="direct", choices=["direct", "cg"])

    p = sub.add_parser("spectral", parents=[common], help="Fourier multipliers on a periodic square")
    p.add_argument(
        "--op",
        required=True,
        choices=["frac-laplacian", "riesz-potential", "riesz-transform", "singular-integral", "lp-decompose", "triebel"],
    )
    p.add_argument("--field", required=True, type=Path, help="periodic field, or a grid field to embed")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--pad", type=int, default=2, help="embedding factor for non-periodic input")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", required=True, choices=list(SUITE_NAMES) + ["all"])
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--trials", type=_positive_int, default=None, help="trial count (suite default if omitted)")

    p = sub.add_parser("collapse", parents=[common], help="scaled stereographic immersions")
    p.add_argument("--c-list", type=_float_list, default=None, help="decreasing scales (default 2^-k, k = 0..10)")
    p.add_argument("--n", type=_positive_int, default=64)
    p.add_argument("--s", type=float, default=0.75)
    return parser


def _frame_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--field", type=Path, help="immersion field file (3 components)")
    src.add_argument("--frame", type=Path, help="frame file with e1, e2 fields")


# ------------------------------------------------------------ helpers


def _config(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("out", "csv"):
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _load_frame(args) -> Frame:
    if args.frame is not None:
        return frame_from_dict(load_json(args.frame))
    doc = load_json(args.field)
    if "e1" in doc:
        return frame_from_dict(doc)
    phi = field_from_dict(doc)
    if phi.components != 3:
        raise ValueError("immersion field must have 3 components")
    return frame_from_immersion(phi).frame


def _load_periodic(path: Path, pad: int) -> PeriodicField:
    doc = load_json(path)
    if doc.get("grid", {}).get("kind") == "square-periodic":
        f = field_from_dict(doc)
        return PeriodicField.from_field(f)
    f = field_from_dict(doc)
    if f.grid.kind == "square" and f.grid.size == f.grid.n**2:
        return PeriodicField.from_field(f)
    return embed(f, pad)


def _emit(args, result, seed=None) -> None:
    doc = {
        "tool": TOOL,
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "seed": seed,
        "result": result,
    }
    text = dumps(doc)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")


def _write_csv(args, header, rows) -> None:
    if args.csv is not None:
        Path(args.csv).write_text(csv_text(header, rows), encoding="utf-8", newline="\n")


# ------------------------------------------------------------ commands


def cmd_gen(args) -> int:
    from .harness.generators import SampleSpec, gen_frame, gen_scalar, gen_unit_field

    grid = Grid(args.grid, args.R, args.n)
    meta = {"tool": TOOL, "version": __version__, "config": _config(args), "seed": args.seed}
    if args.kind in ("stereographic", "flat"):
        make = stereographic_immersion if args.kind == "stereographic" else flat_immersion
        doc = field_to_dict(make(grid, args.scale).phi)
    else:
        spec = SampleSpec(seed=args.seed, smoothness=args.smoothness, amplitude=args.amplitude, count=args.trial + 1)
        if args.kind == "scalar":
            doc = field_to_dict(gen_scalar(spec, grid, args.trial))
        elif args.kind == "unit":
            doc = field_to_dict(gen_unit_field(spec, grid, args.trial))
        else:
            doc = frame_to_dict(gen_frame(spec, grid, args.trial))
    doc["meta"] = meta
    text = dumps(doc)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    return EXIT_OK


def cmd_energy(args) -> int:
    u = field_from_dict(load_json(args.field))
    if args.op == "gagliardo":
        result = gagliardo_seminorm(u, args.s, args.p)
    elif args.op == "frac-normal":
        result = frac_normal_energy(u, args.s, args.p)
    else:
        result = bbm_limit(u, args.s_list, near_field=not args.no_near_field)
        _write_csv(args, ["s", "weighted"], zip(map(float, result.s), map(float, result.weighted)))
    _emit(args, result)
    return EXIT_OK


def cmd_gauge(args) -> int:
    frame = _load_frame(args)
    if args.radii is not None:
        diag = gauge_curve(frame, args.radii, tol=args.tol)
        _write_csv(args, ["r", "f", "competitor"], zip(diag.radii, diag.f_values, diag.competitor_norms))
        _emit(args, {"radii": diag.radii, "f_values": diag.f_values, "competitor_norms": diag.competitor_norms, "div_residuals": diag.div_residuals})
        return EXIT_OK
    res = coulomb_gauge(frame, args.r, tol=args.tol, max_iter=args.max_iter)
    result = {
        "radius": res.radius,
        "f_r": res.f_r,
        "div_residual": res.div_residual,
        "frame_div_residual": res.frame_div_residual,
        "boundary_flux": res.boundary_flux,
        "iterations": res.iterations,
        "solver_residual": res.solver_residual,
    }
    if args.include_theta:
        result["theta"] = field_to_dict(res.theta)
    _emit(args, result)
    return EXIT_OK


def cmd_lift(args) -> int:
    constants = load_json(args.constant_file)
    if "C" not in constants:
        raise ValueError('constant file needs a "C" entry')
    frame = _load_frame(args)
    diag = lifting_pipeline(frame, args.s, args.radii, float(constants["C"]), margin=args.margin, tol=args.tol)
    diag.extra["constants"] = constants
    _write_csv(args, ["r", "f", "F1", "F2"], diag.csv_rows())
    _emit(args, diag)
    return EXIT_SMALLNESS if diag.smallness_violated else EXIT_OK


def cmd_wente(args) -> int:
    a = field_from_dict(load_json(args.a))
    b = field_from_dict(load_json(args.b))
    if a.grid != b.grid:
        raise ValueError("a and b must share a grid")
    rep = poisson_dirichlet(wente_rhs(a, b), tol=args.tol, max_iter=args.max_iter, method=args.method)
    result = rep.to_dict()
    result["grad_l2"] = gradient_l2(rep.solution)
    _emit(args, result)
    return EXIT_OK


def cmd_spectral(args) -> int:
    f = _load_periodic(args.field, args.pad)
    if args.op == "frac-laplacian":
        result = {"field": frac_laplacian(f, args.s)}
    elif args.op == "riesz-potential":
        result = {"field": riesz_potential(f, args.s)}
    elif args.op == "riesz-transform":
        result = {"field": riesz_transform(f)}
    elif args.op == "singular-integral":
        result = {"field": singular_integral_frac_laplacian(f, args.s)}
    elif args.op == "lp-decompose":
        dec = lp_decompose(f)
        norms = {str(j): float(np.sqrt(np.mean(dec.bands[j].values ** 2))) for j in range(dec.j_min, dec.j_max + 1)}
        rows = [(j, v) for j, v in norms.items()]
        _write_csv(args, ["j", "rms"], rows)
        result = {"j_min": dec.j_min, "j_max": dec.j_max, "band_rms": norms, "tail": spectral_tail(f)}
    else:
        result = {"value": triebel_seminorm(f, args.s, args.p), "tail": spectral_tail(f)}
    result = {"op": args.op, "side": f.side, "n": f.n, **result}
    _emit(args, result)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .harness.suites import run_suite

    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    reports = {name: run_suite(name, seed=args.seed, trials=args.trials) for name in names}
    result = reports[args.suite] if args.suite != "all" else {"suites": reports, "passed": all(r["passed"] for r in reports.values())}
    _emit(args, result, seed=args.seed)
    return EXIT_OK


def cmd_collapse(args) -> int:
    from .harness.checks import collapse_experiment

    rep = collapse_experiment(args.c_list, n=args.n, s=args.s, tol=args.tol)
    _write_csv(args, ["scale", "neg_lam_h_integral", "grad_phi_l2"], zip(rep.scales, rep.neg_lam_h, rep.grad_phi))
    _emit(args, rep)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "energy": cmd_energy,
    "gauge": cmd_gauge,
    "lift": cmd_lift,
    "wente": cmd_wente,
    "spectral": cmd_spectral,
    "verify": cmd_verify,
    "collapse": cmd_collapse,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"{TOOL}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"{TOOL}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
