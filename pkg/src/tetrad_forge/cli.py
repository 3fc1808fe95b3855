"""Command-line front end.

Sub-commands: ``catalog``, ``check``, ``curvature``, ``gamma`` and
``validate``.  Reports go to stdout as JSON unless ``--report human`` is
given.  Exit codes: 0 on success, 1 when a check fails, 2 on input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__, catalog
from .checks import SUITES, run_suite
from .connection import b_connection
from .dirac import gamma_rep, ideal_basis
from .expr import DomainError
from .geometry import GeometryDefinition, GeometryError, build_frame, oracle_frame
from .tetrad import secondary_generators, tetrad_forms

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad arguments or an unusable geometry; maps to exit code 2."""


def _real(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _cplx(a) -> list:
    """Complex arrays as nested lists of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _parse_point(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--at expects four comma-separated numbers, got '{text}'")
    if len(vals) != 4:
        raise InputError(f"--at expects four numbers, got {len(vals)}")
    return np.array(vals)


def _parse_pairs(items: Sequence[str] | None, what: str) -> dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise InputError(f"{what} expects key=value, got '{item}'")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise InputError(f"{what} value for '{key}' is not a number: '{val}'")
    return out


def _geometry(spec: str, params: dict[str, float] | None = None) -> GeometryDefinition:
    try:
        return catalog.resolve(spec, **(params or {}))
    except (GeometryError, OSError) as exc:
        raise InputError(str(exc))


def _emit(payload: dict, human: str | None, mode: str) -> None:
    if mode == "human" and human is not None:
        print(human)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Sub-commands
# ---------------------------------------------------------------------------


def cmd_catalog(args) -> int:
    rows = []
    for name in catalog.names():
        d = catalog.raw(name)
        rows.append({"name": name, "coordinates": d["coordinates"],
                     "parameters": d.get("parameters", {}),
                     "description": d.get("description", "")})
    human = "\n".join(f"{r['name']:22s} ({', '.join(r['coordinates'])})  {r['description']}"
                      for r in rows)
    _emit({"geometries": rows}, human, args.report)
    return EXIT_OK


def _suite_table(report) -> str:
    lines = [f"tetrad-forge {report.tool_version}  geometry={report.geometry}  "
             f"suite={report.suite}  seed={report.seed}  points={report.point_count}"]
    for r in report.records:
        tol = "-" if r.tolerance is None else f"{r.tolerance:.1e}"
        cmp = ">=" if r.kind == "min" else "<="
        status = "report" if r.kind == "report" else ("pass" if r.passed else "FAIL")
        lines.append(f"  {r.check_id:42s} n={r.points_evaluated:<4d} "
                     f"{r.max_residual:10.3e} {cmp} {tol:8s} {status}")
    lines.append(f"overall: {'pass' if report.passed else 'FAIL'}  ({report.wall_time:.1f} s)")
    return "\n".join(lines)


def cmd_check(args) -> int:
    geo = _geometry(args.geometry)
    tols = _parse_pairs(args.tol, "--tol")
    if args.points < 1:
        raise InputError("--points must be positive")
    try:
        report = run_suite(geo, args.suite, args.points, args.seed, tols)
    except ValueError as exc:
        raise InputError(str(exc))
    _emit(report.to_dict(include_time=not args.no_time), _suite_table(report), args.report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_curvature(args) -> int:
    geo = _geometry(args.geometry, _parse_pairs(args.param, "--param"))
    x = _parse_point(args.at)
    try:
        f = build_frame(geo, x, order=2)
    except (GeometryError, DomainError, ArithmeticError) as exc:
        raise InputError(str(exc))
    payload = {
        "geometry": geo.name, "point": _real(x), "parameters": geo.parameters,
        "metric": _real(f.g), "christoffel": _real(f.gamma), "riemann": _real(f.riemann),
        "ricci": _real(f.ricci), "scalar-curvature": float(f.scalar_curvature),
        "kretschmann": float(f.kretschmann),
    }
    if args.oracle:
        try:
            o = oracle_frame(geo, x)
        except GeometryError as exc:
            raise InputError(str(exc))
        payload["oracle-deviation"] = {
            "metric": float(np.abs(o.g - f.g).max()),
            "christoffel": float(np.abs(o.gamma - f.gamma).max()),
            "riemann": float(np.abs(o.riemann - f.riemann).max()),
        }
    human = (f"{geo.name} at {x.tolist()}\n"
             f"g =\n{np.array2string(f.g, precision=6)}\n"
             f"Ricci =\n{np.array2string(f.ricci, precision=6)}\n"
             f"R = {payload['scalar-curvature']:.10g}\n"
             f"Kretschmann = {payload['kretschmann']:.10g}")
    if "oracle-deviation" in payload:
        human += "\noracle deviation: " + json.dumps(payload["oracle-deviation"])
    _emit(payload, human, args.report)
    return EXIT_OK


def cmd_gamma(args) -> int:
    geo = _geometry(args.geometry, _parse_pairs(args.param, "--param"))
    x = _parse_point(args.at)
    try:
        f = build_frame(geo, x, order=2)
    except (GeometryError, DomainError, ArithmeticError) as exc:
        raise InputError(str(exc))
    tf = tetrad_forms(f, 1)
    sg = secondary_generators(tf)
    rep = gamma_rep(tf, ideal_basis(sg))
    B = b_connection(tf)
    eta = np.diag([1.0, -1.0, -1.0, -1.0])
    anti = rep.anticommutators("a")
    anti_dev = float(np.abs(anti - 2 * eta[:, :, None, None] * np.eye(4)).max())
    payload = {
        "geometry": geo.name, "point": _real(x),
        "gamma-tetrad": _cplx(rep.gamma_a), "gamma-coordinate": _cplx(rep.gamma_mu),
        "b": _real(B.b),
        "anticommutator": _cplx(anti), "anticommutator-deviation": anti_dev,
        "frame-deviation": rep.frame_residual(),
    }
    lines = [f"{geo.name} at {x.tolist()}"]
    for a in range(4):
        lines.append(f"gamma^{a} =\n{np.array2string(rep.gamma_a[a], precision=6, suppress_small=True)}")
    lines.append(f"max |{{gamma^a, gamma^b}} - 2 eta^ab| = {anti_dev:.3e}")
    lines.append(f"max |gamma^mu - gamma^c e^mu_c| = {payload['frame-deviation']:.3e}")
    _emit(payload, "\n".join(lines), args.report)
    return EXIT_OK


def validate_geometry(path: str, points: int = 100, seed: int = 0) -> list[str]:
    """Diagnostics for a geometry file; an empty list means it validates."""
    try:
        geo = catalog.resolve(path)
    except (GeometryError, OSError) as exc:
        return [str(exc)]
    try:
        pts = geo.sample_points(points, seed)
    except GeometryError as exc:
        return [str(exc)]
    errors = []
    for x in pts:
        try:
            build_frame(geo, x, order=1)
        except (GeometryError, ValueError, ArithmeticError) as exc:
            errors.append(f"at point {x.tolist()}: {exc}")
            break
    return errors


def cmd_validate(args) -> int:
    errors = validate_geometry(args.file, args.points, args.seed)
    payload = {"file": args.file, "valid": not errors, "errors": errors}
    human = "valid" if not errors else "\n".join(f"error: {e}" for e in errors)
    _emit(payload, human, args.report)
    return EXIT_OK if not errors else EXIT_INPUT


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tetrad-forge",
                                description="Tetrad Clifford-form identities on curved spacetimes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_report(sp):
        sp.add_argument("--report", choices=("json", "human"), default="json")

    sp = sub.add_parser("catalog", help="list shipped geometries")
    add_report(sp)
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("check", help="run identity checks at sampled points")
    sp.add_argument("geometry", help="catalog name or path to a geometry JSON file")
    sp.add_argument("--suite", choices=("all",) + SUITES, default="all")
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", action="append", metavar="CHECK=VALUE",
                    help="override the tolerance of one check (repeatable)")
    sp.add_argument("--no-time", action="store_true", help="omit wall time from JSON")
    add_report(sp)
    sp.set_defaults(func=cmd_check)

    for name, fn, helptext in (("curvature", cmd_curvature, "metric and curvature at a point"),
                               ("gamma", cmd_gamma, "gamma matrices and b at a point")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("geometry")
        sp.add_argument("--at", required=True, metavar="X0,X1,X2,X3")
        sp.add_argument("--param", action="append", metavar="NAME=VALUE")
        if name == "curvature":
            sp.add_argument("--oracle", action="store_true",
                            help="also report deviation from the finite-difference oracle")
        add_report(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("validate", help="validate a geometry file")
    sp.add_argument("file")
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    add_report(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
