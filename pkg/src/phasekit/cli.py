"""Command-line front end.

One self-describing JSON problem format is shared by all subcommands; SVG
output is write-only.  Exit codes: 0 success, 1 a verification ran and its
residual exceeded the threshold, 2 malformed input.  The environment
variable PHASEKIT_TOL overrides the default tolerance.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys

import numpy as np

from . import geometry, weber
from .algebra import OperatorWord, evaluate_word, reduce_to_canonical
from .cplane import PathSpec, RationalIntegrand, validate_clearance
from .errors import PhasekitError
from .oracle import exact_fmatrix
from .phase import BranchSheet
from .symmetry import (
    AffineConj,
    ParamFactor,
    SymmetryTransform,
    check_is_symmetry,
    validate_homotopy,
    verify_fmatrix_relation,
)

_FAMILIES = {
    "weber": weber.weber_integrand,
}


class ProblemFileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# strict problem parsing
# ---------------------------------------------------------------------------

def _c(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ProblemFileError(f"{where}: expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def _check_keys(d, allowed, where):
    for k in d:
        if k not in allowed:
            raise ProblemFileError(f"{where}/{k}: unknown key")


class ProblemFile:
    """Parsed problem: integrand, named paths, transforms, tolerances."""

    ALLOWED = {"family", "R", "params", "paths", "transforms", "homotopies",
               "words", "basepoint", "tol", "output"}

    def __init__(self, data: dict, source: str = "<problem>"):
        if not isinstance(data, dict):
            raise ProblemFileError(f"{source}: problem must be a JSON object")
        _check_keys(data, self.ALLOWED, source)
        self.raw = data
        self.source = source
        self.tol = float(data.get("tol", float(os.environ.get("PHASEKIT_TOL", "1e-10"))))

        params = {}
        for k, v in (data.get("params") or {}).items():
            params[k] = _c(v, f"{source}/params/{k}")
        self.params = params

        fam = data.get("family")
        if fam is not None:
            if fam not in _FAMILIES:
                raise ProblemFileError(f"{source}/family: unknown family {fam!r}")
            self.integrand = RationalIntegrand.from_builder(
                lambda p, _f=_FAMILIES[fam]: (_f(**p).num, _f(**p).den), **params)
        elif "R" in data:
            rspec = data["R"]
            _check_keys(rspec, {"num", "den"}, f"{source}/R")
            num = [_c(c, f"{source}/R/num[{i}]") for i, c in enumerate(rspec["num"])]
            den = [_c(c, f"{source}/R/den[{i}]") for i, c in enumerate(rspec.get("den", [[1, 0]]))]
            self.integrand = RationalIntegrand(num, den, params=params)
        else:
            raise ProblemFileError(f"{source}: needs either 'family' or 'R'")

        self.paths = {}
        for name, p in (data.get("paths") or {}).items():
            where = f"{source}/paths/{name}"
            _check_keys(p, {"waypoints", "closed"}, where)
            self.paths[name] = PathSpec([_c(w, where) for w in p["waypoints"]],
                                        closed=bool(p.get("closed", False)))
        self.homotopies = {}
        for name, p in (data.get("homotopies") or {}).items():
            where = f"{source}/homotopies/{name}"
            _check_keys(p, {"waypoints", "closed"}, where)
            self.homotopies[name] = PathSpec([_c(w, where) for w in p["waypoints"]],
                                             closed=bool(p.get("closed", False)))

        self.transform_specs = data.get("transforms") or {}
        self.words = data.get("words") or {}
        self.basepoint = _c(data["basepoint"], f"{source}/basepoint") if "basepoint" in data else None

    def transform(self, name: str) -> SymmetryTransform:
        if name not in self.transform_specs:
            raise ProblemFileError(f"{self.source}: no transform named {name!r}")
        return parse_transform(self.transform_specs[name], f"{self.source}/transforms/{name}")

    def to_dict(self) -> dict:
        return self.raw


def parse_transform(spec: dict, where: str) -> SymmetryTransform:
    _check_keys(spec, {"f", "g", "h", "antilinear", "mu_steps"}, where)
    anti = bool(spec.get("antilinear", False))
    g = spec.get("g") or {}
    _check_keys(g, {"a", "b", "conj"}, f"{where}/g")
    a = _c(g["a"], f"{where}/g/a") if "a" in g else 1 + 0j
    b = _c(g["b"], f"{where}/g/b") if "b" in g else 0j
    gconj = bool(g.get("conj", anti))
    h = {}
    for name, hs in (spec.get("h") or {}).items():
        hw = f"{where}/h/{name}"
        if isinstance(hs, dict):
            _check_keys(hs, {"factor_abs", "factor_arg", "winding"}, hw)
            ang = float(hs.get("factor_arg", 0.0)) + 2 * math.pi * int(hs.get("winding", 0))
            h[name] = ParamFactor(float(hs.get("factor_abs", 1.0)), ang)
        else:
            v = _c(hs, hw)
            h[name] = ParamFactor(abs(v), cmath.phase(v))
    f = _c(spec["f"], f"{where}/f") if "f" in spec else 1 + 0j
    try:
        return SymmetryTransform(g=AffineConj(a=a, b=b, conj=gconj), h=h, f=f,
                                 antilinear=anti, mu_steps=int(spec.get("mu_steps", 64)))
    except PhasekitError as exc:
        raise ProblemFileError(f"{where}: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _cj(z: complex) -> list:
    return [z.real, z.imag]


def _emit(obj, pretty=True):
    print(json.dumps(obj, indent=2 if pretty else None, sort_keys=True))


def _matrix_json(m) -> list:
    return [[_cj(complex(v)) for v in row] for row in np.asarray(m.entries)]


def _load(path_or_dash: str) -> dict:
    try:
        if path_or_dash == "-":
            return json.load(sys.stdin)
        with open(path_or_dash) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFileError(f"{path_or_dash}: {exc}") from exc


def _parse_complex(text: str) -> complex:
    try:
        if "," in text:
            re_, im_ = text.split(",")
            return complex(float(re_), float(im_))
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise ProblemFileError(f"cannot parse complex number {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_diagram(args) -> int:
    prob = ProblemFile(_load(args.problem), args.problem)
    R = prob.integrand
    d = geometry.diagram(R, radius=args.radius)
    if args.kind != "both":
        d = geometry.StokesDiagram(
            integrand=d.integrand, zeros=d.zeros, poles=d.poles,
            stokes_lines=d.stokes_lines if args.kind == "stokes" else (),
            antistokes_lines=d.antistokes_lines if args.kind == "antistokes" else (),
            wedges=d.wedges, cuts=d.cuts, truncation_radius=d.truncation_radius)
    if args.svg:
        geometry.emit(d, "svg", args.svg)
    if args.json_out:
        geometry.emit(d, "json", args.json_out)
    if not args.svg and not args.json_out:
        print(geometry.emit(d, "json"))
    return 0


def cmd_fmatrix(args) -> int:
    prob = ProblemFile(_load(args.problem), args.problem)
    if args.path_file:
        pd = _load(args.path_file)
        path = PathSpec.from_dict(pd)
    else:
        if args.path not in prob.paths:
            raise ProblemFileError(f"no path named {args.path!r} in the problem file")
        path = prob.paths[args.path]
    tol = args.tol or prob.tol
    basepoint = _parse_complex(args.basepoint) if args.basepoint else prob.basepoint
    R = prob.integrand
    sheet = BranchSheet.outer(R, path.start)
    res = exact_fmatrix(R, sheet, path, basepoint=basepoint, ode_tol=tol,
                        matching_threshold=None if args.no_matching_guard else args.matching,
                        auto_extend=not args.no_extend)
    _emit({
        "matrix": _matrix_json(res.matrix),
        "det_defect": res.det_defect,
        "eps_start": res.eps_start,
        "eps_end": res.eps_end,
        "omega_start": _cj(res.omega_start),
        "omega_end": _cj(res.omega_end),
        "extended": res.extended,
        "path_used": res.path.to_dict(),
        "ode_tolerance": res.ode_tolerance,
    })
    return 0


_WEBER_CHECKS = (
    ("s_3/2(0) = i*sqrt(2)",
     lambda: abs(weber.s_three_halves(0) - 1j * math.sqrt(2)), 1e-12),
    ("|R|^2 = |T|^2 = 1/2 at delta 0",
     lambda: max(abs(abs(weber.scattering(0).R_coeff) ** 2 - 0.5),
                 abs(abs(weber.scattering(0).T_coeff) ** 2 - 0.5)), 1e-10),
    ("flux conservation on the real grid",
     lambda: max(weber.scattering(0.1 * k).flux_residual for k in range(21)), 1e-10),
    ("|T|^2/|R|^2 = exp(-pi delta^2)",
     lambda: max(abs(abs(weber.scattering(d).T_coeff) ** 2
                     / abs(weber.scattering(d).R_coeff) ** 2
                     - math.exp(-math.pi * d * d)) for d in (0.5, 1.0, 1.5)), 1e-9),
    ("reflection identity p(x)p(-x) = 2cos(pi x/2)",
     lambda: max(abs(weber.p_function(x) * weber.p_function(-x) - 2 * cmath.cos(math.pi * x / 2))
                 for x in (0.25, -0.25, 0.5j, -0.5j, 1 + 0.3j)), 1e-10),
    ("rotation relation s(d e^{i pi}) = s(d) e^{-pi d^2}",
     lambda: max(abs(weber.s_three_halves(d, sheet=1)
                     - weber.s_three_halves(d) * cmath.exp(-math.pi * d * d))
                 for d in (0.7 + 0.2j, 1.1 - 0.3j, 0.9 + 0.1j)), 1e-10),
    ("single-valuedness system from the closed form",
     lambda: max(weber.verify_webtrad(1.0, weber.closed_form_constants(1.0))["residuals"]), 1e-10),
)


def cmd_weber(args) -> int:
    if args.verify:
        failed = 0
        for name, fn, tol in _WEBER_CHECKS:
            r = fn()
            ok = r < tol
            failed += 0 if ok else 1
            print(f"{'PASS' if ok else 'FAIL'}  {name}: residual {r:.3e} (tol {tol:.1e})")
        return 0 if failed == 0 else 1
    d = _parse_complex(args.delta)
    sc = weber.scattering(d)
    out = {
        "delta": _cj(d),
        "s_3_2": _cj(sc.s_value),
        "R": _cj(sc.R_coeff),
        "T": _cj(sc.T_coeff),
        "flux_residual": sc.flux_residual,
        "omega": _cj(weber.WeberInstance(d).omega),
    }
    if args.json_flag or True:
        _emit(out)
    return 0


def cmd_check_symmetry(args) -> int:
    prob = ProblemFile(_load(args.problem), args.problem)
    if args.transform_file:
        T = parse_transform(_load(args.transform_file), args.transform_file)
    else:
        T = prob.transform(args.transform)
    if args.gamma not in prob.paths:
        raise ProblemFileError(f"no path named {args.gamma!r} in the problem file")
    gamma = prob.paths[args.gamma]
    hom = prob.homotopies.get(args.homotopy) if args.homotopy else None
    if args.homotopy and hom is None:
        raise ProblemFileError(f"no homotopy named {args.homotopy!r} in the problem file")
    L = prob.integrand
    if not check_is_symmetry(L, T):
        _emit({"is_symmetry": False})
        return 1
    if hom is not None and not T.antilinear:
        validate_homotopy(L, T, hom)
    z0 = _parse_complex(args.z0) if args.z0 else prob.basepoint
    z0t = _parse_complex(args.z0_tilde) if args.z0_tilde else z0
    if z0 is None:
        raise ProblemFileError("a basepoint is required (--z0 or problem basepoint)")
    rep = verify_fmatrix_relation(L, T, gamma, z0, z0t, hom_path=hom, tol=prob.tol)
    _emit({
        "is_symmetry": True,
        "residual": rep.residual,
        "P_sigma": rep.P_sigma,
        "omega": _cj(rep.omega),
        "exponent_ratio": _cj(rep.exponent_ratio),
        "lhs": _matrix_json(rep.lhs),
        "rhs": _matrix_json(rep.rhs),
    })
    return 0 if rep.residual <= args.threshold else 1


def cmd_reduce(args) -> int:
    data = _load(args.word)
    word = OperatorWord.from_json(data)
    canonical = reduce_to_canonical(word, order=args.order)
    check = evaluate_word(canonical).rel_diff(evaluate_word(word))
    _emit({"canonical": canonical.to_json(), "label": canonical.label(),
           "evaluation_residual": check})
    return 0 if check < 1e-10 else 1


def cmd_validate(args) -> int:
    diagnostics = []
    try:
        prob = ProblemFile(_load(args.problem), args.problem)
    except ProblemFileError as exc:
        _emit({"diagnostics": [str(exc)], "fatal": True})
        return 2
    try:
        sing = prob.integrand.singular_points()
    except PhasekitError as exc:
        diagnostics.append(f"integrand: {exc}")
        sing = []
    for name, path in prob.paths.items():
        for msg in validate_clearance(path, sing):
            diagnostics.append(f"paths/{name}: {msg}")
    for name, spec in prob.transform_specs.items():
        where = f"transforms/{name}"
        try:
            T = parse_transform(spec, where)
        except ProblemFileError as exc:
            diagnostics.append(str(exc))
            continue
        if not check_is_symmetry(prob.integrand, T):
            diagnostics.append(f"{where}: not a symmetry of the integrand")
        nontrivial_track = any(not fac.trivial for fac in T.h.values()) or T.g.a != 1
        if nontrivial_track and not T.antilinear and not prob.homotopies:
            diagnostics.append(f"{where}: deforms the basepoint but no homotopies are declared")
    for name, items in prob.words.items():
        try:
            word = OperatorWord.from_json(items)
        except Exception as exc:
            diagnostics.append(f"words/{name}: malformed ({exc})")
            continue
        for f in word.factors:
            if not f.resolved():
                diagnostics.append(f"words/{name}: unresolved phase in factor {f.label()}")
    _emit({"diagnostics": diagnostics})
    return 0


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="phasekit",
        description="Stokes geometry, connection matrices and their symmetry relations",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagram", help="trace Stokes geometry and emit JSON/SVG")
    p.add_argument("--problem", "-p", required=True)
    p.add_argument("--kind", choices=("stokes", "antistokes", "both"), default="both")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--svg")
    p.add_argument("--json", dest="json_out")
    p.set_defaults(fn=cmd_diagram)

    p = sub.add_parser("fmatrix", help="exact connection matrix along a path")
    p.add_argument("--problem", "-p", required=True)
    p.add_argument("--path", help="name of a path declared in the problem file")
    p.add_argument("--path-file", help="standalone path JSON file")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--basepoint", help="complex as 're,im' or '1+2j'")
    p.add_argument("--matching", type=float, default=1e-8)
    p.add_argument("--no-matching-guard", action="store_true")
    p.add_argument("--no-extend", action="store_true")
    p.set_defaults(fn=cmd_fmatrix)

    p = sub.add_parser("weber", help="closed-form scattering for the Weber equation")
    p.add_argument("--delta", default="1.0")
    p.add_argument("--json", dest="json_flag", action="store_true")
    p.add_argument("--verify", action="store_true",
                   help="run the closed-form verification suite")
    p.set_defaults(fn=cmd_weber)

    p = sub.add_parser("check-symmetry", help="verify the connection-matrix symmetry relation")
    p.add_argument("--problem", "-p", required=True)
    p.add_argument("--transform", "-t", help="name of a transform in the problem file")
    p.add_argument("--transform-file", help="standalone transform JSON file")
    p.add_argument("--gamma", required=True, help="name of the continuation path")
    p.add_argument("--homotopy", help="name of the basepoint deformation track")
    p.add_argument("--z0", help="basepoint for the transformed side")
    p.add_argument("--z0-tilde", help="basepoint for the original side (default: z0)")
    p.add_argument("--threshold", type=float, default=1e-5)
    p.set_defaults(fn=cmd_check_symmetry)

    p = sub.add_parser("reduce", help="canonical two-factor form of an operator word")
    p.add_argument("--word", "-w", required=True)
    p.add_argument("--order", choices=("SW", "WS"), default="SW")
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("validate", help="surface every problem-file issue up front")
    p.add_argument("--problem", "-p", required=True)
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ProblemFileError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except PhasekitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
