"""Symmetry transformations and the relations they impose on connection
matrices and effective Stokes constants.

A transformation consists of a constant solution multiplier, an invertible
affine map on the variable, and a per-parameter multiplier map, each
optionally composed with complex conjugation (a single antilinear flag: the
conjugation applies to the variable, the parameters and the solution values
together, which is the only combination that maps holomorphic solutions to
holomorphic solutions).

Parameter multipliers carry their argument as an explicit tracked angle, so
formal moves like a full-turn rotation of a parameter are distinct from the
identity: the distinction is precisely what feeds the deformation track of
the basepoint and hence the reconnection factor of the derived relation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import ConnectionMatrix, make_generator
from .cplane import PathSpec, RationalIntegrand, validate_clearance
from .errors import (
    HandednessMismatch,
    HomotopyAmbiguous,
    NotApplicable,
    PathClash,
    UnsupportedAction,
)
from .oracle import exact_fmatrix
from .phase import BranchSheet, PhaseValue, phase_integral


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineConj:
    """z -> a z + b, optionally followed by conjugation."""

    a: complex = 1.0 + 0j
    b: complex = 0j
    conj: bool = False

    def __post_init__(self):
        if complex(self.a) == 0:
            raise UnsupportedAction("the variable map must be invertible (a != 0)")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))

    def __call__(self, z: complex) -> complex:
        w = self.a * complex(z) + self.b
        return w.conjugate() if self.conj else w

    def inverse(self) -> "AffineConj":
        if self.conj:
            # w = conj(a z + b)  =>  z = (conj(w) - b)/a
            return AffineConj(a=(1.0 / self.a).conjugate(),
                              b=-(self.b / self.a).conjugate(), conj=True)
        return AffineConj(a=1.0 / self.a, b=-self.b / self.a, conj=False)

    def compose(self, inner: "AffineConj") -> "AffineConj":
        """The map z -> self(inner(z))."""
        return _compose_affine(self, inner)


def _compose_affine(outer: AffineConj, inner: AffineConj) -> AffineConj:
    # outer(inner(z)) = conj^{co}(a_o * conj^{ci}(a_i z + b_i) + b_o)
    if inner.conj:
        a = (outer.a.conjugate()) * inner.a
        b = (outer.a.conjugate()) * inner.b + outer.b.conjugate()
        return AffineConj(a=a, b=b, conj=not outer.conj)
    return AffineConj(a=outer.a * inner.a, b=outer.a * inner.b + outer.b,
                      conj=outer.conj)


@dataclass(frozen=True)
class ParamFactor:
    """Multiplier modulus * exp(i * angle) with the angle tracked, not
    reduced mod 2 pi."""

    modulus: float = 1.0
    angle: float = 0.0

    @property
    def value(self) -> complex:
        return self.modulus * cmath.exp(1j * self.angle)

    def at(self, mu: float) -> complex:
        return self.modulus ** mu * cmath.exp(1j * self.angle * mu)

    @property
    def trivial(self) -> bool:
        return self.modulus == 1.0 and self.angle == 0.0


@dataclass(frozen=True)
class SymmetryTransform:
    """The triple (solution multiplier, variable map, parameter map)."""

    g: AffineConj = field(default_factory=AffineConj)
    h: dict = field(default_factory=dict)   # param name -> ParamFactor
    f: complex = 1.0 + 0j
    antilinear: bool = False
    mu_steps: int = 64

    def __post_init__(self):
        norm = {}
        for k, v in self.h.items():
            if isinstance(v, ParamFactor):
                norm[k] = v
            else:
                v = complex(v)
                norm[k] = ParamFactor(abs(v), cmath.phase(v))
        object.__setattr__(self, "h", norm)
        object.__setattr__(self, "f", complex(self.f))
        if self.g.conj != self.antilinear:
            raise UnsupportedAction(
                "the variable-map conjugation must match the antilinear flag: "
                "only jointly conjugated transforms map holomorphic solutions "
                "to holomorphic solutions"
            )

    # -- actions -------------------------------------------------------------

    def apply_g(self, z: complex) -> complex:
        return self.g(z)

    def g_inverse(self, w: complex) -> complex:
        return self.g.inverse()(w)

    def apply_params(self, params: dict, mu: float = 1.0) -> dict:
        out = {}
        for k, v in params.items():
            v = complex(v)
            fac = self.h.get(k, ParamFactor())
            v = v * fac.at(mu)
            if self.antilinear and mu >= 1.0:
                v = v.conjugate()
            out[k] = v
        return out

    def g_at(self, mu: float) -> AffineConj:
        """Deformation of the variable map from the identity (linear
        transforms only): polar interpolation of the scale, linear of the
        shift."""
        if self.antilinear:
            raise UnsupportedAction("antilinear transforms are not connected to the identity")
        a = abs(self.g.a) ** mu * cmath.exp(1j * cmath.phase(self.g.a) * mu)
        return AffineConj(a=a, b=mu * self.g.b, conj=False)

    @property
    def orientation_reversing(self) -> bool:
        """Antiholomorphic variable maps flip the sense of every crossing."""
        return self.antilinear

    def compose(self, inner: "SymmetryTransform") -> "SymmetryTransform":
        """Transform acting as: apply ``inner`` first, then ``self``.

        The chained action evaluates the original solution at
        g_inner(g_self(z)) and h_inner(h_self(params)): the outer
        transform's maps feed the inner one, so they sit innermost.
        """
        g_total = _compose_affine(inner.g, self.g)
        h_total = {}
        for k in set(self.h) | set(inner.h):
            fs = self.h.get(k, ParamFactor())
            fi = inner.h.get(k, ParamFactor())
            angle = fs.angle - fi.angle if self.antilinear else fs.angle + fi.angle
            h_total[k] = ParamFactor(fs.modulus * fi.modulus, angle)
        f_total = self.f * (inner.f.conjugate() if self.antilinear else inner.f)
        return SymmetryTransform(
            g=g_total,
            h=h_total,
            f=f_total,
            antilinear=self.antilinear != inner.antilinear,
            mu_steps=max(self.mu_steps, inner.mu_steps),
        )

    def label(self) -> str:
        gpart = f"g: z -> {_fmt(self.g.a)}*z" + (f" + {_fmt(self.g.b)}" if self.g.b else "")
        if self.g.conj:
            gpart += " (conjugated)"
        hparts = [f"{k} -> {k} * {fac.modulus:g}*e^(i*{fac.angle:g})"
                  for k, fac in self.h.items() if not fac.trivial]
        if self.antilinear:
            hparts.append("conjugate parameters")
        return "; ".join([gpart] + hparts)


def _fmt(v: complex) -> str:
    if v.imag == 0:
        return f"{v.real:g}"
    if v.real == 0:
        return f"{v.imag:g}i"
    return f"({v.real:g}{v.imag:+g}i)"


def conjugation_transform(mu_steps: int = 64) -> SymmetryTransform:
    """The full complex-conjugation transform."""
    return SymmetryTransform(g=AffineConj(conj=True), antilinear=True, mu_steps=mu_steps)


# ---------------------------------------------------------------------------
# the symmetry condition on R
# ---------------------------------------------------------------------------

def _transformed_integrand(L: RationalIntegrand, T: SymmetryTransform) -> RationalIntegrand:
    new_params = T.apply_params(L.params)
    changed = any(complex(new_params[k]) != complex(v) for k, v in L.params.items())
    if not changed:
        return L
    if L.builder is None:
        raise UnsupportedAction(
            "the parameter map is nontrivial but the integrand carries no builder"
        )
    return L.with_params(**new_params)


def check_is_symmetry(L: RationalIntegrand, T: SymmetryTransform,
                      samples: int = 16, rel_tol: float = 1e-10) -> bool:
    """Does T map solutions of the equation to solutions?

    Reduced to the induced condition on the squared integrand:
    a^2 R(a z + b, h(params)) = R(z, params) for linear transforms and the
    conjugated analogue for antilinear ones, checked on sampled points.
    """
    if samples < 8:
        raise ValueError("need at least 8 samples")
    Rt = _transformed_integrand(L, T)
    try:
        sing = L.singular_points() + Rt.singular_points()
    except Exception:
        sing = []
    radius = 1.5 * max([abs(s) for s in sing] + [1.0]) + 0.5
    a2 = T.g.a * T.g.a
    worst = 0.0
    scale = 0.0
    for j in range(samples):
        z = radius * cmath.exp(2j * math.pi * (j + 0.321) / samples)
        try:
            lhs_inner = Rt.evaluate(T.apply_g(z))
        except Exception:
            continue
        lhs = a2 * (lhs_inner.conjugate() if T.antilinear else lhs_inner)
        rhs = L.evaluate(z)
        worst = max(worst, abs(lhs - rhs))
        scale = max(scale, abs(rhs), abs(lhs))
    return worst <= rel_tol * max(scale, 1.0)


# ---------------------------------------------------------------------------
# homotopy track of the basepoint
# ---------------------------------------------------------------------------

def basepoint_track(T: SymmetryTransform, z0_family, params: dict,
                    mu_steps: int | None = None) -> PathSpec:
    """Deformation track mu -> g_mu^{-1} z0(h_mu params), mu in [0, 1].

    ``z0_family`` maps a params dict to the basepoint.  Only linear
    transforms deform continuously from the identity.
    """
    n = mu_steps or T.mu_steps
    pts = []
    for j in range(n + 1):
        mu = j / n
        lam = T.apply_params(params, mu=mu)
        g_inv = T.g_at(mu).inverse()
        pts.append(g_inv(complex(z0_family(lam))))
    dedup = [pts[0]]
    for p in pts[1:]:
        if abs(p - dedup[-1]) > 1e-14 * (1 + abs(p)):
            dedup.append(p)
    if len(dedup) < 2:
        return None  # the basepoint never moves: trivial track
    return PathSpec(dedup)


def validate_homotopy(L: RationalIntegrand, T: SymmetryTransform,
                      hom_path: PathSpec, clearance: float | None = None,
                      mu_steps: int | None = None) -> None:
    """Raise :class:`HomotopyAmbiguous` when the supplied track passes
    within clearance of a singular point of the deformed problem.

    The track point at fraction mu of the path is checked against the
    singularities of the integrand at the mu-deformed parameters, endpoint
    contacts excepted (a basepoint is routinely a turning point).
    """
    n = mu_steps or T.mu_steps
    L_check = L
    total = hom_path.length
    if total == 0:
        return
    for j in range(1, n):
        mu = j / n
        try:
            lam = T.apply_params(L.params, mu=mu)
            L_check = L.with_params(**lam) if L.builder is not None else L
            sing = L_check.singular_points()
        except Exception:
            continue
        if not sing:
            continue
        cl = clearance if clearance is not None else 0.05 * max(
            min(abs(s) for s in sing), 1e-6)
        z = _point_at_fraction(hom_path, mu)
        for s in sing:
            if abs(z - s) < cl:
                raise HomotopyAmbiguous(
                    f"basepoint track passes within {abs(z - s):.3g} of the singular "
                    f"point {s} at mu={mu:.3f}; supply an explicit detour"
                )


def _point_at_fraction(path: PathSpec, frac: float) -> complex:
    target = frac * path.length
    acc = 0.0
    for a, b in path.segments():
        seg = abs(b - a)
        if acc + seg >= target:
            t = (target - acc) / seg
            return a + t * (b - a)
        acc += seg
    return complex(path.end)


# ---------------------------------------------------------------------------
# the connection-matrix relation
# ---------------------------------------------------------------------------

_P = make_generator("P", (1, 0))


@dataclass(frozen=True)
class FMatrixRelationReport:
    residual: float
    P_sigma: str                   # "id" | "swap"
    lhs: ConnectionMatrix
    rhs: ConnectionMatrix
    omega: complex                 # reconnection phase between the two references
    exponent_ratio: complex        # measured mapping of the base exponents


def verify_fmatrix_relation(L: RationalIntegrand, T: SymmetryTransform,
                            gamma: PathSpec, z0: complex, z0_tilde: complex,
                            hom_path: PathSpec | None = None,
                            tol: float = 1e-10,
                            sheet: BranchSheet | None = None,
                            sheet_t: BranchSheet | None = None) -> FMatrixRelationReport:
    """Numerically verify the symmetry relation between connection matrices.

    Left side: the transformed problem's matrix along the image curve, with
    basepoint ``z0`` (the basepoint family evaluated at the transformed
    parameters), conjugated entrywise for antilinear transforms, then
    conjugated by the base-exchange permutation.  Right side: the original
    problem's matrix along ``gamma`` with basepoint ``z0_tilde``, conjugated
    by the reconnection between the two phase references.  ``hom_path``
    carries that reconnection integral from ``z0_tilde`` to the
    transformation-deformed image of ``z0``; omit it when the two points
    coincide with a trivial deformation track.

    The permutation is measured, not assumed: the branch choice of the
    transformed problem's sheet is absorbed by it, so any consistent sheet
    produces the same residual.
    """
    if not check_is_symmetry(L, T):
        raise UnsupportedAction("the supplied transform is not a symmetry of the equation")
    Rt = _transformed_integrand(L, T)
    gamma_t = gamma.map(T.apply_g)

    sing_t = Rt.singular_points()
    clash = validate_clearance(gamma_t, sing_t)
    if clash:
        raise PathClash("; ".join(clash))

    if sheet is None:
        sheet = BranchSheet.outer(L, gamma.start)
    if sheet_t is None:
        sheet_t = BranchSheet.outer(Rt, gamma_t.start)

    res_o = exact_fmatrix(L, sheet, gamma, basepoint=complex(z0_tilde),
                          ode_tol=tol, matching_threshold=None)
    res_t = exact_fmatrix(Rt, sheet_t, gamma_t, basepoint=complex(z0),
                          ode_tol=tol, matching_threshold=None)

    F_t = res_t.matrix.conjugated() if T.antilinear else res_t.matrix

    # measured mapping of the exponents: does the image of exp(+i w) behave
    # like exp(+i w) or exp(-i w) of the original problem?
    q_o = res_o.q_start
    q_t = res_t.q_start
    r = T.g.a * (q_t.conjugate() if T.antilinear else q_t) / q_o
    if abs(abs(r) - 1.0) > 1e-6:
        raise UnsupportedAction(f"exponent mapping ratio |r|={abs(r):.6g} is not unimodular")
    swap = (r.real < 0) if not T.antilinear else (r.real > 0)

    lhs = (_P @ F_t @ _P) if swap else F_t

    target = T.g.inverse()(complex(z0))
    if hom_path is None:
        if abs(target - complex(z0_tilde)) > 1e-9 * (1 + abs(target)):
            raise HomotopyAmbiguous(
                f"the image basepoint {target} differs from z0_tilde {z0_tilde}; "
                "supply the deformation track as hom_path"
            )
        omega = 0j
    else:
        if abs(complex(hom_path.start) - complex(z0_tilde)) > 1e-9 or \
           abs(complex(hom_path.end) - target) > 1e-9 * (1 + abs(target)):
            raise HomotopyAmbiguous("hom_path must run from z0_tilde to the image basepoint")
        omega = phase_integral(sheet, hom_path, tol=min(tol, 1e-11)).omega

    W = make_generator("W", omega)
    Wi = make_generator("W", -omega)
    rhs = W @ res_o.matrix @ Wi
    residual = lhs.max_diff(rhs)
    return FMatrixRelationReport(residual=float(residual),
                                 P_sigma="swap" if swap else "id",
                                 lhs=lhs, rhs=rhs, omega=omega,
                                 exponent_ratio=complex(r))


# ---------------------------------------------------------------------------
# scalar relations for effective constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StokesConstantRelation:
    """A single scalar relation  f(s_lhs at mapped parameters) =
    (+-) s_rhs * phase_factor, as produced by a symmetry transform."""

    lhs_name: str
    rhs_name: str
    lhs_param_label: str
    rhs_param_label: str
    form: str                  # "S" | "ST" (same on both sides)
    phase_factor: complex
    negated: bool
    conjugated: bool           # antilinear: left side carries conj
    provenance: str            # "gensym" | "cnjgtn" | "func"

    def format(self) -> str:
        lhs = f"{self.lhs_name}({self.lhs_param_label})"
        if self.conjugated:
            lhs = f"conj[{lhs}]"
        rhs = f"{self.rhs_name}({self.rhs_param_label})"
        if self.negated:
            rhs = "-" + rhs
        if abs(self.phase_factor - 1.0) > 1e-14:
            rhs += f" * ({_fmt(self.phase_factor)})"
        return f"{lhs} = {rhs}"

    def sides(self, s_lhs: complex, s_rhs: complex) -> tuple[complex, complex]:
        left = s_lhs.conjugate() if self.conjugated else complex(s_lhs)
        right = complex(s_rhs) * self.phase_factor * (-1 if self.negated else 1)
        return left, right

    def residual(self, s_lhs: complex, s_rhs: complex) -> float:
        left, right = self.sides(s_lhs, s_rhs)
        return abs(left - right)

    @property
    def self_conjugate(self) -> bool:
        return (self.conjugated and self.negated
                and self.lhs_name == self.rhs_name
                and self.lhs_param_label == self.rhs_param_label
                and abs(self.phase_factor - 1.0) < 1e-12)


def derive_constant_relation(T: SymmetryTransform, domain_pair: dict,
                             basepoints: dict, omega_value: PhaseValue | complex | None
                             ) -> StokesConstantRelation:
    """Scalar relation between two effective constants overlapped by T.

    ``domain_pair`` fields: ``lhs``/``rhs`` (constant names), ``rhs_form``
    ("S" when y+ dominates the right-hand domain, "ST" otherwise), and
    optionally ``lhs_form`` (the left domain's natural form in its own
    problem) plus ``swap`` (whether the transform exchanges the base pair);
    when both are given the consistency rule is enforced: the left side must
    read in the same form as the right after the permutation, otherwise no
    scalar relation exists.  ``basepoints`` carries ``lhs_label``/
    ``rhs_label`` for reporting.  ``omega_value`` is the reconnection
    integral from the right basepoint to the deformed image of the left one
    along the declared track (None means the track is trivial).
    """
    form = domain_pair["rhs_form"].upper()
    if form not in ("S", "ST"):
        raise ValueError("rhs_form must be 'S' or 'ST'")
    lhs_form = domain_pair.get("lhs_form")
    swap = domain_pair.get("swap")
    if lhs_form is not None and swap is not None:
        expected = ("ST" if form == "S" else "S") if swap else form
        if lhs_form.upper() != expected:
            raise HandednessMismatch(
                f"left domain reads {lhs_form} but the relation requires {expected}; "
                "no scalar relation between these constants"
            )
    omega = omega_value.omega if isinstance(omega_value, PhaseValue) else complex(omega_value or 0)
    phase = cmath.exp((-2j if form == "S" else 2j) * omega)
    provenance = "cnjgtn" if T.antilinear else ("func" if T.g.a == 1 and T.g.b == 0 else "gensym")
    return StokesConstantRelation(
        lhs_name=domain_pair["lhs"],
        rhs_name=domain_pair["rhs"],
        lhs_param_label=basepoints.get("lhs_label", "h(params)"),
        rhs_param_label=basepoints.get("rhs_label", "params"),
        form=form,
        phase_factor=phase,
        negated=T.orientation_reversing,
        conjugated=T.antilinear,
        provenance=provenance,
    )


def purely_imaginary_check(relation: StokesConstantRelation, s_values) -> bool:
    """True when every supplied constant is purely imaginary, as forced by a
    self-conjugate relation conj(s) = -s at real parameters.

    Raises :class:`NotApplicable` unless the relation really is of that
    self-conjugate shape with trivial reconnection.
    """
    if not relation.self_conjugate:
        raise NotApplicable("the relation does not assert conj(s) = -s for a single constant")
    values = s_values.values() if isinstance(s_values, dict) else s_values
    out = True
    for s in values:
        s = complex(s)
        if abs(s.real) >= 1e-6 * max(abs(s), 1e-300):
            out = False
    return out
