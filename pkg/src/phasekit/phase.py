"""Branch-tracked phase integrand q(z) = sqrt(R(z)) and phase integrals.

The lowest-order integrand choice q^2 = R is built in, together with the
amplitude prefactor q^(-1/2); both square roots are continued analytically
along paths by small-step sign matching, so no global cut bookkeeping is
needed.  Near a first-order (or higher) zero the continuation switches to
the local model q ~ C (z - z0)^(m/2), which keeps the handoff well defined
for paths whose endpoint sits exactly on a turning point — those phase
integrals converge and are resolved adaptively.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .cplane import (
    PathSpec,
    RationalIntegrand,
    contour_integrate,
    validate_clearance,
)
from .errors import BranchAmbiguity, SingularPoint, ValidityViolation

_STEP_FRACTION = 0.35   # max continuation step as a fraction of branch-point distance
_NEAR_FRACTION = 0.35   # local power-law model active inside this fraction
_TP_EPS = 1e-13


# ---------------------------------------------------------------------------
# validity parameter
# ---------------------------------------------------------------------------

def epsilon(R: RationalIntegrand, z: complex) -> complex:
    """Validity parameter of the approximation at z.

    For the built-in integrand choice (q^2 = R) the correction term
    (R - q^2)/q vanishes identically and the remaining piece reduces to the
    exact rational expression (5/16) R'^2/R^3 - (1/4) R''/R^2, which is
    branch-free; no numerical differentiation is involved.
    """
    z = complex(z)
    Rv, R1, R2 = R.derivatives(z)
    if Rv == 0:
        raise SingularPoint(f"validity parameter diverges at the turning point {z}")
    return (5.0 / 16.0) * R1 * R1 / Rv**3 - 0.25 * R2 / Rv**2


# ---------------------------------------------------------------------------
# sheets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchSheet:
    """A continuously tracked branch of q = sqrt(R) anchored at one point.

    ``anchor_value`` fixes the sheet: anchor_value^2 = R(anchor).  The
    amplitude root u = sqrt(q) is tracked alongside q; its overall sign is a
    free normalisation (it cancels in every connection matrix) and defaults
    to the principal square root at the anchor.
    """

    integrand: RationalIntegrand
    anchor: complex
    anchor_value: complex
    anchor_u: complex | None = None

    def __post_init__(self):
        a = complex(self.anchor)
        q = complex(self.anchor_value)
        Rv = self.integrand.evaluate(a)
        scale = max(abs(Rv), 1e-300)
        if abs(q * q - Rv) > 1e-12 * scale:
            raise ValueError("anchor_value^2 does not match R(anchor)")
        u = self.anchor_u
        if u is None:
            u = cmath.sqrt(q)
        else:
            u = complex(u)
            if abs(u * u - q) > 1e-12 * max(abs(q), 1e-300):
                raise ValueError("anchor_u^2 does not match anchor_value")
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "anchor_value", q)
        object.__setattr__(self, "anchor_u", u)

    @classmethod
    def outer(cls, R: RationalIntegrand, at: complex) -> "BranchSheet":
        """Sheet matching the standard outer branch q ~ sqrt(a_n) z^(n/2).

        ``at`` should be well outside the singularities; the sign of
        sqrt(R(at)) closest to the leading-order prediction is chosen.
        """
        at = complex(at)
        n = R.degree
        pred = cmath.exp(0.5 * cmath.log(R.leading_coefficient)) * at ** (n / 2.0)
        q = cmath.sqrt(R.evaluate(at))
        if abs(q - pred) > abs(-q - pred):
            q = -q
        return cls(R, at, q)

    @classmethod
    def principal(cls, R: RationalIntegrand, at: complex) -> "BranchSheet":
        at = complex(at)
        return cls(R, at, cmath.sqrt(R.evaluate(at)))

    def negated(self) -> "BranchSheet":
        """The opposite sheet (-q) anchored at the same point."""
        return BranchSheet(self.integrand, self.anchor, -self.anchor_value)

    def rebased(self, z: complex, via: PathSpec | None = None) -> "BranchSheet":
        """New sheet anchored at ``z``, continued along ``via`` (default: the
        straight segment from the current anchor)."""
        z = complex(z)
        if z == self.anchor:
            return self
        if via is None:
            via = PathSpec([self.anchor, z])
        cps = continuation_checkpoints(self, via)
        if cps.q[-1] == 0:
            raise BranchAmbiguity("cannot anchor a sheet on a turning point")
        return BranchSheet(self.integrand, z, complex(cps.q[-1]), complex(cps.u[-1]))

    def q_at(self, z: complex, via: PathSpec | None = None) -> complex:
        return self.rebased(z, via).anchor_value

    def q_derivative(self, z: complex, q: complex | None = None) -> complex:
        """q'(z) = R'(z) / (2 q(z)) from exact rational derivatives."""
        if q is None:
            q = self.q_at(z)
        _, R1, _ = self.integrand.derivatives(z)
        return R1 / (2 * q)


# ---------------------------------------------------------------------------
# continuation along a path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Checkpoints:
    """Dense branch record along one path.

    ``t`` is the global path parameter (segment index plus local fraction),
    ``q`` and ``u`` the tracked branch values.  The record is dense enough
    that sign matching against the nearest checkpoint is unambiguous for any
    point between neighbouring checkpoints.
    """

    R: RationalIntegrand = field(repr=False)
    path: PathSpec
    t: np.ndarray
    z: np.ndarray
    q: np.ndarray
    u: np.ndarray

    def q_near(self, t: float, z: complex) -> complex:
        """Branch value at a point near path parameter ``t``."""
        idx = int(np.searchsorted(self.t, t, side="right")) - 1
        idx = min(max(idx, 0), len(self.t) - 1)
        q_ref = self.q[idx]
        for j in (idx + 1, idx - 1):
            if q_ref != 0:
                break
            if 0 <= j < len(self.t):
                q_ref = self.q[j]
        q = cmath.sqrt(self.R.evaluate(z))
        if q_ref == 0:
            return q
        return q if abs(q - q_ref) <= abs(q + q_ref) else -q


class _BranchWalker:
    """Continuation state machine: plain sign matching far from branch
    points, local power-law prediction near zeros of R."""

    def __init__(self, R: RationalIntegrand):
        self.R = R
        zp = R.zeros_poles()
        self.zeros = zp["zeros"]
        self.branch_pts = [z for z, m in zp["zeros"] if m % 2 == 1] + \
                          [z for z, m in zp["poles"] if m % 2 == 1]
        self.all_model_pts = list(zp["zeros"])
        self.z = None
        self.q = None
        self.u = None
        self.z_ref = None  # last state with a healthy |q|
        self.q_ref = None
        self.u_ref = None

    def seed(self, z, q, u):
        self.z, self.q, self.u = complex(z), complex(q), complex(u)
        if self.q != 0:
            self.z_ref, self.q_ref, self.u_ref = self.z, self.q, self.u

    def _nearest_zero(self, z):
        if not self.all_model_pts:
            return None, None, np.inf
        best = min(self.all_model_pts, key=lambda zm: abs(z - zm[0]))
        return best[0], best[1], abs(z - best[0])

    def local_radius(self, b):
        others = [abs(b - c) for c, _ in self.all_model_pts if c != b]
        others += [abs(b - p) for p in self.branch_pts if p != b]
        base = min(others) if others else max(1.0, abs(b) + 1.0)
        return _NEAR_FRACTION * base

    def step(self, z_next):
        z_next = complex(z_next)
        b, m, d_next = self._nearest_zero(z_next)
        if b is not None and d_next < self.local_radius(b):
            if d_next <= _TP_EPS * (1 + abs(b)):
                # landing exactly on the turning point: branch pinned by ref
                self.z, self.q, self.u = z_next, 0j, 0j
                return self.q, self.u
            if self.z_ref is None:
                raise BranchAmbiguity(
                    "continuation started at a turning point with no branch reference"
                )
            ratio = (z_next - b) / (self.z_ref - b)
            q_pred = self.q_ref * cmath.exp(0.5 * m * cmath.log(ratio))
            q = cmath.sqrt(self.R.evaluate(z_next))
            if abs(q - q_pred) > abs(q + q_pred):
                q = -q
            u_pred = self.u_ref * cmath.exp(0.25 * m * cmath.log(ratio))
            u = cmath.sqrt(q)
            if abs(u - u_pred) > abs(u + u_pred):
                u = -u
            self.z, self.q, self.u = z_next, q, u
            if d_next > 0.6 * self.local_radius(b):
                self.z_ref, self.q_ref, self.u_ref = z_next, q, u
            return q, u
        q = cmath.sqrt(self.R.evaluate(z_next))
        if self.q not in (None, 0j) and abs(q - self.q) > abs(q + self.q):
            q = -q
        elif self.q in (None, 0j) and self.q_ref is not None:
            b2, m2, _ = self._nearest_zero(self.z_ref)
            if b2 is not None:
                ratio = (z_next - b2) / (self.z_ref - b2)
                q_pred = self.q_ref * cmath.exp(0.5 * m2 * cmath.log(ratio))
                if abs(q - q_pred) > abs(q + q_pred):
                    q = -q
        u = cmath.sqrt(q)
        if self.u not in (None, 0j) and abs(u - self.u) > abs(u + self.u):
            u = -u
        self.z, self.q, self.u = z_next, q, u
        self.z_ref, self.q_ref, self.u_ref = z_next, q, u
        return q, u


def continuation_checkpoints(sheet: BranchSheet, path: PathSpec,
                             check_clearance: bool = True) -> Checkpoints:
    """Walk ``path`` from its start, recording branch values of (q, u).

    The path must start at the sheet anchor (use :meth:`BranchSheet.rebased`
    otherwise).  A segment interior passing within clearance of a singular
    point raises :class:`BranchAmbiguity`; endpoints may touch a turning
    point.
    """
    R = sheet.integrand
    if abs(complex(path.start) - sheet.anchor) > 1e-12 * (1 + abs(sheet.anchor)):
        raise ValueError("path must start at the sheet anchor; rebase the sheet first")
    walker = _BranchWalker(R)
    if check_clearance:
        zp = R.zeros_poles()
        sing = [z for z, _ in zp["zeros"]] + [z for z, _ in zp["poles"]]
        bad = validate_clearance(path, sing)
        if bad:
            raise BranchAmbiguity("; ".join(bad))

    walker.seed(path.start, sheet.anchor_value, sheet.anchor_u)
    ts = [0.0]
    zs = [complex(path.start)]
    qs = [sheet.anchor_value]
    us = [sheet.anchor_u]

    for k, (a, b) in enumerate(path.segments()):
        seg_len = abs(b - a)
        t_local = 0.0
        while t_local < 1.0:
            z_here = a + t_local * (b - a)
            _, _, d = walker._nearest_zero(z_here)
            d_b = min([abs(z_here - p) for p in walker.branch_pts], default=np.inf)
            d = min(d, d_b)
            step = _STEP_FRACTION * d / seg_len if seg_len > 0 else 1.0
            step = max(min(step, 0.25), 1e-5)
            t_next = min(1.0, t_local + step)
            q, u = walker.step(a + t_next * (b - a))
            ts.append(k + t_next)
            zs.append(a + t_next * (b - a))
            qs.append(q)
            us.append(u)
            t_local = t_next

    return Checkpoints(R, path, np.asarray(ts), np.asarray(zs, dtype=complex),
                       np.asarray(qs, dtype=complex), np.asarray(us, dtype=complex))


# ---------------------------------------------------------------------------
# phase integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseValue:
    """A computed phase integral with its provenance."""

    omega: complex
    basepoint: complex
    endpoint: complex
    path: PathSpec
    err_estimate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "omega": [self.omega.real, self.omega.imag],
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "endpoint": [self.endpoint.real, self.endpoint.imag],
        }


def phase_integral(sheet: BranchSheet, path: PathSpec, tol: float = 1e-11) -> PhaseValue:
    """omega = integral of q along ``path`` with branch continuity.

    When the sheet is anchored away from the path start, the branch is
    carried in over a straight bridge (which is not integrated).  Paths may
    start or end exactly on a turning point; the square-root endpoint
    singularity is integrable and resolved adaptively, and the bridge keeps
    the branch handoff across the turning point well defined.
    """
    start = complex(path.start)
    offset = 0
    walk_path = path
    if abs(start - sheet.anchor) > 1e-12 * (1 + abs(start)):
        walk_path = PathSpec((sheet.anchor,) + path.vertices, clearance=path.clearance)
        offset = 1
    cps = continuation_checkpoints(sheet, walk_path)

    total = 0j
    err = 0.0
    unit = PathSpec([0.0, 1.0])
    for k, (a, b) in enumerate(path.segments()):
        v = b - a

        def g(zt, _a=a, _v=v, _k=k + offset):
            t = zt.real
            return cps.q_near(_k + t, _a + t * _v) * _v

        res = contour_integrate(g, unit, tol=tol)
        total += res["value"]
        err += res["err_estimate"]
    return PhaseValue(total, start, complex(path.end), path, err)


# ---------------------------------------------------------------------------
# base solutions
# ---------------------------------------------------------------------------

def basis_values(sheet: BranchSheet, omega: PhaseValue | complex, z: complex,
                 eps_threshold: float | None = None) -> dict:
    """Values and derivatives of the base pair y± = q^(-1/2) exp(±i omega).

    ``omega`` is the phase at ``z`` (a PhaseValue ending at ``z`` or a plain
    number); the sheet must be anchored at ``z`` or reachable by a straight
    bridge.  When ``eps_threshold`` is given, |epsilon(z)| above it raises
    :class:`ValidityViolation` — the matching point must be moved outward.

    The returned pair satisfies y+ y-' - y- y+' = -2i identically.
    """
    z = complex(z)
    if isinstance(omega, PhaseValue):
        if abs(omega.endpoint - z) > 1e-9 * (1 + abs(z)):
            raise ValueError("omega does not end at the evaluation point")
        om = omega.omega
    else:
        om = complex(omega)
    if eps_threshold is not None:
        e = epsilon(sheet.integrand, z)
        if abs(e) > eps_threshold:
            raise ValidityViolation(
                f"|epsilon(z)|={abs(e):.3g} exceeds the matching threshold {eps_threshold:.3g}"
            )
    sh = sheet.rebased(z)
    q = sh.anchor_value
    u = sh.anchor_u
    qp = sh.q_derivative(z, q)
    y_p = cmath.exp(1j * om) / u
    y_m = cmath.exp(-1j * om) / u
    damp = -qp / (2 * q)
    return {
        "y_plus": y_p,
        "y_plus_deriv": (1j * q + damp) * y_p,
        "y_minus": y_m,
        "y_minus_deriv": (-1j * q + damp) * y_m,
    }
