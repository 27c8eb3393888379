"""Exact connection matrices by integrating the equation along complex paths.

Instead of the raw oscillatory pair (y, y'), the integrator advances the
exact envelope system obtained by projecting the solution on the base pair
y± = q^(-1/2) e^(±i w) with the constant Wronskian -2i:

    a' = +(i/2) eps q (a + b e^{-2iw})
    b' = -(i/2) eps q (a e^{+2iw} + b),        w' = q,

where eps is the validity parameter.  The coefficients (a, b) are exactly
the psi-vector components in the continuously continued base system, so the
fundamental 2x2 solution of this system *is* the connection matrix for the
path: no matching approximation enters, only the ODE tolerance.  The same
columns would be produced by integrating y'' + R y = 0 with pure-base seeds
and Wronskian projection at the end; a raw integrator of that form is kept
for cross-validation in the test suite.

Conditioning caveat: the couplings carry e^{±2iw}, whose magnitude is the
dominance ratio of the base pair.  Along routes that stay near oscillatory
(anti-Stokes) structures and hug turning-point regions the ratio stays
modest and double precision is ample; wide arcs through the middle of a
Stokes domain are exponentially ill-conditioned for every formulation, so
route paths accordingly (homotopy invariance guarantees the same matrix).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .algebra import ConnectionMatrix, make_generator
from .cplane import PathSpec, RationalIntegrand
from .errors import StiffnessFailure, ValidityViolation, WrongForm
from .phase import BranchSheet, basis_values, continuation_checkpoints, epsilon, phase_integral

DEFAULT_ODE_TOL = 1e-10
DEFAULT_MATCHING_THRESHOLD = 1e-8
_EXP_GUARD = 600.0  # |Re(2iw)| beyond this aborts: path is ill-conditioned


@dataclass(frozen=True)
class ExactFResult:
    """Connection matrix for a path plus the diagnostics that qualify it."""

    matrix: ConnectionMatrix
    path: PathSpec
    basepoint: complex | None
    eps_start: float
    eps_end: float
    ode_tolerance: float
    omega_start: complex
    omega_end: complex
    q_start: complex = 0j
    q_end: complex = 0j
    extended: bool = False
    requested_path: PathSpec | None = None

    @property
    def det_defect(self) -> float:
        return abs(self.matrix.det() - 1.0)


def _envelope_rhs_factory(R: RationalIntegrand, cps, seg_index: int, a: complex, v: complex):
    def rhs(t, y):
        z = a + t * v
        q = cps.q_near(seg_index + t, z)
        Rv, R1, R2 = R.derivatives(z)
        epsq = ((5.0 / 16.0) * R1 * R1 / (Rv * Rv * Rv) - 0.25 * R2 / (Rv * Rv)) * q
        w = y[4]
        x = 2j * w
        if abs(x.real) > _EXP_GUARD:
            raise StiffnessFailure(
                "dominance ratio overflow along the path; reroute it through the "
                "turning-point region (see module docstring)"
            )
        E = cmath.exp(-x)
        Ei = cmath.exp(x)
        c = 0.5j * epsq * v
        f00, f01, f10, f11 = y[0], y[1], y[2], y[3]
        return (
            c * (f00 + E * f10),
            c * (f01 + E * f11),
            -c * (Ei * f00 + f10),
            -c * (Ei * f01 + f11),
            q * v,
        )

    return rhs


def _integrate_envelope(R, cps, path, omega_start, ode_tol):
    F = np.eye(2, dtype=complex)
    w = complex(omega_start)
    for k, (a, b) in enumerate(path.segments()):
        v = b - a
        rhs = _envelope_rhs_factory(R, cps, k, a, v)
        y0 = np.array([F[0, 0], F[0, 1], F[1, 0], F[1, 1], w], dtype=complex)
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853",
                        rtol=ode_tol, atol=ode_tol * 1e-2)
        if not sol.success:
            raise StiffnessFailure(f"ODE step control failed on segment {k}: {sol.message}")
        y = sol.y[:, -1]
        F = np.array([[y[0], y[1]], [y[2], y[3]]])
        w = complex(y[4])
    return F, w


def exact_fmatrix(R: RationalIntegrand, sheet: BranchSheet, path: PathSpec,
                  basepoint: complex | None = None, *,
                  ode_tol: float = DEFAULT_ODE_TOL,
                  matching_threshold: float | None = DEFAULT_MATCHING_THRESHOLD,
                  auto_extend: bool = True,
                  ref_path: PathSpec | None = None) -> ExactFResult:
    """Connection matrix psi(end) = F psi(start) along ``path``.

    The base system at both endpoints uses the branch of (q, q^(1/2))
    continued along the path from ``sheet`` and the phase measured from
    ``basepoint`` along ``ref_path`` (default: the straight segment to the
    path start, which may touch a turning point) and then along the path
    itself.  The matrix is exact for the stated path up to the ODE
    tolerance; unimodularity holds to the same accuracy.

    ``matching_threshold`` guards the limiting-form reading of the result:
    endpoints where |eps| exceeds it are pushed radially outward when
    ``auto_extend`` is set (the returned result records the extended path),
    otherwise :class:`ValidityViolation` is raised.  Pass ``None`` to skip
    the guard: the matrix itself is exact either way.
    """
    start = complex(path.start)
    sh = sheet if abs(start - sheet.anchor) <= 1e-12 * (1 + abs(start)) else sheet.rebased(start)

    requested = path
    extended = False
    if matching_threshold is not None:
        ends_eps = [abs(epsilon(R, path.start)), abs(epsilon(R, path.end))]
        if max(ends_eps) > matching_threshold:
            if not auto_extend:
                raise ValidityViolation(
                    f"endpoint |eps| = {max(ends_eps):.3g} exceeds the matching "
                    f"threshold {matching_threshold:.3g}"
                )
            path = _extend_radially(R, path, matching_threshold)
            extended = True

    # phase reference at the (possibly extended) path start
    omega_start = 0j
    if basepoint is not None:
        bp = complex(basepoint)
        if ref_path is None:
            ref_path = PathSpec([start, bp])
        else:
            if abs(complex(ref_path.end) - start) > 1e-12 * (1 + abs(start)) or \
               abs(complex(ref_path.start) - bp) > 1e-12 * (1 + abs(bp)):
                raise ValueError("ref_path must run from the basepoint to the path start")
            ref_path = ref_path.reversed()
        # integral from start back to the basepoint, negated
        omega_start = -phase_integral(sh, ref_path, tol=min(1e-11, ode_tol)).omega
        if extended:
            bridge = PathSpec([start, path.start])
            omega_start += phase_integral(sh, bridge, tol=min(1e-11, ode_tol)).omega

    sh_run = sh if abs(complex(path.start) - sh.anchor) <= 1e-12 else sh.rebased(complex(path.start))
    cps = continuation_checkpoints(sh_run, path)
    F, omega_end = _integrate_envelope(R, cps, path, omega_start, ode_tol)
    return ExactFResult(
        matrix=ConnectionMatrix(F),
        path=path,
        basepoint=None if basepoint is None else complex(basepoint),
        eps_start=abs(epsilon(R, path.start)),
        eps_end=abs(epsilon(R, path.end)),
        ode_tolerance=ode_tol,
        omega_start=omega_start,
        omega_end=omega_end,
        q_start=complex(cps.q[0]),
        q_end=complex(cps.q[-1]),
        extended=extended,
        requested_path=requested if extended else None,
    )


def _extend_radially(R, path, threshold, growth=1.25, max_factor=1e6):
    """Push both endpoints outward along rays from the origin until |eps|
    drops below the threshold."""
    def far_point(z):
        z = complex(z)
        if z == 0:
            raise ValidityViolation("cannot extend a path endpoint at the origin")
        f = 1.0
        while abs(epsilon(R, z * f)) > threshold:
            f *= growth
            if f > max_factor:
                raise ValidityViolation("matching threshold unreachable by radial extension")
        return z * f, f

    z1, f1 = far_point(path.start)
    z2, f2 = far_point(path.end)
    pts = list(path.waypoints)
    if path.closed:
        raise ValidityViolation("cannot auto-extend a closed path")
    if f1 > 1.0:
        pts = [z1] + pts
    if f2 > 1.0:
        pts = pts + [z2]
    return PathSpec(pts)


# ---------------------------------------------------------------------------
# limiting form and constant extraction
# ---------------------------------------------------------------------------

def tail_phase(R: RationalIntegrand, q_end: complex, z_end: complex,
               direction: complex, far: float = 2.0e4) -> complex:
    """(1/2) * integral of eps*q from ``z_end`` to infinity along an
    anti-Stokes ray with unit ``direction``.

    This is the exact first-order reconnection left in a finite-radius
    connection matrix: the coefficients of a true solution drift by the pure
    phases e^{±i theta} along the ray, all oscillatory couplings being
    subdominant by one more power of eps.  Conjugating by W[theta] at both
    endpoints therefore turns the finite-radius matrix into the limiting one
    up to O(eps(r)) instead of O(integral of eps q).
    """
    u = complex(direction)
    u /= abs(u)
    n = R.degree

    def q_ray(s):
        z = z_end + s * u
        pred = q_end * cmath.exp(0.5 * n * cmath.log(z / z_end))
        q = cmath.sqrt(R.evaluate(z))
        return q if abs(q - pred) <= abs(q + pred) else -q

    # geometric panels out to `far`; integrand decays like s^(-3) or faster
    total = 0j
    s0 = 0.0
    s1 = max(1.0, 0.1 * abs(z_end))
    from .cplane import _gk15  # 15-point panels suffice on smooth decay
    while s0 < far:
        s1 = min(s1, far)
        val, _ = _gk15(lambda s: _epsq(R, z_end + s.real * u, q_ray(s.real)) * u,
                       complex(s0), complex(s1))
        total += val
        s0, s1 = s1, s1 * 3.0
    return 0.5 * total


def _epsq(R, z, q):
    Rv, R1, R2 = R.derivatives(z)
    return ((5.0 / 16.0) * R1 * R1 / (Rv * Rv * Rv) - 0.25 * R2 / (Rv * Rv)) * q


def limiting_form(result: ExactFResult, R: RationalIntegrand,
                  entry_direction: complex, exit_direction: complex) -> ConnectionMatrix:
    """Tail-correct a finite-radius crossing matrix to its limiting form.

    ``entry_direction``/``exit_direction`` are the outward anti-Stokes ray
    directions at the path's start and end.  The corrected matrix matches
    the infinite-radius limit up to O(eps at the endpoints), so the
    effective matching error of the extraction is the (vanishing) tail
    value rather than the literal endpoint eps.
    """
    th_in = tail_phase(R, result.q_start, complex(result.path.start), entry_direction)
    th_out = tail_phase(R, result.q_end, complex(result.path.end), exit_direction)
    w_out = make_generator("W", th_out)
    w_in = make_generator("W", -th_in)
    return w_out @ result.matrix @ w_in


def extract_stokes_constant(F: ExactFResult | ConnectionMatrix, form: str,
                            orientation: str = "ccw",
                            residual_budget: float = 1e-2) -> dict:
    """Read the effective constant off a near-limiting crossing matrix.

    ``form`` is "S" (y+ dominant in the crossed domain) or "ST".  The
    constant is the off-diagonal entry after dividing out the measured
    diagonal; the residual collects everything the limiting pattern says
    should be trivial.  Clockwise crossings are handled via the inverse.
    """
    m = F.matrix.entries if isinstance(F, ExactFResult) else F.entries
    if orientation == "cw":
        m = np.linalg.inv(m)
    elif orientation != "ccw":
        raise ValueError("orientation must be 'ccw' or 'cw'")
    form = form.upper()
    d0 = abs(m[0, 0] - 1.0)
    d1 = abs(m[1, 1] - 1.0)
    if max(d0, d1) > residual_budget:
        raise WrongForm(
            f"diagonal deviates from unity by {max(d0, d1):.3g}; wrong handedness "
            "or more than one domain crossed"
        )
    if form == "S":
        s = m[1, 0] / m[1, 1]
        residual = max(d0, d1, abs(m[0, 1]))
    elif form == "ST":
        s = m[0, 1] / m[0, 0]
        residual = max(d0, d1, abs(m[1, 0]))
    else:
        raise ValueError("form must be 'S' or 'ST'")
    return {"s": complex(s), "residual": float(residual)}


# ---------------------------------------------------------------------------
# monodromy
# ---------------------------------------------------------------------------

def monodromy(R: RationalIntegrand, loop: PathSpec, tol: float = DEFAULT_ODE_TOL,
              sheet: BranchSheet | None = None) -> ConnectionMatrix:
    """Loop operator around a closed counterclockwise path, with the end
    basis re-anchored to the start's phase reference.

    The connection matrix for the full loop, times the reconnection that
    removes the accumulated loop phase, captures pure solution monodromy
    plus the branch behaviour of the amplitude prefactor.  For polynomial R
    (entire, single-valued solutions) growing like z^n the result equals the
    inverse of the cut operator raised to its asymptotic power: -I for n=2.
    """
    if not loop.closed:
        raise ValueError("monodromy requires a closed path")
    if sheet is None:
        sheet = BranchSheet.outer(R, loop.start)
    res = exact_fmatrix(R, sheet, loop, basepoint=None,
                        ode_tol=tol, matching_threshold=None)
    omega_loop = res.omega_end - res.omega_start
    return make_generator("W", omega_loop) @ res.matrix


# ---------------------------------------------------------------------------
# raw cross-check integrator (used by the test suite)
# ---------------------------------------------------------------------------

def _exact_fmatrix_raw(R: RationalIntegrand, sheet: BranchSheet, path: PathSpec,
                       omega_start: complex = 0j,
                       ode_tol: float = DEFAULT_ODE_TOL) -> ConnectionMatrix:
    """Same connection matrix from the raw equation y'' + R y = 0: seed the
    two pure base vectors at the start, integrate, project at the end with
    the exact Wronskian -2i.  Only suitable for short well-conditioned
    paths; exists to cross-validate the envelope formulation."""
    start = complex(path.start)
    sh = sheet if abs(start - sheet.anchor) <= 1e-12 * (1 + abs(start)) else sheet.rebased(start)
    cps = continuation_checkpoints(sh, path)
    omega_end = omega_start + phase_integral(sh, path, tol=min(1e-12, ode_tol)).omega

    def base(z, q, u, om):
        _, R1, _ = R.derivatives(z)
        damp = -R1 / (4 * q * q)  # -q'/(2q) with q' = R'/(2q)
        yp = cmath.exp(1j * om) / u
        ym = cmath.exp(-1j * om) / u
        return yp, (1j * q + damp) * yp, ym, (-1j * q + damp) * ym

    yp0, dyp0, ym0, dym0 = base(start, complex(cps.q[0]), complex(cps.u[0]), omega_start)

    def run(y0):
        y = np.array(y0, dtype=complex)
        for a, b in path.segments():
            v = b - a

            def rhs(t, s):
                z = a + t * v
                return (v * s[1], -v * R.evaluate(z) * s[0])

            sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853",
                            rtol=ode_tol, atol=ode_tol * 1e-2)
            if not sol.success:
                raise StiffnessFailure(sol.message)
            y = sol.y[:, -1]
        return y

    cols = []
    zl = complex(path.end)
    ypl, dypl, yml, dyml = base(zl, complex(cps.q[-1]), complex(cps.u[-1]), omega_end)
    for seed in ((yp0, dyp0), (ym0, dym0)):
        y, dy = run(seed)
        aa = (y * dyml - yml * dy) / (-2j)
        bb = (ypl * dy - dypl * y) / (-2j)
        cols.append((aa, bb))
    return ConnectionMatrix(np.array([[cols[0][0], cols[1][0]],
                                      [cols[0][1], cols[1][1]]]))
