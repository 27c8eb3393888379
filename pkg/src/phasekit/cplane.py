"""Complex-plane substrate: paths, rational functions, roots, quadrature.

Paths are oriented piecewise-linear curves; curved routes are represented by
waypoint densification.  The squared phase integrand R(z) is a ratio of
complex polynomials with coefficients stored in ascending degree order.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    BranchAmbiguity,
    DegenerateInput,
    MaxRefinement,
    NonFinite,
    PoleHit,
)

DEFAULT_TOL = 1e-10
# relative clearance against the characteristic singularity spacing
DEFAULT_CLEARANCE_FRACTION = 1e-3
POLE_REL_TOL = 1e-13
CANCEL_TOL = 1e-9  # zero/pole coincidence tolerance for cancellation


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSpec:
    """Oriented piecewise-linear path through the complex plane.

    ``closed=True`` adds an implicit segment from the last waypoint back to
    the first.  ``clearance`` is the minimum distance every segment must keep
    from declared singular points (path endpoints are allowed to touch a
    singular point; integrable endpoints are common and handled downstream).
    """

    waypoints: tuple[complex, ...]
    closed: bool = False
    clearance: float = 0.0

    def __init__(self, waypoints, closed=False, clearance=0.0):
        pts = tuple(complex(w) for w in waypoints)
        need = 3 if closed else 2
        if len(pts) < need:
            raise ValueError(
                f"path needs at least {need} waypoints (closed={closed}), got {len(pts)}"
            )
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must be distinct")
        if closed and pts[0] == pts[-1]:
            pts = pts[:-1]
            if len(pts) < 3:
                raise ValueError("closed path needs at least 3 distinct waypoints")
        if clearance < 0:
            raise ValueError("clearance must be non-negative")
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "closed", bool(closed))
        object.__setattr__(self, "clearance", float(clearance))

    # -- geometry ----------------------------------------------------------

    @property
    def vertices(self) -> tuple[complex, ...]:
        """Waypoints with the closing point repeated for closed paths."""
        if self.closed:
            return self.waypoints + (self.waypoints[0],)
        return self.waypoints

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[0] if self.closed else self.waypoints[-1]

    def segments(self) -> list[tuple[complex, complex]]:
        v = self.vertices
        return list(zip(v[:-1], v[1:]))

    @property
    def length(self) -> float:
        return sum(abs(b - a) for a, b in self.segments())

    def point(self, t: float) -> complex:
        """Point at global parameter t in [0, nsegments]; unit speed per segment."""
        segs = self.segments()
        k = min(int(t), len(segs) - 1)
        a, b = segs[k]
        return a + (t - k) * (b - a)

    def reversed(self) -> "PathSpec":
        if self.closed:
            w = (self.waypoints[0],) + tuple(reversed(self.waypoints[1:]))
            return PathSpec(w, closed=True, clearance=self.clearance)
        return PathSpec(tuple(reversed(self.waypoints)), clearance=self.clearance)

    def concat(self, other: "PathSpec") -> "PathSpec":
        if self.closed or other.closed:
            raise ValueError("cannot concatenate closed paths")
        if self.end != other.start:
            raise ValueError("paths do not share an endpoint")
        return PathSpec(self.waypoints + other.waypoints[1:], clearance=max(self.clearance, other.clearance))

    def map(self, f: Callable[[complex], complex]) -> "PathSpec":
        return PathSpec(tuple(f(w) for w in self.waypoints), closed=self.closed,
                        clearance=self.clearance)

    def min_distance(self, point: complex) -> float:
        return min(_segment_distance(a, b, point) for a, b in self.segments())

    def to_dict(self) -> dict:
        return {"waypoints": [[w.real, w.imag] for w in self.waypoints], "closed": self.closed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PathSpec":
        return cls([complex(re, im) for re, im in d["waypoints"]], closed=bool(d.get("closed", False)))


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    v = b - a
    t = ((p - a) * v.conjugate()).real / abs(v) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * v - p)


def validate_clearance(path: PathSpec, singular_points: Sequence[complex],
                       clearance: float | None = None,
                       allow_endpoint_touch: bool = True) -> list[str]:
    """Check every segment against every singular point.

    Returns a list of human-readable violations (empty when the path is
    admissible).  Endpoints may sit on a singular point when
    ``allow_endpoint_touch`` is set; integrals with square-root endpoints
    converge and the branch handoff is treated locally.
    """
    sing = [complex(s) for s in singular_points]
    if not sing:
        return []
    if clearance is None:
        clearance = path.clearance or default_clearance(sing)
    out = []
    ends = (path.start, path.end)
    for s in sing:
        d = path.min_distance(s)
        if d >= clearance:
            continue
        if allow_endpoint_touch and min(abs(s - e) for e in ends) <= clearance:
            continue
        out.append(f"path comes within {d:.3g} of singular point {s} (clearance {clearance:.3g})")
    return out


def default_clearance(singular_points: Sequence[complex]) -> float:
    """Clearance scaled to the characteristic spacing of the singularities."""
    pts = [complex(s) for s in singular_points]
    if len(pts) < 2:
        scale = max([abs(p) for p in pts] + [1.0])
        return DEFAULT_CLEARANCE_FRACTION * scale
    spacing = min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:])
    return DEFAULT_CLEARANCE_FRACTION * max(spacing, 1e-12)


# ---------------------------------------------------------------------------
# rational integrands
# ---------------------------------------------------------------------------

def _trim(coeffs) -> tuple[complex, ...]:
    c = [complex(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def _polyval(coeffs: tuple[complex, ...], z: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _polyder(coeffs: tuple[complex, ...]) -> tuple[complex, ...]:
    if len(coeffs) == 1:
        return (0j,)
    return tuple(k * c for k, c in enumerate(coeffs) if k > 0)


def _coeff_scale(coeffs) -> float:
    return max(abs(c) for c in coeffs) or 1.0


@dataclass(frozen=True)
class RationalIntegrand:
    """Squared phase integrand R(z) = num(z)/den(z) with bound parameters.

    ``params`` records the parameter values the coefficients were built from;
    ``builder`` (optional) maps a params dict back to (num, den) coefficient
    lists so the integrand can be re-instantiated at transformed parameters.
    """

    num: tuple[complex, ...]
    den: tuple[complex, ...] = (1 + 0j,)
    params: Mapping[str, complex] = field(default_factory=dict)
    builder: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if all(c == 0 for c in den):
            raise DegenerateInput("denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_builder(cls, builder: Callable, **params: complex) -> "RationalIntegrand":
        num, den = builder(dict(params))
        return cls(num, den, params=params, builder=builder)

    def with_params(self, **new_params: complex) -> "RationalIntegrand":
        if self.builder is None:
            raise DegenerateInput("integrand has no builder; cannot move in parameter space")
        p = dict(self.params)
        p.update(new_params)
        num, den = self.builder(p)
        return RationalIntegrand(num, den, params=p, builder=self.builder)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, z: complex) -> complex:
        return self.evaluate(z)

    def evaluate(self, z: complex) -> complex:
        z = complex(z)
        q = _polyval(self.den, z)
        scale = sum(abs(c) * abs(z) ** k for k, c in enumerate(self.den))
        if abs(q) <= POLE_REL_TOL * max(scale, 1.0):
            raise PoleHit(f"evaluation at z={z} hits a pole of the integrand")
        return _polyval(self.num, z) / q

    def derivatives(self, z: complex) -> tuple[complex, complex, complex]:
        """R, R', R'' at z via exact quotient-rule forms (no differencing)."""
        z = complex(z)
        P = _polyval(self.num, z)
        Q = _polyval(self.den, z)
        scale = sum(abs(c) * abs(z) ** k for k, c in enumerate(self.den))
        if abs(Q) <= POLE_REL_TOL * max(scale, 1.0):
            raise PoleHit(f"derivative evaluation at z={z} hits a pole")
        P1 = _polyval(_polyder(self.num), z)
        Q1 = _polyval(_polyder(self.den), z)
        P2 = _polyval(_polyder(_polyder(self.num)), z)
        Q2 = _polyval(_polyder(_polyder(self.den)), z)
        R = P / Q
        R1 = (P1 * Q - P * Q1) / Q**2
        R2 = ((P2 * Q - P * Q2) * Q - 2 * (P1 * Q - P * Q1) * Q1) / Q**3
        return R, R1, R2

    @property
    def degree(self) -> int:
        """Asymptotic growth exponent n with R ~ z^n at infinity."""
        return (len(self.num) - 1) - (len(self.den) - 1)

    @property
    def leading_coefficient(self) -> complex:
        return self.num[-1] / self.den[-1]

    def zeros_poles(self):
        cached = getattr(self, "_zp_cache", None)
        if cached is None:
            cached = find_zeros_poles(self)
            object.__setattr__(self, "_zp_cache", cached)
        return cached

    def singular_points(self) -> list[complex]:
        zp = self.zeros_poles()
        return [z for z, _ in zp["zeros"]] + [z for z, _ in zp["poles"]]

    def branch_points(self) -> list[complex]:
        """Points where sqrt(R) branches: odd-order zeros and odd-order poles."""
        zp = self.zeros_poles()
        pts = [z for z, m in zp["zeros"] if m % 2 == 1]
        pts += [z for z, m in zp["poles"] if m % 2 == 1]
        return pts

    def to_dict(self) -> dict:
        d = {
            "R": {
                "num": [[c.real, c.imag] for c in self.num],
                "den": [[c.real, c.imag] for c in self.den],
            }
        }
        if self.params:
            d["params"] = {k: [v.real, v.imag] for k, v in self.params.items()}
        return d


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

def _poly_roots(coeffs: tuple[complex, ...]) -> list[complex]:
    """All roots of an ascending-coefficient polynomial via the companion
    matrix, with one Newton refinement pass per root."""
    c = list(coeffs)
    if len(c) == 1:
        return []
    desc = np.array(list(reversed(c)), dtype=complex)
    roots = list(np.roots(desc))
    der = _polyder(tuple(c))
    polished = []
    for r in roots:
        for _ in range(3):
            p = _polyval(tuple(c), r)
            d = _polyval(der, r)
            if d == 0:
                break
            step = p / d
            if not np.isfinite(step):
                break
            r = r - step
            if abs(step) < 1e-15 * (1 + abs(r)):
                break
        polished.append(complex(r))
    return polished


def _cluster(roots: list[complex], tol: float) -> list[tuple[complex, int]]:
    """Group near-coincident roots; the multiplicity is the cluster size."""
    remaining = list(roots)
    out = []
    while remaining:
        seed = remaining.pop(0)
        cluster = [seed]
        changed = True
        while changed:
            changed = False
            center = sum(cluster) / len(cluster)
            keep = []
            for r in remaining:
                if abs(r - center) < tol * (1 + abs(center)):
                    cluster.append(r)
                    changed = True
                else:
                    keep.append(r)
            remaining = keep
        out.append((sum(cluster) / len(cluster), len(cluster)))
    return out


def find_zeros_poles(R: RationalIntegrand, cancel_tol: float = CANCEL_TOL):
    """Zeros and poles of R with multiplicities, common factors cancelled.

    Roots within ``cancel_tol`` (relative) of each other on opposite sides of
    the fraction are treated as a removable pair.
    """
    if all(c == 0 for c in R.num):
        raise DegenerateInput("numerator is identically zero")
    cluster_tol = 1e-6
    zeros = _cluster(_poly_roots(R.num), cluster_tol)
    poles = _cluster(_poly_roots(R.den), cluster_tol)

    # cancel coincident zero/pole pairs up to the coincidence tolerance
    z_out = []
    p_left = [list(p) for p in poles]
    for z, mz in zeros:
        for p in p_left:
            if p[1] > 0 and abs(z - p[0]) < cancel_tol * (1 + abs(z)):
                k = min(mz, p[1])
                mz -= k
                p[1] -= k
        if mz > 0:
            z_out.append((z, mz))
    p_out = [(p[0], p[1]) for p in p_left if p[1] > 0]

    num_scale = _coeff_scale(R.num)
    for root, m in z_out:
        res = abs(_polyval(R.num, root))
        if res > 1e-10 * num_scale * (1 + abs(root)) ** (len(R.num) - 1):
            raise DegenerateInput(f"root refinement failed at {root} (residual {res:.3g})")
    return {"zeros": z_out, "poles": p_out}


# ---------------------------------------------------------------------------
# adaptive contour quadrature (Gauss-Kronrod 7-15 with bisection)
# ---------------------------------------------------------------------------

_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_K_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


def _gk15(f, a: complex, b: complex):
    h = (b - a) / 2
    c = (a + b) / 2
    vals = np.empty(15, dtype=complex)
    for i, x in enumerate(_GK_NODES):
        v = complex(f(c + h * x))
        if not (np.isfinite(v.real) and np.isfinite(v.imag)):
            raise NonFinite(f"integrand non-finite at {c + h * x}")
        vals[i] = v
    k = h * np.sum(_K_WEIGHTS * vals)
    g = h * np.sum(_G_WEIGHTS * vals[1::2])
    return k, abs(k - g)


def contour_integrate(f: Callable[[complex], complex], path: PathSpec,
                      tol: float = DEFAULT_TOL, max_intervals: int = 20000):
    """Adaptive complex line integral of ``f`` along ``path``.

    Returns ``{"value": complex, "err_estimate": float}``.  The estimate is
    the summed Gauss-Kronrod discrepancy, driven below ``tol`` (scaled by a
    per-interval share) or :class:`MaxRefinement` is raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    total = 0j
    err = 0.0
    for a, b in path.segments():
        stack = [(a, b)]
        count = 0
        seg_val = 0j
        seg_err = 0.0
        while stack:
            x0, x1 = stack.pop()
            count += 1
            if count > max_intervals:
                raise MaxRefinement("quadrature refinement budget exhausted")
            val, e = _gk15(f, x0, x1)
            local_share = tol * max(abs(x1 - x0) / abs(b - a), 1e-12) * 0.5
            if e <= local_share or abs(x1 - x0) < 1e-14 * abs(b - a):
                seg_val += val
                seg_err += e
            else:
                xm = (x0 + x1) / 2
                stack.append((x0, xm))
                stack.append((xm, x1))
        total += seg_val
        err += seg_err
    return {"value": total, "err_estimate": err}
