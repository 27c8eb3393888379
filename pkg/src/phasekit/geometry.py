"""Stokes geometry: line tracing, wedges, dominance, diagram emission.

A Stokes (anti-Stokes) line is an integral curve of the direction field
with q dz purely imaginary (purely real), launched from each zero and each
first-order pole of R.  A zero of order m emits m+2 lines of each kind,
interleaved in angle; a first-order pole emits one of each.  Lines advance
by fixed-step 4th-order arc-length integration with the step bounded by the
distance to the nearest singularity, and terminate at the truncation radius
or on capture by another singularity.

For polynomial growth R ~ a z^n there are n+2 asymptotic directions of each
kind; the sectors between consecutive Stokes asymptotes are the anti-Stokes
wedges and vice versa.  Wedge bookkeeping here indexes the n+2 Stokes
domains at infinity by their anti-Stokes-ray bisectors.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cplane import PathSpec, RationalIntegrand
from .errors import AmbiguousDominance, IOFailure, TraceStall
from .phase import BranchSheet, PhaseValue

_DEFAULT_STEP_FRACTION = 0.005


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TracedLine:
    kind: str                 # "stokes" | "antistokes"
    source: complex           # emanation point
    launch_angle: float
    points: np.ndarray        # complex polyline
    terminated: str           # "radius" | "singularity" | "budget"
    accumulated_defect: float # |Re w| (stokes) or |Im w| (antistokes) along the line

    @property
    def terminal_angle(self) -> float:
        return math.atan2(self.points[-1].imag, self.points[-1].real) % (2 * math.pi)


@dataclass(frozen=True)
class Wedge:
    index: int
    bisector_angle: float      # anti-Stokes ray direction at infinity
    bounds: tuple[float, float]  # bounding Stokes asymptote directions


@dataclass(frozen=True)
class StokesDiagram:
    integrand: RationalIntegrand
    zeros: tuple[tuple[complex, int], ...]
    poles: tuple[tuple[complex, int], ...]
    stokes_lines: tuple[TracedLine, ...]
    antistokes_lines: tuple[TracedLine, ...]
    wedges: tuple[Wedge, ...]
    cuts: tuple[PathSpec, ...] = ()
    truncation_radius: float = 0.0

    @property
    def singularities(self) -> list[complex]:
        return [z for z, _ in self.zeros] + [z for z, _ in self.poles]


@dataclass(frozen=True)
class EffectiveLine:
    domain: int                # wedge index
    label: str                 # constant name, e.g. "s_3/2"
    points: np.ndarray         # polyline from basepoint into the domain
    basepoint: complex


@dataclass(frozen=True)
class EffectiveStokesDiagram:
    """A diagram with one effective line per Stokes domain.

    Not unique: the effective lines, the continuation path, and the
    basepoints are presentation choices; the only structural check applied
    is that effective lines do not cross each other or the continuation
    path except where declared.
    """

    base: StokesDiagram
    effective_lines: tuple[EffectiveLine, ...]
    continuation_path: PathSpec | None = None
    phase_annotations: tuple[tuple[complex, str], ...] = ()

    def crossings(self) -> list[str]:
        """Pairs of effective lines (or line/path) that intersect."""
        out = []
        segs = []
        for el in self.effective_lines:
            for a, b in zip(el.points[:-1], el.points[1:]):
                segs.append((el.label, complex(a), complex(b)))
        if self.continuation_path is not None:
            for a, b in self.continuation_path.segments():
                segs.append(("continuation", complex(a), complex(b)))
        for i in range(len(segs)):
            for j in range(i + 1, len(segs)):
                l1, a1, b1 = segs[i]
                l2, a2, b2 = segs[j]
                if l1 == l2:
                    continue
                if _segments_cross(a1, b1, a2, b2):
                    out.append(f"{l1} crosses {l2}")
        return sorted(set(out))


def _segments_cross(a1, b1, a2, b2, tol=1e-12):
    def orient(p, q, r):
        v = (q - p).conjugate() * (r - p)
        return v.imag

    if max(abs(a1 - a2), abs(a1 - b2), abs(b1 - a2), abs(b1 - b2)) < tol:
        return False
    # shared endpoints (fan from one basepoint) do not count as crossings
    if min(abs(a1 - a2), abs(a1 - b2), abs(b1 - a2), abs(b1 - b2)) < tol:
        return False
    d1 = orient(a2, b2, a1)
    d2 = orient(a2, b2, b1)
    d3 = orient(a1, b1, a2)
    d4 = orient(a1, b1, b2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


# ---------------------------------------------------------------------------
# launch directions and wedges
# ---------------------------------------------------------------------------

def local_model(R: RationalIntegrand, z0: complex, order: int, is_pole: bool) -> complex:
    """Leading coefficient a with R ~ a (z - z0)^k, k = order (zero) or
    -order (pole)."""
    h = 1e-4 * (1 + abs(z0))
    vals = []
    for ang in (0.1, 1.7, 3.4):
        z = z0 + h * cmath.exp(1j * ang)
        k = order if not is_pole else -order
        vals.append(R.evaluate(z) / (z - z0) ** k)
    return sum(vals) / len(vals)


def launch_angles(R: RationalIntegrand, z0: complex, order: int, is_pole: bool,
                  kind: str) -> list[float]:
    """Admissible line directions at a singular point.

    With R ~ a (z-z0)^k the phase integral grows like (z-z0)^((k+2)/2),
    so Stokes directions solve arg(a)/2 + (k+2)/2 * t = pi/2 (mod pi) and
    anti-Stokes directions the same with right side 0 (mod pi).  A zero of
    order m gives m+2 of each; a first-order pole gives one.
    """
    k = order if not is_pole else -order
    if k + 2 <= 0:
        return []  # log/spiral asymptotics at higher-order poles: not launched
    a = local_model(R, z0, order, is_pole)
    base = (math.pi / 2 if kind == "stokes" else 0.0)
    count = k + 2
    return sorted(((base + j * math.pi - cmath.phase(a) / 2) * 2.0 / (k + 2)) % (2 * math.pi)
                  for j in range(count))


def asymptotic_directions(R: RationalIntegrand, kind: str) -> list[float]:
    """Directions of (anti-)Stokes rays at infinity for R ~ a z^n, n >= 1."""
    n = R.degree
    if n < 1:
        return []
    a = R.leading_coefficient
    base = math.pi / 2 if kind == "stokes" else 0.0
    return sorted(((base + j * math.pi - cmath.phase(a) / 2) * 2.0 / (n + 2)) % (2 * math.pi)
                  for j in range(n + 2))


def wedges_at_infinity(R: RationalIntegrand) -> list[Wedge]:
    """The n+2 Stokes domains at infinity, one per anti-Stokes bisector."""
    stokes_dirs = asymptotic_directions(R, "stokes")
    anti_dirs = asymptotic_directions(R, "antistokes")
    out = []
    for i, lo in enumerate(stokes_dirs):
        hi = stokes_dirs[(i + 1) % len(stokes_dirs)]
        span = (hi - lo) % (2 * math.pi)
        inside = [a for a in anti_dirs if 0 < (a - lo) % (2 * math.pi) < span]
        bis = inside[0] if inside else (lo + span / 2) % (2 * math.pi)
        out.append(Wedge(index=i, bisector_angle=bis, bounds=(lo, hi)))
    return out


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------

def _direction(q: complex, kind: str) -> complex:
    # q * u purely imaginary for a Stokes line, purely real for anti-Stokes
    u = 1j * q.conjugate() if kind == "stokes" else q.conjugate()
    m = abs(u)
    if m == 0:
        raise TraceStall("direction field vanished away from a singularity")
    return u / m


def trace_lines(R: RationalIntegrand, kind: str, radius: float | None = None,
                step_fraction: float = _DEFAULT_STEP_FRACTION,
                max_steps: int = 200000) -> list[TracedLine]:
    """All (anti-)Stokes lines of R, traced from every zero and every
    first-order pole."""
    if kind not in ("stokes", "antistokes"):
        raise ValueError("kind must be 'stokes' or 'antistokes'")
    zp = R.zeros_poles()
    sing = [z for z, _ in zp["zeros"]] + [z for z, _ in zp["poles"]]
    if not sing:
        return []
    if radius is None:
        radius = truncation_radius(R)
    scale = max(radius / 10.0, 1.0)
    out = []
    for z0, order, is_pole in [(z, m, False) for z, m in zp["zeros"]] + \
                              [(z, m, True) for z, m in zp["poles"]]:
        for ang in launch_angles(R, z0, order, is_pole, kind):
            out.append(_trace_one(R, sing, z0, ang, kind, radius,
                                  step_fraction * scale, max_steps))
    return out


def _trace_one(R, sing, z0, angle, kind, radius, base_step, max_steps):
    capture = 1e-2 * max(1.0, min(abs(z0 - s) for s in sing if s != z0) if len(sing) > 1 else 1.0)
    r0 = min(1e-3 * max(1.0, radius), 0.3 * capture) + 1e-9
    z = z0 + r0 * cmath.exp(1j * angle)
    u_prev = cmath.exp(1j * angle)
    q = cmath.sqrt(R.evaluate(z))
    # align the root so the launch direction is admissible and outward
    u = _direction(q, kind)
    if abs(u - u_prev) > abs(u + u_prev):
        u, q = -u, -q
    pts = [z0, z]
    omega_defect = 0j
    terminated = "budget"
    for _ in range(max_steps):
        d_near = min(abs(z - s) for s in sing)
        h = min(base_step, 0.4 * d_near + 1e-12)

        def f(zz, qq_ref):
            qq = cmath.sqrt(R.evaluate(zz))
            if abs(qq - qq_ref) > abs(qq + qq_ref):
                qq = -qq
            return _direction(qq, kind), qq

        try:
            k1, q1 = f(z, q)
            k2, q2 = f(z + 0.5 * h * k1, q1)
            k3, _ = f(z + 0.5 * h * k2, q2)
            k4, _ = f(z + h * k3, q2)
        except TraceStall:
            terminated = "budget"
            break
        dz = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        z_new = z + dz
        q_new = cmath.sqrt(R.evaluate(z_new))
        if abs(q_new - q) > abs(q_new + q):
            q_new = -q_new
        # Simpson accumulation of the defect integral along the step
        q_mid = cmath.sqrt(R.evaluate(z + 0.5 * dz))
        if abs(q_mid - q) > abs(q_mid + q):
            q_mid = -q_mid
        omega_defect += (q + 4 * q_mid + q_new) / 6.0 * dz
        z, q = z_new, q_new
        pts.append(z)
        if abs(z) >= radius:
            terminated = "radius"
            break
        hit = [s for s in sing if abs(z - s) < capture and s != z0]
        if hit or (abs(z - z0) < 0.5 * capture and len(pts) > 10):
            terminated = "singularity"
            break
    defect = abs(omega_defect.real) if kind == "stokes" else abs(omega_defect.imag)
    return TracedLine(kind=kind, source=z0, launch_angle=angle,
                      points=np.asarray(pts, dtype=complex),
                      terminated=terminated, accumulated_defect=float(defect))


def truncation_radius(R: RationalIntegrand) -> float:
    sing = R.singular_points()
    if not sing:
        return 5.0
    return max(5.0, 3.0 * max(abs(s) for s in sing))


def diagram(R: RationalIntegrand, radius: float | None = None,
            cuts: tuple[PathSpec, ...] = (), **trace_opts) -> StokesDiagram:
    """Trace both families and assemble the full diagram."""
    zp = R.zeros_poles()
    if radius is None:
        radius = truncation_radius(R)
    has_sing = bool(zp["zeros"] or zp["poles"])
    return StokesDiagram(
        integrand=R,
        zeros=tuple(zp["zeros"]),
        poles=tuple(zp["poles"]),
        stokes_lines=tuple(trace_lines(R, "stokes", radius, **trace_opts)) if has_sing else (),
        antistokes_lines=tuple(trace_lines(R, "antistokes", radius, **trace_opts)) if has_sing else (),
        wedges=tuple(wedges_at_infinity(R)) if has_sing else (),
        cuts=cuts,
        truncation_radius=radius,
    )


def effective_diagram(base: StokesDiagram, basepoints: dict, labels: dict | None = None,
                      continuation_path: PathSpec | None = None,
                      phase_annotations=()) -> EffectiveStokesDiagram:
    """One effective line per Stokes domain.

    ``basepoints`` maps wedge index -> basepoint; the default attachment
    runs from the basepoint straight to the wedge bisector at the
    truncation radius.  Override by passing a full polyline (sequence of
    points) as the value instead of a single point.
    """
    lines = []
    labels = labels or {}
    for w in base.wedges:
        if w.index not in basepoints:
            continue
        spec = basepoints[w.index]
        if isinstance(spec, (list, tuple, np.ndarray)):
            pts = np.asarray([complex(p) for p in spec], dtype=complex)
            bp = complex(pts[0])
        else:
            bp = complex(spec)
            tip = base.truncation_radius * cmath.exp(1j * w.bisector_angle)
            pts = np.asarray([bp, tip], dtype=complex)
        lines.append(EffectiveLine(domain=w.index,
                                   label=labels.get(w.index, f"s[{w.index}]"),
                                   points=pts, basepoint=bp))
    return EffectiveStokesDiagram(base=base, effective_lines=tuple(lines),
                                  continuation_path=continuation_path,
                                  phase_annotations=tuple(phase_annotations))


# ---------------------------------------------------------------------------
# dominance
# ---------------------------------------------------------------------------

def classify_dominance(domain_probe: complex, sheet: BranchSheet,
                       omega_at_probe: PhaseValue, growth_tol: float = 1e-9) -> str:
    """Which base solution grows along the Stokes direction pointing away
    from the phase reference point: "plus" or "minus".

    The decision is a property of the Stokes domain containing the probe;
    probes too close to an anti-Stokes line (no growth to measure) raise
    :class:`AmbiguousDominance`.
    """
    z = complex(domain_probe)
    q = sheet.q_at(z) if abs(z - sheet.anchor) > 1e-12 else sheet.anchor_value
    away_from = complex(omega_at_probe.basepoint)
    u = _direction(q, "stokes")
    if ((z - away_from).conjugate() * u).real < 0:
        u = -u
    rate = (1j * q * u).real
    if abs(rate) <= growth_tol * max(abs(q), 1.0):
        raise AmbiguousDominance(
            "no exponential growth at the probe; it sits on or near an anti-Stokes line"
        )
    return "plus" if rate > 0 else "minus"


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _c2(z: complex) -> list[float]:
    return [z.real, z.imag]


def diagram_to_dict(d: StokesDiagram | EffectiveStokesDiagram) -> dict:
    if isinstance(d, EffectiveStokesDiagram):
        base = diagram_to_dict(d.base)
        base["effective"] = [
            {"domain": el.domain, "label": el.label,
             "basepoint": _c2(el.basepoint),
             "points": [_c2(complex(p)) for p in el.points]}
            for el in d.effective_lines
        ]
        if d.continuation_path is not None:
            base["continuation_path"] = d.continuation_path.to_dict()
        base["phase_annotations"] = [
            {"at": _c2(complex(z)), "text": t} for z, t in d.phase_annotations
        ]
        return base
    return {
        "singularities": (
            [{"point": _c2(z), "order": m, "type": "zero"} for z, m in d.zeros]
            + [{"point": _c2(z), "order": m, "type": "pole"} for z, m in d.poles]
        ),
        "stokes": [[_c2(complex(p)) for p in ln.points] for ln in d.stokes_lines],
        "antistokes": [[_c2(complex(p)) for p in ln.points] for ln in d.antistokes_lines],
        "wedges": [{"index": w.index, "bisector": w.bisector_angle,
                    "bounds": list(w.bounds)} for w in d.wedges],
        "cuts": [c.to_dict() for c in d.cuts],
        "truncation_radius": d.truncation_radius,
    }


def _svg_poly(points, cls, extra=""):
    pts = " ".join(f"{p.real:.5f},{-p.imag:.5f}" for p in points)
    return f'<polyline class="{cls}" points="{pts}" {extra}/>'


def diagram_to_svg(d: StokesDiagram | EffectiveStokesDiagram, size: int = 640) -> str:
    base = d.base if isinstance(d, EffectiveStokesDiagram) else d
    r = base.truncation_radius * 1.05 or 5.0
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{-r:.4f} {-r:.4f} {2 * r:.4f} {2 * r:.4f}">'
        "<style>"
        ".antistokes{fill:none;stroke:#1f4e8c;stroke-width:__W__}"
        ".stokes{fill:none;stroke:#c23b22;stroke-width:__W__;stroke-dasharray:__D__}"
        ".cut{fill:none;stroke:#555;stroke-width:__W__;stroke-dasharray:__C__}"
        ".effective{fill:none;stroke:#000;stroke-width:__B__}"
        ".gamma{fill:none;stroke:#0a7d33;stroke-width:__B__}"
        ".zero{fill:#000}.pole{fill:#c28f00}.basepoint{fill:#0a7d33}"
        "text{font-family:sans-serif}"
        "</style>"
    ).replace("__W__", f"{r / 320:.4f}").replace("__D__", f"{r / 60:.4f} {r / 90:.4f}") \
     .replace("__C__", f"{r / 150:.4f} {r / 150:.4f}").replace("__B__", f"{r / 160:.4f}")
    parts = [head]
    for ln in base.antistokes_lines:
        parts.append(_svg_poly(ln.points, "antistokes"))
    for ln in base.stokes_lines:
        parts.append(_svg_poly(ln.points, "stokes"))
    for cut in base.cuts:
        parts.append(_svg_poly([complex(w) for w in cut.vertices], "cut"))
    for z, m in base.zeros:
        parts.append(f'<circle class="zero" cx="{z.real:.5f}" cy="{-z.imag:.5f}" r="{r / 80:.5f}"/>')
    for z, m in base.poles:
        parts.append(_star(z, r / 55))
    if isinstance(d, EffectiveStokesDiagram):
        for el in d.effective_lines:
            parts.append(_svg_poly(el.points, "effective"))
            parts.append(f'<circle class="basepoint" cx="{el.basepoint.real:.5f}" '
                         f'cy="{-el.basepoint.imag:.5f}" r="{r / 110:.5f}"/>')
            tip = complex(el.points[-1])
            parts.append(f'<text x="{tip.real:.4f}" y="{-tip.imag:.4f}" '
                         f'font-size="{r / 18:.4f}">{el.label}</text>')
        if d.continuation_path is not None:
            pts = [complex(w) for w in d.continuation_path.vertices]
            parts.append(_svg_poly(pts, "gamma"))
            parts.append(_arrowhead(pts[-2], pts[-1], r / 45))
        for z, text in d.phase_annotations:
            z = complex(z)
            parts.append(f'<text x="{z.real:.4f}" y="{-z.imag:.4f}" '
                         f'font-size="{r / 20:.4f}">{text}</text>')
    parts.append("</svg>")
    return "".join(parts)


def _star(z: complex, s: float) -> str:
    pts = []
    for k in range(10):
        rr = s if k % 2 == 0 else 0.4 * s
        ang = math.pi / 2 + k * math.pi / 5
        pts.append(complex(z.real + rr * math.cos(ang), -z.imag + rr * math.sin(ang)))
    body = " ".join(f"{p.real:.5f},{p.imag:.5f}" for p in pts)
    return f'<polygon class="pole" points="{body}"/>'


def _arrowhead(a: complex, b: complex, s: float) -> str:
    u = (b - a) / abs(b - a)
    left = b - s * u * cmath.exp(0.45j)
    right = b - s * u * cmath.exp(-0.45j)
    body = f"{b.real:.5f},{-b.imag:.5f} {left.real:.5f},{-left.imag:.5f} {right.real:.5f},{-right.imag:.5f}"
    return f'<polygon class="gamma" points="{body}"/>'


def emit(d: StokesDiagram | EffectiveStokesDiagram, format: str, out=None):
    """Serialize a diagram to JSON (lossless dump) or SVG (static figure).

    ``out`` may be a path or a writable file object; when omitted the text
    is returned.
    """
    if format == "json":
        text = json.dumps(diagram_to_dict(d), indent=2, sort_keys=True)
    elif format == "svg":
        text = diagram_to_svg(d)
    else:
        raise ValueError("format must be 'json' or 'svg'")
    if out is None:
        return text
    try:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w") as fh:
                fh.write(text)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    return text
