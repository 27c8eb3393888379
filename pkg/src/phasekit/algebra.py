"""Operator calculus for limiting connection matrices.

Generators (2x2 unless noted):

    S[s]   = [[1, 0], [s, 1]]          Stokes operator, one domain crossing
    S^T[s] = [[1, s], [0, 1]]          same, opposite dominance
    W[w]   = diag(e^{iw}, e^{-iw})     reconnection (basepoint change);
                                       diag(e^{iw_1} ... e^{iw_n}) for dim n
    C      = [[0, -i], [-i, 0]]        cut crossing at a first-order zero,
                                       counterclockwise; integer powers for
                                       higher-order branch points
    P      = permutation matrix        integrand sign change / base reorder
    L      = diag(a_1 ... a_n)         base-function rescaling (dim n)

Words multiply right-to-left: the rightmost factor acts first on a
coefficient vector, so ``evaluate_word([A, B, C])`` is the matrix product
A @ B @ C.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MixedHandedness, UnresolvedPhase

_DET_TOL = 1e-10


# ---------------------------------------------------------------------------
# matrices and vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectionMatrix:
    """An n x n complex connection matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, ConnectionMatrix):
            if other.dim != self.dim:
                raise DimensionMismatch("matrix dimensions differ")
            return ConnectionMatrix(self.entries @ other.entries)
        return self.entries @ np.asarray(other)

    def apply(self, psi: "PsiVector") -> "PsiVector":
        if psi.dim != self.dim:
            raise DimensionMismatch("vector dimension differs from matrix")
        return PsiVector(tuple(self.entries @ np.array(psi.coefficients)))

    def inverse(self) -> "ConnectionMatrix":
        return ConnectionMatrix(np.linalg.inv(self.entries))

    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def conjugated(self) -> "ConnectionMatrix":
        return ConnectionMatrix(np.conj(self.entries))

    def max_diff(self, other) -> float:
        o = other.entries if isinstance(other, ConnectionMatrix) else np.asarray(other)
        return float(np.max(np.abs(self.entries - o)))

    def rel_diff(self, other) -> float:
        """Max entry difference scaled by the larger entry magnitude."""
        o = other.entries if isinstance(other, ConnectionMatrix) else np.asarray(other)
        scale = max(1.0, float(np.max(np.abs(self.entries))), float(np.max(np.abs(o))))
        return float(np.max(np.abs(self.entries - o))) / scale

    @classmethod
    def identity(cls, dim: int = 2) -> "ConnectionMatrix":
        return cls(np.eye(dim, dtype=complex))


@dataclass(frozen=True)
class PsiVector:
    """Coefficient vector (c_+, c_-) of the general solution (dim 2), or the
    n coefficients of a system basis."""

    coefficients: tuple[complex, ...]

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coefficients)
        if not c or all(x == 0 for x in c):
            raise ValueError("coefficient vector must be nonzero")
        object.__setattr__(self, "coefficients", c)

    @property
    def dim(self) -> int:
        return len(self.coefficients)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _stokes(s: complex, transpose: bool) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    if transpose:
        m[0, 1] = s
    else:
        m[1, 0] = s
    return m


def make_generator(kind: str, payload=None, dim: int = 2) -> ConnectionMatrix:
    """Explicit matrix for a generator.

    kind: "S", "ST", "W", "C", "P", "L".  Payload by kind: the Stokes
    constant for S/ST; the phase w (or a length-n sequence of phases) for W;
    an integer power for C; a permutation sequence for P; diagonal entries
    for L.  S, ST and C exist only at dim 2.
    """
    kind = kind.upper()
    if kind in ("S", "ST"):
        if dim != 2:
            raise DimensionMismatch("Stokes operators are defined for dim 2 only")
        return ConnectionMatrix(_stokes(complex(payload), kind == "ST"))
    if kind == "W":
        if isinstance(payload, (int, float, complex)) or np.isscalar(payload):
            if dim != 2:
                raise DimensionMismatch("a scalar W phase is a dim-2 shorthand; pass a phase vector")
            w = complex(payload)
            return ConnectionMatrix(np.diag([cmath.exp(1j * w), cmath.exp(-1j * w)]))
        phases = [complex(p) for p in payload]
        if len(phases) != dim:
            raise DimensionMismatch(f"W needs {dim} phases, got {len(phases)}")
        return ConnectionMatrix(np.diag([cmath.exp(1j * w) for w in phases]))
    if kind == "C":
        if dim != 2:
            raise DimensionMismatch("the cut operator is defined for dim 2 only")
        k = 1 if payload is None else int(payload)
        c = np.array([[0, -1j], [-1j, 0]], dtype=complex)
        return ConnectionMatrix(np.linalg.matrix_power(c, k % 4))  # C^4 = 1
    if kind == "P":
        perm = tuple(int(i) for i in (payload if payload is not None else range(dim)[::-1]))
        if sorted(perm) != list(range(dim)):
            raise DimensionMismatch(f"not a permutation of 0..{dim - 1}: {perm}")
        m = np.zeros((dim, dim), dtype=complex)
        for i, j in enumerate(perm):
            m[i, j] = 1.0
        return ConnectionMatrix(m)
    if kind == "L":
        diag = [complex(a) for a in payload]
        if len(diag) != dim:
            raise DimensionMismatch(f"L needs {dim} diagonal entries, got {len(diag)}")
        if any(a == 0 for a in diag):
            raise ValueError("rescaling entries must be nonzero")
        return ConnectionMatrix(np.diag(diag))
    raise ValueError(f"unknown generator kind {kind!r}")


def check_unimodular(M: ConnectionMatrix, tol: float = _DET_TOL) -> bool:
    return abs(abs(M.det()) - 1.0) < tol


# ---------------------------------------------------------------------------
# symbolic words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    """One symbolic generator in a word.

    ``value`` holds the numeric payload; a W factor whose phase is not yet
    integrated carries value=None plus a descriptive label and cannot be
    evaluated.  S/ST factors may carry a ``name`` for reporting.
    """

    kind: str
    value: object = None
    name: str | None = None

    def resolved(self) -> bool:
        return not (self.kind.upper() in ("S", "ST", "W") and self.value is None)

    def label(self) -> str:
        k = self.kind.upper()
        if k in ("S", "ST"):
            body = self.name if self.name is not None else _fmt_c(self.value)
            return ("S^T" if k == "ST" else "S") + f"[{body}]"
        if k == "W":
            return f"W[{self.name if self.value is None else _fmt_c(self.value)}]"
        if k == "C":
            p = 1 if self.value is None else int(self.value)
            return "C" if p == 1 else f"C^{p}"
        return self.kind.upper()


def _fmt_c(v) -> str:
    if v is None:
        return "?"
    v = complex(v)
    if v.imag == 0:
        return f"{v.real:g}"
    return f"{v.real:g}{v.imag:+g}i"


@dataclass(frozen=True)
class OperatorWord:
    """Ordered sequence of generator factors (leftmost applied last)."""

    factors: tuple[Factor, ...]
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def label(self) -> str:
        return " ".join(f.label() for f in self.factors) if self.factors else "1"

    def to_json(self) -> list:
        out = []
        for f in self.factors:
            k = f.kind.upper()
            d: dict = {"op": "S^T" if k == "ST" else k}
            if k in ("S", "ST"):
                if f.name is not None:
                    d["s"] = f.name
                if f.value is not None:
                    v = complex(f.value)
                    d["value"] = [v.real, v.imag]
            elif k == "W":
                if f.value is None:
                    d["omega"] = None
                    if f.name:
                        d["label"] = f.name
                else:
                    v = complex(f.value)
                    d["omega"] = [v.real, v.imag]
            elif k == "C":
                d["power"] = 1 if f.value is None else int(f.value)
            elif k == "P":
                d["perm"] = list(f.value) if f.value is not None else None
            elif k == "L":
                d["diag"] = [[complex(a).real, complex(a).imag] for a in f.value]
            out.append(d)
        return out

    @classmethod
    def from_json(cls, items: Sequence[Mapping], dim: int = 2) -> "OperatorWord":
        factors = []
        for d in items:
            op = str(d["op"]).upper().replace("^T", "T").replace("T", "T")
            op = {"S": "S", "ST": "ST", "W": "W", "C": "C", "P": "P", "L": "L"}[op]
            if op in ("S", "ST"):
                val = d.get("value")
                value = complex(val[0], val[1]) if val is not None else None
                factors.append(Factor(op, value, d.get("s")))
            elif op == "W":
                om = d.get("omega")
                value = complex(om[0], om[1]) if om is not None else None
                factors.append(Factor(op, value, d.get("label")))
            elif op == "C":
                factors.append(Factor("C", d.get("power", 1)))
            elif op == "P":
                factors.append(Factor("P", tuple(d["perm"]) if d.get("perm") else None))
            elif op == "L":
                factors.append(Factor("L", tuple(complex(a, b) for a, b in d["diag"])))
        return cls(tuple(factors), dim=dim)


def S(s: complex, name: str | None = None) -> Factor:
    return Factor("S", complex(s), name)


def ST(s: complex, name: str | None = None) -> Factor:
    return Factor("ST", complex(s), name)


def W(omega: complex, name: str | None = None) -> Factor:
    return Factor("W", None if omega is None else complex(omega), name)


def Cpow(power: int = 1) -> Factor:
    return Factor("C", int(power))


def evaluate_word(word: OperatorWord) -> ConnectionMatrix:
    """Matrix product of the word's factors in application order."""
    m = ConnectionMatrix.identity(word.dim)
    for f in word.factors:
        if not f.resolved():
            raise UnresolvedPhase(f"factor {f.label()} has no numeric payload")
        m = m @ make_generator(f.kind, f.value, dim=word.dim)
    return m


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def commute_SW(s: complex, omega: complex, transpose: bool = False) -> complex:
    """The constant s'' with S[s'] W[w] = W[w] S[s''] (same for S^T).

    s'' = s' e^{2iw} for S and s' e^{-2iw} for S^T.
    """
    s = complex(s)
    omega = complex(omega)
    return s * cmath.exp((-2j if transpose else 2j) * omega)


def conjugate_basepoint(F: ConnectionMatrix, omega_shift: complex) -> ConnectionMatrix:
    """W[w] F W[-w]: the same connection matrix written for the basepoint
    displaced by a phase integral w (dim-n uses the same scalar phase on the
    first/second exponents only at dim 2; pass a phase vector otherwise)."""
    if F.dim == 2:
        w = make_generator("W", omega_shift, dim=2)
    else:
        w = make_generator("W", omega_shift, dim=F.dim)
        omega_shift = [complex(x) for x in omega_shift]
    wi = w.inverse()
    return w @ F @ wi


def conjugate_sign_change(F: ConnectionMatrix) -> ConnectionMatrix:
    """P F P: the same continuation written for the opposite integrand sign."""
    if F.dim != 2:
        raise DimensionMismatch("sign-change conjugation is a dim-2 operation")
    p = make_generator("P", (1, 0), dim=2)
    return p @ F @ p


def reduce_to_canonical(word: OperatorWord, order: str = "SW") -> OperatorWord:
    """Collapse a word of same-handed Stokes factors and reconnections to the
    two-factor form S[s_l] W[w] (order="SW") or W[w] S[s_r] (order="WS").

    Uses the group laws S[a]S[b] = S[a+b], W[a]W[b] = W[a+b] and the
    commutation rule from :func:`commute_SW`.  C/P/L factors must be moved
    out by the caller before reduction.
    """
    if word.dim != 2:
        raise DimensionMismatch("canonical reduction is defined for dim 2 words")
    kinds = {f.kind.upper() for f in word.factors}
    if kinds & {"C", "P", "L"}:
        raise MixedHandedness("move C/P/L factors out of the word before reduction")
    if "S" in kinds and "ST" in kinds:
        raise MixedHandedness("word mixes S and S^T factors")
    transpose = "ST" in kinds
    kind = "ST" if transpose else "S"

    s_acc = 0j
    w_acc = 0j
    # maintain the invariant  product-so-far = S[s_acc] W[w_acc]
    for f in word.factors:
        if not f.resolved():
            raise UnresolvedPhase(f"factor {f.label()} has no numeric payload")
        k = f.kind.upper()
        if k == "W":
            w_acc += complex(f.value)
        else:
            s_acc += commute_SW(complex(f.value), -w_acc, transpose=transpose)
    if order == "SW":
        return OperatorWord((Factor(kind, s_acc), Factor("W", w_acc)), dim=2)
    if order == "WS":
        s_r = commute_SW(s_acc, w_acc, transpose=transpose)
        return OperatorWord((Factor("W", w_acc), Factor(kind, s_r)), dim=2)
    raise ValueError("order must be 'SW' or 'WS'")
