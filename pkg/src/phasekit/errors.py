"""Exception types shared across the package.

Every error raised on a numerical contract violation derives from
:class:`PhasekitError`, so callers can distinguish "the computation refused"
from ordinary Python misuse (which raises the builtin types).
"""


class PhasekitError(Exception):
    """Base class for all phasekit contract violations."""


# --- complex-plane substrate ------------------------------------------------

class PoleHit(PhasekitError):
    """Evaluation requested at (or within machine tolerance of) a pole."""


class DegenerateInput(PhasekitError):
    """Input is structurally degenerate, e.g. an identically zero numerator."""


class MaxRefinement(PhasekitError):
    """Adaptive quadrature could not reach the tolerance within its budget."""


class NonFinite(PhasekitError):
    """An integrand evaluated to nan/inf on the integration path."""


# --- branch tracking and phase integrals -------------------------------------

class BranchAmbiguity(PhasekitError):
    """A path passes too close to a branch point for sign tracking to be safe."""


class SingularPoint(PhasekitError):
    """The validity parameter is singular at the requested point."""


class ValidityViolation(PhasekitError):
    """|epsilon| exceeds the configured matching threshold at a match point."""


# --- operator algebra ---------------------------------------------------------

class DimensionMismatch(PhasekitError):
    """Operator factors of incompatible dimension, or a 2x2-only generator
    requested at a different dimension."""


class UnresolvedPhase(PhasekitError):
    """A reconnection factor still references an unintegrated path."""


class MixedHandedness(PhasekitError):
    """Canonical reduction requires all Stokes factors of one handedness."""


# --- Stokes geometry -----------------------------------------------------------

class TraceStall(PhasekitError):
    """The direction field collapsed away from any singularity."""


class AmbiguousDominance(PhasekitError):
    """Growth rate below tolerance; the probe sits too close to an
    oscillatory boundary line."""


class IOFailure(PhasekitError):
    """Could not write a requested artifact."""


# --- exact connection matrices ---------------------------------------------------

class StiffnessFailure(PhasekitError):
    """The ODE step control underflowed (path too close to a singularity or
    numerically ill-conditioned; route the path near the turning points)."""


class WrongForm(PhasekitError):
    """A measured matrix does not match the requested limiting pattern."""


# --- symmetry machinery -------------------------------------------------------------

class UnsupportedAction(PhasekitError):
    """A transformation outside the supported class (non-affine variable map,
    non-constant solution multiplier, or a parameter map with no integrand
    family to rebuild from)."""


class PathClash(PhasekitError):
    """The transformed curve violates clearance against the transformed
    problem's singularities."""


class HomotopyAmbiguous(PhasekitError):
    """The basepoint track crosses a singularity during the deformation;
    the caller must supply an explicit detour."""


class HandednessMismatch(PhasekitError):
    """The two overlapped domains require different limiting forms, so no
    scalar constant relation exists."""


class NotApplicable(PhasekitError):
    """The requested check does not apply to the given relation."""


# --- Weber case study -----------------------------------------------------------------

class PoleOfGamma(PhasekitError):
    """Gamma evaluated at a nonpositive integer."""


class BranchSeam(PhasekitError):
    """A power falls on the principal branch seam and no sheet index was
    supplied to disambiguate."""
