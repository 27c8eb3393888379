"""phasekit: phase-integral analysis of y'' + R(z) y = 0 in the complex plane.

The package traces Stokes geometry, evaluates exact and limiting connection
matrices by integrating the equation along complex paths, manipulates the
operator calculus of the limiting forms (Stokes, reconnection, cut-crossing,
permutation and scaling operators), verifies symmetry relations between
connection matrices, and reproduces the full above-barrier scattering
analysis for the Weber equation y'' + (z^2 - delta^2) y = 0.
"""

from .cplane import (
    PathSpec,
    RationalIntegrand,
    contour_integrate,
    find_zeros_poles,
)
from .phase import BranchSheet, PhaseValue, basis_values, epsilon, phase_integral
from .algebra import (
    ConnectionMatrix,
    OperatorWord,
    PsiVector,
    commute_SW,
    conjugate_basepoint,
    conjugate_sign_change,
    evaluate_word,
    make_generator,
    reduce_to_canonical,
)
from .geometry import StokesDiagram, EffectiveStokesDiagram, classify_dominance, emit, trace_lines
from .oracle import ExactFResult, exact_fmatrix, extract_stokes_constant, monodromy
from .symmetry import (
    StokesConstantRelation,
    SymmetryTransform,
    check_is_symmetry,
    derive_constant_relation,
    purely_imaginary_check,
    verify_fmatrix_relation,
)
from . import weber

__all__ = [
    "PathSpec", "RationalIntegrand", "contour_integrate", "find_zeros_poles",
    "BranchSheet", "PhaseValue", "basis_values", "epsilon", "phase_integral",
    "ConnectionMatrix", "OperatorWord", "PsiVector", "commute_SW",
    "conjugate_basepoint", "conjugate_sign_change", "evaluate_word",
    "make_generator", "reduce_to_canonical",
    "StokesDiagram", "EffectiveStokesDiagram", "classify_dominance", "emit", "trace_lines",
    "ExactFResult", "exact_fmatrix", "extract_stokes_constant", "monodromy",
    "StokesConstantRelation", "SymmetryTransform", "check_is_symmetry",
    "derive_constant_relation", "purely_imaginary_check", "verify_fmatrix_relation",
    "weber",
]

__version__ = "0.1.0"
