"""mesoscope: numerics for mesoscopic quantum nonlinear optics.

Submodules
----------
fock             truncated Fock states, operator polynomials, Gaussian unitaries
frame            mean-field + linearized Gaussian frame, effective Hamiltonians
opa              exact two-mode chi(2) oracle and reduced single-mode models
conditioning     pump homodyne and conditional state preparation
phase_space      Wigner functions, negativity, marginals, fidelities
figures_of_merit closed-form feasibility calculus (threshold/gain/loss times)
cli              scenario runner emitting plot-ready CSV/JSON
"""

from . import errors
from .fock import (
    CONVENTION_TAG,
    FockVector,
    OperatorPoly,
    apply_operator,
    displacement,
    expectation,
    hermite_functions,
    phase_rotation,
    quadrature_wavefunction,
    squeeze,
    squeezed_vacuum,
)

__all__ = [
    "CONVENTION_TAG",
    "FockVector",
    "OperatorPoly",
    "apply_operator",
    "displacement",
    "errors",
    "expectation",
    "hermite_functions",
    "phase_rotation",
    "quadrature_wavefunction",
    "squeeze",
    "squeezed_vacuum",
]
