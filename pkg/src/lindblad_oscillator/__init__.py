"""Lindblad-damped quantum harmonic oscillator: closed forms and a Fock-space oracle."""

from .errors import (
    ConstraintViolation,
    DegenerateInput,
    DegenerateRegime,
    GenFunctionDiverged,
    InvalidInput,
    InvalidRegime,
    LowPrecisionWarning,
    NoStationaryState,
    OscillatorError,
    PRepresentationUnavailable,
    SingularInitialCondition,
    TruncationBreach,
    UnsupportedRegime,
)
from .params import LindbladMicroParams, OscillatorParams, Regime, derive, validate
from .moments import MomentState, asymptotic_number, evolve, quadratures
from .density_matrix import FockDensityMatrix, generating_function, rho_element, rho_matrix
from .wigner import delta_solution, evaluate_grid, steady_state, wavepacket_solution

__version__ = "0.1.0"

__all__ = [
    "ConstraintViolation", "DegenerateInput", "DegenerateRegime", "GenFunctionDiverged",
    "InvalidInput", "InvalidRegime", "LowPrecisionWarning", "NoStationaryState",
    "OscillatorError", "PRepresentationUnavailable", "SingularInitialCondition",
    "TruncationBreach", "UnsupportedRegime",
    "LindbladMicroParams", "OscillatorParams", "Regime", "derive", "validate",
    "MomentState", "asymptotic_number", "evolve", "quadratures",
    "FockDensityMatrix", "generating_function", "rho_element", "rho_matrix",
    "delta_solution", "evaluate_grid", "steady_state", "wavepacket_solution",
]
