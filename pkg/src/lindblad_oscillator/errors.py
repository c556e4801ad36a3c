"""Exception and warning types shared by all modules."""


class OscillatorError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(OscillatorError, ValueError):
    """Non-finite, malformed or out-of-range input."""


class ConstraintViolation(OscillatorError, ValueError):
    """Diffusion coefficients violate the complete-positivity constraints."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvalidRegime(OscillatorError, ValueError):
    """Parameters fall outside the regime an operation is defined for."""


class DegenerateInput(OscillatorError, ValueError):
    """Input that collapses to a degenerate model (e.g. zero friction)."""


class DegenerateRegime(OscillatorError, ArithmeticError):
    """Closed-form constants cannot be solved for (singular linear system)."""


class UnsupportedRegime(OscillatorError, ValueError):
    """The closed form is only available in another damping regime."""


class NoStationaryState(OscillatorError, ValueError):
    """The drift is not stable, so no stationary state exists."""


class PRepresentationUnavailable(OscillatorError, ValueError):
    """The Glauber P function is not an ordinary non-negative density."""


class GenFunctionDiverged(OscillatorError, ArithmeticError):
    """The Gaussian integral defining the generating function diverges."""


class SingularInitialCondition(OscillatorError, ValueError):
    """The delta-type Wigner solution is singular at t = 0."""


class TruncationBreach(OscillatorError, RuntimeError):
    """The truncated Fock basis is too small for the requested evolution."""


class LowPrecisionWarning(RuntimeWarning):
    """Cancellation in an alternating sum destroyed most significant digits."""
