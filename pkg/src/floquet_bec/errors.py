"""Exception types.

Every error carries a short ``category`` string; the CLI reports it in its
machine-readable error line and maps it to an exit code.
"""


class FloquetError(Exception):
    category = "error"


class InfeasibleParameters(FloquetError, ValueError):
    """A square root in the exact solution would be imaginary."""

    category = "infeasible-parameters"

    def __init__(self, message, which=None):
        super().__init__(message)
        self.which = which


class NonFiniteField(FloquetError, FloatingPointError):
    """NaN/Inf appeared during time stepping."""

    category = "non-finite-field"

    def __init__(self, message, t=None, trace=None):
        super().__init__(message)
        self.t = t
        self.trace = trace


class GridMismatch(FloquetError, ValueError):
    category = "grid-mismatch"


class LoopAmbiguous(FloquetError, ArithmeticError):
    """Accumulated loop phase is not close to a multiple of 2*pi."""

    category = "loop-ambiguous"


class SingularCoefficient(FloquetError, ArithmeticError):
    """A stability-operator coefficient is evaluated too close to a density node."""

    category = "singular-coefficient"


class ConfigError(FloquetError, ValueError):
    category = "config-parse"
