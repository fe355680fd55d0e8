"""Exception hierarchy shared by every isobeam module."""


class IsobeamError(Exception):
    """Base class for all library errors."""


class ContractViolation(IsobeamError, ValueError):
    """Raised when a caller breaks a documented precondition (orders, base points, sizes)."""


class SingularPointError(IsobeamError, ArithmeticError):
    """A jet or scalar operation was evaluated outside its domain (division by zero, log of 0...)."""


class ParseError(IsobeamError, ValueError):
    """Malformed expression text. ``offset`` is the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EvaluationError(IsobeamError, ArithmeticError):
    """Expression evaluation failed at a specific node."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class PoleError(IsobeamError, ArithmeticError):
    """A family or coefficient has a pole; ``bracket`` is an interval containing it."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        if bracket is not None:
            message = f"{message} (pole in [{bracket[0]:.12g}, {bracket[1]:.12g}])"
        super().__init__(message)
        self.bracket = bracket


class QuadratureError(IsobeamError, ArithmeticError):
    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message}; achieved error estimate {achieved_error:.3e}")
        self.achieved_error = achieved_error


class DomainError(IsobeamError, ValueError):
    """Argument outside the supported domain of a special function or map."""


class SpecViolation(IsobeamError, ValueError):
    """Family parameters violate their defining constraints (determinant, admissible k...)."""


class NumericalFailure(IsobeamError, RuntimeError):
    def __init__(self, message: str, iterations: int | None = None):
        if iterations is not None:
            message = f"{message} after {iterations} iterations"
        super().__init__(message)
        self.iterations = iterations
