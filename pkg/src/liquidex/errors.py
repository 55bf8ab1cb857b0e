"""Exception hierarchy shared by every liquidex module."""


class LiquidexError(Exception):
    """Base class for all library errors."""


class ParameterError(LiquidexError, ValueError):
    """Model parameters outside their admissible domain."""


class DomainError(LiquidexError, ValueError):
    """A time or state argument outside the domain of a function."""


class PoleError(DomainError):
    """Evaluation exactly at the horizon, where the feedback gain has a pole."""


class InputError(LiquidexError, ValueError):
    """Shape or length mismatch between related inputs."""


class AdmissibilityError(LiquidexError):
    """A strategy violates the terminal liquidation constraint."""


class ConditioningError(LiquidexError, ArithmeticError):
    """A linear solve is too ill-conditioned to trust.

    Attributes:
        condition: estimated condition number of the offending system.
    """

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class NumericError(LiquidexError, ArithmeticError):
    """Overflow, loss of definiteness, or another numerical breakdown."""
