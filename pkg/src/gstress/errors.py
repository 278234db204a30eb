"""Exception types raised by the engine."""


class GStressError(Exception):
    """Base class for every error raised by gstress."""


class SingularPointError(GStressError, ArithmeticError):
    """A jet operation left the domain of the function being composed."""


class OrderExhaustedError(GStressError):
    """A derivative was requested from a jet with no derivative data left."""


class ExprSyntaxError(GStressError, ValueError):
    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class CatalogError(GStressError, ValueError):
    """Unknown catalog entry or invalid immersion parameters."""


class ChartDomainError(GStressError, ValueError):
    """Evaluation point lies outside the margined chart."""


class DegenerateImmersionError(GStressError, ArithmeticError):
    """The differential of the immersion is rank deficient."""


class ConfigError(GStressError, ValueError):
    """Invalid verification-suite configuration."""
