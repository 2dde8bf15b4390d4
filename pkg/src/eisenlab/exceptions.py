"""Exception types raised across the package."""


class EisenlabError(Exception):
    """Base class for all package errors."""


class PoleError(EisenlabError, ValueError):
    """Evaluation requested at a pole (of Gamma, zeta or theta)."""


class DomainError(EisenlabError, ValueError):
    """Argument outside the declared domain of an operation."""


class PrecisionError(EisenlabError, ArithmeticError):
    """Internal error estimate cannot meet the accuracy contract.

    Callers should retry with a larger ``base_bits``.
    """


class TruncationError(EisenlabError, ArithmeticError):
    """No admissible series length satisfies the requested tolerance."""


class QuadratureError(EisenlabError, ArithmeticError):
    """Two quadrature resolutions disagree beyond tolerance."""


class DegenerateError(EisenlabError, ArithmeticError):
    """Input is numerically zero where a nonzero quantity is required."""


class HeckeValidationError(EisenlabError, ValueError):
    """Coefficient data violates lambda(1)=1 or a Hecke relation."""


class ParseError(EisenlabError, ValueError):
    """Malformed coefficient or config file."""
