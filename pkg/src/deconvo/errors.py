"""Error taxonomy shared across the package.

Three categories matter to callers (and to the CLI exit codes): bad
configuration, numerical failures inside the quadrature/estimation
machinery, and output/I-O failures.
"""

__all__ = [
    "DeconvoError",
    "ConfigError",
    "NumericalError",
    "SingularTransformError",
    "AccuracyError",
    "OutputError",
]


class DeconvoError(Exception):
    """Base class for all package errors."""


class ConfigError(DeconvoError, ValueError):
    """Invalid scenario, option, or config-file input."""


class NumericalError(DeconvoError, ArithmeticError):
    """A numerical guarantee was violated during evaluation."""


class SingularTransformError(NumericalError):
    """Division by a (near-)vanishing kernel transform."""


class AccuracyError(NumericalError):
    """A residual or tail check exceeded its tolerance."""


class OutputError(DeconvoError, RuntimeError):
    """An output artifact could not be written."""
