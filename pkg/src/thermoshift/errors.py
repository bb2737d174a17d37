"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes (see ``thermoshift.cli``).
"""


class ThermoshiftError(Exception):
    """Base class for library errors."""


class DomainError(ThermoshiftError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResourceError(ThermoshiftError):
    """An enumeration or search would exceed its configured budget."""

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class NumericError(ThermoshiftError, ArithmeticError):
    """An iterative numerical method failed to converge."""


class NotFoundError(ThermoshiftError, LookupError):
    """A search horizon was exhausted without a hit."""


class ConstructionError(ThermoshiftError):
    """A Moran-type construction could not be carried out."""


class InfeasibleError(ThermoshiftError):
    """A constrained search found no feasible point."""


class ConfigError(ThermoshiftError, ValueError):
    """A configuration file or parameter set is malformed."""
