"""Exception types shared across the solver."""


class LscError(Exception):
    """Base class for all library errors."""


class DomainError(LscError):
    """An argument lies outside the analytic domain of the function."""


class ConvergenceError(LscError):
    """A bracketing or iterative scheme failed to converge."""


class DegenerateError(LscError):
    """A configuration with (near-)coincident roots; partial fractions refused."""


class IntegrabilityError(LscError):
    """An expectation diverges: exponential rate at or beyond a mixture rate."""


class NoRootError(LscError):
    """The averaging function has constant sign on the search range."""


class Assumption4Violation(LscError):
    """Grid validation of the sign/monotonicity structure around x* failed."""


class ConfigError(LscError):
    """Invalid simulation configuration (e.g. uncertified horizon truncation)."""


class ScenarioError(LscError):
    """A scenario document failed schema or semantic validation."""
