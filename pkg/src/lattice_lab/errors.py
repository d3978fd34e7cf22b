"""Exception hierarchy shared across the package."""


class LatticeLabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(LatticeLabError, ValueError):
    """Invalid physical parameters or parameter combinations."""


class NonNormalizableError(ParameterError):
    """The stationary distribution cannot be normalized (q >= 3)."""


class SigmaDomainError(LatticeLabError, ValueError):
    """A closed-form coefficient was requested outside its scaling weight domain."""


class FlowBlowupError(LatticeLabError, ArithmeticError):
    """The group flow left its domain of definition (bracket became non-positive)."""

    def __init__(self, message, s_critical=None):
        super().__init__(message)
        self.s_critical = s_critical


class ProfileError(LatticeLabError, ValueError):
    """A density profile violates positivity or decay requirements."""


class StabilityError(LatticeLabError, ValueError):
    """Time step violates the stability bound of the chosen scheme."""


class IntegrationError(LatticeLabError, ArithmeticError):
    """Time integration produced non-finite values."""

    def __init__(self, message, step=None, cell=None):
        super().__init__(message)
        self.step = step
        self.cell = cell


class BudgetError(LatticeLabError, RuntimeError):
    """An evolution exceeded its step-count or wall-clock budget."""


class ConfigError(LatticeLabError, ValueError):
    """Malformed or invalid run configuration."""
