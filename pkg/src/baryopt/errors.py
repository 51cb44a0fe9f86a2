"""Exceptions shared across the package."""


class DimensionMismatchError(ValueError):
    """Inputs whose shapes cannot be reconciled."""


class InvalidDomainError(ValueError):
    """Values outside the mathematical domain (non-finite, boundary weights, ...)."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class HessiansUnavailableError(RuntimeError):
    """An operation needed second derivatives the family does not provide."""


class DegenerateMetricError(RuntimeError):
    """The x-block of the Hessian is singular; its Schur complement is unavailable."""


class ProxNonConvergenceError(RuntimeError):
    """The inner solver exhausted its budget before meeting the tolerance.

    Carries the best iterate found so callers can inspect or report it.
    """

    def __init__(self, message, x=None, q=None, grad_norm=None, iterations=None):
        super().__init__(message)
        self.x = x
        self.q = q
        self.grad_norm = grad_norm
        self.iterations = iterations
