"""Exception types raised by the planners."""


class ConfigError(ValueError):
    """A scenario or experiment file failed validation.

    The message always names the offending field.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InfeasibleError(RuntimeError):
    """No feasible route (or joint route) exists for the requested endpoints."""


class ResourceLimitError(RuntimeError):
    """The exact multi-UAV state graph would exceed the configured size cap."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested relative tolerance."""

    def __init__(self, message, estimate=None, error_estimate=None, depth=None):
        self.estimate = estimate
        self.error_estimate = error_estimate
        self.depth = depth
        super().__init__(
            f"{message} (estimate={estimate!r}, error={error_estimate!r}, depth={depth})"
        )


class ConvergenceError(RuntimeError):
    """Best-response dynamics hit the round cap without reaching equilibrium."""
