"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class FormatError(ValueError):
    """Input file does not follow the expected layout."""


class ConfigError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    """Metric has no meaningful value for the given input (e.g. zero norm)."""


class NoMeasurementsError(ValueError):
    """A block kept zero samples, so there is nothing to recover from."""


class InfeasibleError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap before meeting tolerance.

    The best iterate found so far is attached so callers can still use it.
    """

    def __init__(self, message, alpha=None, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.alpha = alpha
        self.residual = residual
        self.iterations = iterations
