"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An array argument has the wrong shape or an index is out of range."""


class ConfigError(ValueError):
    """An experiment configuration is malformed (unknown key, bad value)."""


class NumericsError(RuntimeError):
    """A numeric invariant failed (non-finite iterate, bad residual).

    ``where`` names the computation unit and, when relevant, the iteration.
    """

    def __init__(self, message, where=None):
        if where is not None:
            message = f"{message} [{where}]"
        super().__init__(message)
        self.where = where


class NotPositiveDefiniteError(NumericsError):
    """A matrix required to be positive definite is not (or nearly not)."""

    def __init__(self, message, min_eig=None, where=None):
        if min_eig is not None:
            message = f"{message} (min eigenvalue ~ {min_eig:.3e})"
        super().__init__(message, where=where)
        self.min_eig = min_eig


class ConvergenceError(NumericsError):
    """An inner iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, where=None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message, where=where)
        self.residual = residual
