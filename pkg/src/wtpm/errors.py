"""Exception hierarchy shared by all wtpm modules."""


class WTPMError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(WTPMError, ValueError):
    """Input values violate a precondition (non-finite, out of range, ...)."""


class ShapeError(WTPMError, ValueError):
    """Array dimensions are inconsistent."""


class DegenerateDimension(WTPMError):
    """A dimension has no observations at all."""

    def __init__(self, dims):
        self.dims = [int(d) for d in dims]
        super().__init__(f"dimension(s) never observed: {self.dims}")


class InsufficientPairData(WTPMError):
    """Some pair of dimensions is jointly observed fewer than ``min_count`` times."""

    def __init__(self, i, j, count, min_count):
        self.i, self.j, self.count, self.min_count = int(i), int(j), int(count), min_count
        super().__init__(
            f"dims ({self.i}, {self.j}) jointly observed {self.count} < {min_count} times"
        )


class InsufficientTripleData(WTPMError):
    """Some triple of dimensions is jointly observed fewer than ``min_count`` times."""

    def __init__(self, i, j, k, count, min_count):
        self.index = (int(i), int(j), int(k))
        self.count, self.min_count = int(count), min_count
        super().__init__(
            f"dims {self.index} jointly observed {self.count} < {min_count} times"
        )


class RankDeficient(WTPMError):
    """The second-moment matrix does not support the requested rank."""

    def __init__(self, requested, effective):
        self.requested, self.effective = int(requested), int(effective)
        super().__init__(
            f"requested rank {self.requested} but only {self.effective} eigenvalues "
            "are above the whitening threshold"
        )


class ConvergenceFailure(WTPMError):
    """No tensor power iteration restart converged."""

    def __init__(self, component, best_residual):
        self.component, self.best_residual = int(component), float(best_residual)
        super().__init__(
            f"power iteration for component {self.component} did not converge "
            f"(best step size {self.best_residual:.3g})"
        )


class NotIdentifiable(WTPMError):
    """Too few complete dimensions to identify the requested model."""


class RecoveryError(WTPMError):
    """Model parameters cannot be read off the decomposition."""

    def __init__(self, message, component=None):
        self.component = component
        super().__init__(message)


class ParseError(WTPMError, ValueError):
    """Malformed data or config file."""

    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + message)


class ConfigError(WTPMError, ValueError):
    """Experiment configuration is invalid."""
