"""Exception types shared across the package."""


class PolypackError(Exception):
    """Base class for all package errors."""


class InvalidGraphError(PolypackError, ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConvergenceError(PolypackError, RuntimeError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class ConfigurationError(PolypackError, ValueError):
    """A circle configuration violates its expected pairing pattern."""


class NotInRowSpaceError(PolypackError, ValueError):
    pass


class DescentError(PolypackError, RuntimeError):
    pass


class RegionError(PolypackError, RuntimeError):
    pass
