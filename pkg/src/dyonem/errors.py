"""Exception types raised across the package."""


class DyonemError(Exception):
    """Base class for all package errors."""


class DomainError(DyonemError, ValueError):
    """A query point lies outside the sampled domain or its stencil margin."""


class ShapeError(DyonemError, ValueError):
    """Two sampled quantities do not share the same sampling."""


class ConfigurationError(DyonemError, ValueError):
    """A parameter set violates a structural constraint (stability, resolution)."""


class NumericalError(DyonemError, ArithmeticError):
    """An iterative procedure failed or a non-finite value appeared."""


class SingularityError(NumericalError):
    """A field was requested on the worldline of a point source."""
