"""Exception types raised by the solvers."""


class ParameterError(ValueError):
    """Invalid physical or numerical parameter."""


class TruncationError(RuntimeError):
    """A frequency window or grid does not capture enough spectral weight."""


class SamplingError(ValueError):
    """A drive or kernel feature is not resolved by the time grid."""


class SingularityError(ArithmeticError):
    """The response function is evaluated exactly on a real-axis pole."""


class HorizonError(IndexError):
    """A requested time lies outside the solved horizon."""
