"""Exception types shared by the integrators and the harness."""


class NumericalFailure(FloatingPointError):
    """A step produced NaN or Inf values."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""


class ReferenceGateError(RuntimeError):
    """A measured error fell below the reference-validity floor."""
