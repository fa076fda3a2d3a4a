class ConfigurationError(ValueError):
    """Invalid or inconsistent network / library / experiment parameters."""


class DivergentIntegralError(ConfigurationError):
    """A path-loss integral does not converge for the given exponents."""


class NumericalIntegrationError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, *, estimate=None, abserr=None, info=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr
        self.info = info


class BracketError(RuntimeError):
    """Root bracket for the Lagrange multiplier could not be established."""
