"""Exception types shared across the package."""


class UnsupportedOrderError(ValueError):
    """Bessel order above the configured maximum."""


class ZeroScanError(RuntimeError):
    """Sign-change scan for a Bessel zero exhausted its search window."""


class QuadratureConvergenceError(RuntimeError):
    """Adaptive quadrature hit its refinement depth before reaching tolerance."""


class ResolutionError(ValueError):
    """Collocation grid too coarse for the requested spectral resolution."""


class CFLError(RuntimeError):
    """Time step too large for the current velocity field."""


class ConfigError(ValueError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
