"""Exception hierarchy for udwdetect."""


class UDWError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedOrderError(UDWError, ValueError):
    pass


class InfraredDivergenceError(UDWError, ValueError):
    """Raised for gaps inside the infrared guard band around zero."""


class DistributionalProfileError(UDWError, TypeError):
    """The point-like profile has no pointwise values."""


class KernelDegeneracyError(UDWError, ValueError):
    pass


class QuadratureError(UDWError, RuntimeError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate travels with the exception as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(UDWError, ValueError):
    """One or more problems in an experiment configuration.

    ``errors`` holds every message found, not just the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
