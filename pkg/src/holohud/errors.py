"""Exception types shared across the package."""


class HoloHudError(Exception):
    """Base class for all errors raised by holohud."""


class DomainError(HoloHudError, ValueError):
    """An argument lies outside the domain of the requested computation."""


class DegenerateError(DomainError):
    """The requested quantity is singular, e.g. an infinite focal length."""


class SamplingError(HoloHudError):
    """A grid is too coarse for the phase it has to represent.

    The offending diagnostics (a :class:`~holohud.propagation.SamplingDiagnostics`
    or a plain dict for phase maps) are kept on ``diagnostics``.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(HoloHudError, ValueError):
    """Invalid run configuration or unreadable input file."""
