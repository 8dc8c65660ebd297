"""Exception types shared across the package."""


class KerrNegError(Exception):
    """Base class for all package errors."""


class ConfigError(KerrNegError):
    """A run configuration is malformed or inconsistent."""


class NumericalError(KerrNegError):
    """Base class for failures of a numerical routine."""


class TruncationError(NumericalError):
    """The truncated number basis is too small for the state at hand."""


class DimMismatch(NumericalError, ValueError):
    """Operands live in number bases of different size."""


class StepFailure(NumericalError):
    """The adaptive integrator could not take a step."""


class NonHermitianInput(NumericalError, ValueError):
    """A density matrix is not Hermitian to working precision."""


class GridTooSmall(NumericalError):
    """The phase-space grid does not contain the state."""


class GridTooCoarse(NumericalError):
    """The grid spacing is too large for the requested derivative."""


class KGridTooSmall(NumericalError):
    """The wavenumber grid truncates a non-negligible part of the spectrum."""


class SingularLine(NumericalError):
    """The diffusion coefficient of a spectral line is singular."""
