"""Exception types shared across the package."""


class M3sphError(Exception):
    """Base class for all package-specific errors."""


class CapabilityError(M3sphError):
    """Requested parameters exceed what the exact-arithmetic layer supports."""


class ConsistencyError(M3sphError):
    """An internal identity that must hold numerically failed to hold."""


class FieldFormatError(M3sphError):
    """Base class for M3SF file-format problems."""


class MalformedHeaderError(FieldFormatError):
    pass


class UnsupportedVersionError(FieldFormatError):
    pass


class ChecksumMismatchError(FieldFormatError):
    pass


class PayloadLengthError(FieldFormatError):
    pass


class DecompositionError(M3sphError):
    """Field could not be decomposed into radial coefficients.

    Carries the reconstruction residual that triggered the failure.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
