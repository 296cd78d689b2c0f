"""Exception hierarchy shared by every module."""


class SmoothEntError(ValueError):
    """Base class for input and domain errors raised by smoothent."""


class EmptyMatrix(SmoothEntError):
    pass


class NegativeEntry(SmoothEntError):
    pass


class NotNormalized(SmoothEntError):
    pass


class ShapeMismatch(SmoothEntError):
    """Factors, codecs or tables whose dimensions do not line up."""


class SpectrumOverflow(SmoothEntError, OverflowError):
    """Projected spectrum size exceeds the configured entry cap."""


class EpsilonOutOfRange(SmoothEntError):
    pass


class ConditionalNotSupported(SmoothEntError):
    pass


class TooLarge(SmoothEntError):
    pass


class TOutOfRange(SmoothEntError):
    pass


class DomainError(SmoothEntError):
    pass


class PreconditionViolated(SmoothEntError):
    pass


class AlphabetTooSmall(SmoothEntError):
    pass


class SeedLengthMismatch(SmoothEntError):
    pass
