"""Custom exceptions for the holographic QRNG pipeline."""


class QrngError(Exception):
    """Base exception for QRNG pipeline errors."""
    pass


class ParameterError(QrngError):
    """A parameter lies outside its allowed range."""
    pass


class TruncationError(QrngError):
    """OAM cutoff too small for the requested spectrum width."""
    pass


class SpectrumRangeError(QrngError):
    """OAM index outside the spectrum or scanned range."""
    pass


class ArmRoleError(QrngError):
    """Balance requested for R > 1: invert R and attenuate the other arm."""
    pass


class TimeRangeError(QrngError):
    """Run duration overflows the 64-bit picosecond clock."""
    pass


class TagParseError(QrngError):
    """Time-tag file is malformed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class OrderingError(QrngError):
    """Time-tag stream is not sorted by timestamp."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (at event index {index})")
        self.index = index


class DegenerateInputError(QrngError):
    """Counts do not support the requested estimate."""
    pass


class UnachievableTargetError(QrngError):
    """Requested bias cannot be reached within the scanned OAM range."""

    def __init__(self, message: str, interval: tuple[float, float]):
        super().__init__(f"{message}; achievable p0 in [{interval[0]:.6f}, {interval[1]:.6f}]")
        self.interval = interval


class BitInputError(QrngError):
    """Bit sequence holds values other than 0 and 1."""
    pass


class ConfigError(QrngError):
    """Experiment configuration does not match the schema."""
    pass
