"""Exception hierarchy shared across the package."""


class BinseError(Exception):
    """Base class for all errors raised by this package."""


class InputTooShort(BinseError):
    """Signal is shorter than one analysis frame (or a stated minimum)."""


class ShapeMismatch(BinseError):
    """Array shapes are inconsistent with the operation's contract."""


class UnsupportedFormat(BinseError):
    """Audio file format outside the supported WAV subset."""


class InvalidBand(BinseError):
    """Filterbank band edges are out of range or out of order."""


class DegenerateReference(BinseError):
    """Reference signal has no energy; the metric is undefined."""


class DegenerateMix(BinseError):
    """Speech or noise component is silent; SNR scaling is undefined."""


class EmptyMask(BinseError):
    """No active time-frequency bins; a masked cue metric is undefined."""


class AzimuthUnavailable(BinseError):
    """Requested azimuth has no impulse response within tolerance."""


class NoiseSourceTooShort(BinseError):
    """Noise source cannot supply enough non-overlapping segments."""


class ConfigMismatch(BinseError):
    """Weights file was produced under a different architecture config."""


class FormatError(BinseError):
    """Weights file is corrupt or truncated."""


class InvariantViolation(BinseError):
    """An internal consistency check failed at runtime."""
