"""Exception types shared across the package."""


class LaneforgeError(Exception):
    """Base class for all package errors."""


class ParseError(LaneforgeError):
    """Malformed map or config source."""


class DisconnectedTrack(LaneforgeError):
    """A drivable tile's centerline does not continue into a neighbor."""


class InvalidRange(LaneforgeError):
    """A domain-randomization range is empty or reversed."""


class NoMapsRegistered(LaneforgeError):
    """reset() called on an environment with no maps."""


class SteppedAfterDone(LaneforgeError):
    """step() called on a finished episode."""


class OffRoad(LaneforgeError):
    """Operation requires a pose on a drivable tile."""


class DimensionMismatch(LaneforgeError):
    """Image has the wrong shape."""


class ShapeMismatch(LaneforgeError):
    """Tensor shapes do not line up."""


class NonFiniteActivation(LaneforgeError):
    """NaN/Inf appeared in a forward pass."""


class NonFiniteGradient(LaneforgeError):
    """NaN/Inf appeared in a backward pass."""


class IoError(LaneforgeError):
    """Weight file could not be read or written."""


class VersionMismatch(LaneforgeError):
    """Weight file was written by an incompatible format version."""


class ChecksumMismatch(LaneforgeError):
    """Weight file is corrupt or truncated."""


class TooFewRecords(LaneforgeError):
    """Dataset too small to split."""


class ExpertFailure(LaneforgeError):
    """The expert demonstrator drove off the road during collection."""


class BufferUnderflow(LaneforgeError):
    """Policy update requested before any rollout was stored."""


class EmptyLog(LaneforgeError):
    """Metrics requested for an empty trajectory log."""


class ConfigError(LaneforgeError):
    """Invalid configuration value; message names the offending field."""
