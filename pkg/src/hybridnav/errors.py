"""Exception types raised across the package."""


class NavError(Exception):
    """Base class for all package errors."""


class ValidationError(NavError, ValueError):
    """Invalid configuration or argument."""


# geodesy / mechanization
class PoleSingularity(NavError):
    """Latitude too close to a pole for the local-level equations."""


class GimbalLock(NavError):
    """Euler extraction undefined because pitch is at +-90 deg."""


class NearGimbalLock(GimbalLock):
    """Euler-rate to body-rate map is ill-conditioned."""


class NonFinite(NavError):
    """A state component left the finite range."""


# scenario / dataset
class EmptyStream(NavError):
    """Stream shorter than one window."""


class InsufficientExamples(NavError):
    """A stratification cell cannot populate both partitions."""


# filter
class CovarianceBlowup(NavError):
    """trace(P) exceeded the configured ceiling."""


class SingularInnovation(NavError):
    """Innovation covariance is numerically singular."""


class LargeErrorState(NavError):
    """Misalignment estimate too large for the small-angle correction."""


class TimeMisalignment(NavError):
    """Measurement time does not match the navigation epoch."""


class WindowNotFull(NavError):
    """Innovation window has fewer entries than its size."""


class StreamGap(NavError):
    """IMU cadence broken inside a run."""


# regressor
class ShapeMismatch(NavError, ValueError):
    """Array shape does not match the network configuration."""


class NonFiniteLoss(NavError):
    """Training produced a NaN/inf loss."""

    def __init__(self, batch_index, epoch=None):
        self.batch_index = batch_index
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_index}")


class SchemaVersionMismatch(NavError):
    """Weight file schema or shape does not match the expected one."""


class CorruptFile(NavError):
    """Weight file cannot be parsed."""


# harness
class EmptyInput(NavError, ValueError):
    """Metric evaluated on an empty sequence."""


class ParseError(NavError):
    """Malformed log row."""

    def __init__(self, path, line, msg):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {msg}")


class NonMonotoneTime(NavError):
    """Timestamps are not strictly increasing."""
