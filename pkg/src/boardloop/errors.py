"""Exception types shared across the package.

Every error a caller is expected to handle derives from ``BoardLoopError``
so CLI and library users can catch one base type. Subclasses distinguish
bad input shapes, bad parameters, and failures of the detection /
estimation / calibration machinery.
"""


class BoardLoopError(Exception):
    """Base class for all errors raised by boardloop."""


class ShapeError(BoardLoopError):
    """Images passed to an operation have incompatible dimensions."""


class ParameterError(BoardLoopError):
    """A parameter value violates its documented constraints."""


class EstimationError(BoardLoopError):
    """Homography estimation failed (too few or degenerate points)."""


class DetectionError(BoardLoopError):
    """Marker detection did not find exactly four fiducials."""

    def __init__(self, message: str, found: int):
        super().__init__(message)
        self.found = found


class CalibrationError(BoardLoopError):
    """Calibration exhausted its budget without a valid evaluation."""


class ExperimentError(BoardLoopError):
    """A cycle of an iterated experiment failed; ``cycle`` names which one."""

    def __init__(self, message: str, cycle: int):
        super().__init__(message)
        self.cycle = cycle


class RatingsError(BoardLoopError):
    """A ratings dataset is malformed or a selection matched nothing."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ConfigError(BoardLoopError):
    """An experiment/calibration config field is missing or invalid.

    ``path`` is the JSON-path of the offending field, e.g. ``camera.blur_sigma``.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path
