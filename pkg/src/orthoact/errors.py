"""Exception hierarchy.

Every error raised deliberately by the library derives from ``OrthoActError``
so callers (and the evaluation harness) can count failures by kind.
"""


class OrthoActError(Exception):
    """Base class for library errors."""

    kind = "error"


class InvalidDepthError(OrthoActError, ValueError):
    kind = "invalid_depth"


class InvalidWorkspaceError(OrthoActError, ValueError):
    kind = "invalid_workspace"


class OutOfFrameError(OrthoActError, ValueError):
    kind = "out_of_frame"


class MissingRotationError(OrthoActError):
    kind = "missing_rotation"

    def __init__(self, axis, message=None):
        self.axis = axis
        super().__init__(message or f"no rotation hotspot found for axis {axis!r}")


class MissingGripperError(OrthoActError):
    kind = "missing_gripper"


class UnderdeterminedPositionError(OrthoActError):
    """The views carrying a translation hotspot do not pin down all three axes."""

    kind = "underdetermined_position"


class ResourceLimitError(OrthoActError):
    kind = "resource_limit"


class AugmentationFailedError(OrthoActError):
    kind = "augmentation_failed"


class DatasetError(OrthoActError):
    kind = "dataset"


class VersionMismatchError(DatasetError):
    kind = "version_mismatch"


class DimensionMismatchError(DatasetError):
    kind = "dimension_mismatch"


class InvariantViolationError(DatasetError):
    kind = "invariant_violation"


class MissingFileError(DatasetError, FileNotFoundError):
    kind = "missing_file"
