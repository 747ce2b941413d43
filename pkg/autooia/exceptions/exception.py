from typing import Optional


class OIAError(Exception):
    """Root of every error raised by autooia."""
    def __init__(self, message: str):
        super().__init__(message)


class ConfigError(OIAError):
    """Invalid configuration value or flag combination."""


class DimensionError(OIAError):
    """Tensor or record shapes that do not agree."""


class LabelError(OIAError):
    """Label vector with the wrong arity or a non-binary entry."""


class TapeError(OIAError):
    """Misuse of the autograd tape."""


class DataError(OIAError):
    """Problem with dataset files on disk."""


class AnnotationParseError(DataError):
    def __init__(self, path, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class DuplicateSceneError(AnnotationParseError):
    pass


class FeatureFormatError(DataError):
    pass


class BadMagicError(FeatureFormatError):
    pass


class BadVersionError(FeatureFormatError):
    pass


class SizeMismatchError(FeatureFormatError):
    pass


class NonFiniteError(FeatureFormatError):
    pass


class EmptySceneError(DataError):
    """A scene without proposals reached the network."""


class EmptySplitError(DataError):
    pass


class CheckpointError(OIAError):
    pass


class NumericAbortError(OIAError):
    """Training produced a non-finite loss."""
    def __init__(self, message: str, epoch: Optional[int] = None, scene_id: Optional[str] = None):
        self.epoch = epoch
        self.scene_id = scene_id
        super().__init__(message)


class UnknownGridError(OIAError):
    pass


class ReportFormatError(OIAError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")
