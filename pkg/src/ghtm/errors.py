"""Exception hierarchy shared by every pipeline stage."""


class GhtmError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(GhtmError):
    pass


class VocabularyError(GhtmError):
    pass


class EmbeddingFormatError(GhtmError):
    pass


class ShapeError(GhtmError, ValueError):
    pass


class ParameterError(GhtmError, ValueError):
    pass


class TrainingError(GhtmError):
    pass


class MetricError(GhtmError):
    pass


class TopicsFileError(GhtmError):
    pass


class StageError(GhtmError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
