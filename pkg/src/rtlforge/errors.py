"""Exception hierarchy shared across the toolkit."""


class ForgeError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(ForgeError):
    pass


class NonFiniteInputError(ForgeError):
    pass


class TransformInapplicableError(ForgeError):
    """No applicable site for the requested semantics-preserving transform."""


class ToolUnavailableError(ForgeError):
    """A required external tool is not on PATH and no fallback applies."""


class ToolTimeoutError(ForgeError):
    pass


class PortMismatchError(ForgeError):
    """Candidate and anchor do not expose the same port interface."""


class EmptyTraceError(ForgeError):
    pass


class AnchorInvalidError(ForgeError):
    """An anchor design failed parsing or validation."""


class DegenerateDatasetError(ForgeError):
    """Training data contains a single class; refusing to fit a constant model."""


class SourceFailureError(ForgeError):
    """A token source failed mid-generation."""


class DatasetSchemaError(ForgeError):
    """A serialized dataset line violates the triplet schema."""


class TraceSchemaError(ForgeError):
    """A trace file or hidden-state sidecar violates the documented format."""


class StageError(ForgeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
