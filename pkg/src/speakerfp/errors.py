"""Exception hierarchy shared across the toolkit.

Everything raised on bad input or bad data derives from SpeakerFpError so the
CLI can map it to a single exit code; internal invariant violations use
InternalError and exit differently.
"""


class SpeakerFpError(Exception):
    """Base class for input/data errors."""


class CorpusParseError(SpeakerFpError):
    """Malformed canonical corpus file."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class CorpusValidationError(SpeakerFpError):
    """Structurally valid input that violates a corpus invariant."""


class AdapterError(SpeakerFpError):
    """Upstream transcript release does not match the expected schema."""


class VocabularyError(SpeakerFpError):
    """Vocabulary construction failed (empty training set, no surviving terms)."""


class ActivationFileError(SpeakerFpError):
    """Activation file is corrupt or inconsistent."""

    def __init__(self, message: str, record_index: int | None = None):
        super().__init__(message)
        self.record_index = record_index


class FingerprintError(SpeakerFpError):
    """Invalid fingerprint construction or comparison."""


class FeaturelessSampleError(FingerprintError):
    """Sample whose feature vector is all zeros; rejected rather than classified."""


class EvalError(SpeakerFpError):
    """Evaluation over an empty or inconsistent result set."""


class ConfigError(SpeakerFpError):
    """Run configuration is malformed (unknown keys, bad values)."""


class StageError(SpeakerFpError):
    """Wraps a module error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


class InternalError(Exception):
    """Invariant violation inside the toolkit itself; not a user error."""
