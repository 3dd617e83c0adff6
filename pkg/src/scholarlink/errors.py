"""Exception hierarchy shared across the package.

Every error carries a stable machine ``code`` so the HTTP service and the
CLI can report failures without leaking stack traces.
"""
from __future__ import annotations


class LinkerError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"


class ConfigError(LinkerError):
    code = "bad_config"


class ParseError(LinkerError):
    """Malformed statement in an N-Triples input."""

    code = "parse_error"

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class EmptyStoreError(LinkerError):
    code = "empty_store"


class FormatVersionError(LinkerError):
    """Persisted file has a wrong magic, version, or is truncated."""

    code = "bad_format"


class KindMismatchError(LinkerError):
    code = "kind_mismatch"


class EmptyQueryError(LinkerError):
    code = "empty_query"


class InvalidKError(LinkerError):
    code = "invalid_k"


class DimensionMismatchError(LinkerError):
    code = "dimension_mismatch"


class NoTrainableTriplesError(LinkerError):
    code = "no_trainable_triples"


class NonFiniteGradientError(LinkerError):
    code = "non_finite_gradient"


class EmptyTextError(LinkerError):
    """Text was empty after normalization; ``index`` set for batch calls."""

    code = "empty_text"

    def __init__(self, message: str = "empty text", index: int | None = None):
        if index is not None:
            message = f"{message} (index={index})"
        super().__init__(message)
        self.index = index


class RemoteUnavailableError(LinkerError):
    code = "remote_unavailable"

    def __init__(self, endpoint: str, cause: str):
        super().__init__(f"remote endpoint {endpoint} unavailable: {cause}")
        self.endpoint = endpoint
        self.cause = cause


class BadRemoteVectorError(LinkerError):
    code = "bad_remote_vector"


class SimOutOfRangeError(LinkerError):
    code = "sim_out_of_range"


class NonFiniteOutputError(LinkerError):
    code = "non_finite_output"


class EmptyDatasetError(LinkerError):
    code = "empty_dataset"


class DivergedLossError(LinkerError):
    code = "diverged_loss"


class EmptyCandidatesError(LinkerError):
    code = "empty_candidates"


class ResourceMissingError(LinkerError):
    code = "resource_missing"

    def __init__(self, name: str):
        super().__init__(f"required resource missing: {name}")
        self.name = name


class SpanParseError(LinkerError):
    """Model output did not follow the span grammar.

    ``position`` is the index of the offending segment; ``raw_output`` keeps
    the unparsed text for logging.
    """

    code = "span_parse_error"

    def __init__(self, position: int, reason: str, raw_output: str | None = None):
        super().__init__(f"segment {position}: {reason}")
        self.position = position
        self.reason = reason
        self.raw_output = raw_output


class SpanSerializeError(LinkerError):
    code = "span_serialize_error"


class DatasetSchemaError(LinkerError):
    """Question dataset violates the expected JSON shape; ``path`` points
    into the document (e.g. ``questions[3].entities``)."""

    code = "dataset_schema"

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class DuplicateIdError(LinkerError):
    code = "duplicate_id"
