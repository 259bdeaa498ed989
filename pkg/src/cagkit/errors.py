"""Exception taxonomy shared across the pipeline modules.

Every error raised by cagkit derives from :class:`CagkitError` so callers
(and the CLI) can distinguish pipeline failures from programming errors.
"""

from __future__ import annotations


class CagkitError(Exception):
    """Base class for all cagkit errors."""


# --- ingest ---------------------------------------------------------------

class UnsupportedTransferSyntax(CagkitError):
    """DICOM input is not uncompressed explicit-VR little-endian."""


class MissingRequiredTag(CagkitError):
    def __init__(self, tag: str, message: str | None = None):
        self.tag = tag
        super().__init__(message or f"missing required DICOM tag {tag}")


class FrameSizeMismatch(CagkitError):
    """A frame's dimensions differ from the rest of the sequence."""


class TruncatedPixelData(CagkitError):
    """Pixel payload is shorter than rows x columns x frames."""


class EmptySequence(CagkitError):
    """Input contains no frames."""


# --- sampler --------------------------------------------------------------

class NonFiniteValue(CagkitError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite value in series at index {index}")


# --- classifier gate ------------------------------------------------------

class PredictorUnavailable(CagkitError):
    """The predictor adapter cannot produce an answer (dead process, missing key)."""


class MalformedPrediction(CagkitError):
    """Adapter emitted a probability vector that violates the contract."""


class EmptyInput(CagkitError):
    """Operation requires at least one element."""


# --- metrics --------------------------------------------------------------

class LengthMismatch(CagkitError):
    """Truth and prediction lists differ in length."""


class UnknownLabel(CagkitError):
    def __init__(self, label: object):
        self.label = label
        super().__init__(f"label {label!r} not in declared class list")


class EmptyMatrix(CagkitError):
    """Confusion matrix has zero total count."""


# --- vlscore --------------------------------------------------------------

class DimensionMismatch(CagkitError):
    """Embedding vectors do not share one dimension."""


class NonFiniteInput(CagkitError):
    """Embedding contains NaN or infinity."""


class NegativeRadicand(CagkitError):
    """Gram determinant went negative beyond float-noise tolerance."""


class NonPositiveConstant(CagkitError):
    """Max-area constant must be > 0."""


class MixedDimensions(CagkitError):
    """Triples within one backbone group disagree on dimension."""


class MalformedRecord(CagkitError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# --- dataset --------------------------------------------------------------

class UnresolvedExam(CagkitError):
    def __init__(self, exam_id: str):
        self.exam_id = exam_id
        super().__init__(f"exam {exam_id!r} not found in report table")


class DuplicateRecordKey(CagkitError):
    """Two corpus records share (exam_id, video_id, frame_index)."""


class MissingLanguage(CagkitError):
    """Record has no report text in the requested language."""


class NoRecords(CagkitError):
    """Split requested over an empty record list."""


class LeakageDetected(CagkitError):
    def __init__(self, group_id: str, splits: list[str]):
        self.group_id = group_id
        self.splits = splits
        super().__init__(f"group {group_id!r} crosses splits {sorted(splits)}")


# --- review service -------------------------------------------------------

class BindFailure(CagkitError):
    """Service could not bind its address."""


class StoreUnwritable(CagkitError):
    """Record store path is not writable."""


class UnknownCase(CagkitError):
    def __init__(self, case_id: str):
        self.case_id = case_id
        super().__init__(f"unknown case {case_id!r}")


class ValidationFailure(CagkitError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


# --- config / cli ---------------------------------------------------------

class ConfigError(CagkitError):
    """Pipeline configuration failed to parse or validate."""
