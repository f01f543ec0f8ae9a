"""Exception types shared across the pipeline.

Every error that names a specific offending entity (a participant, chunk,
node, or file row) carries it in ``entity`` so stage failures can be reported
without re-running the whole corpus.
"""

from __future__ import annotations


class WorktraceError(Exception):
    """Base class for all pipeline errors."""

    def __init__(self, message: str, *, entity: str | None = None) -> None:
        super().__init__(message)
        self.entity = entity


class ParseError(WorktraceError):
    """Malformed input file."""


class IntegrityError(WorktraceError):
    """Referential problem in otherwise well-formed input (dangling id, duplicate id)."""


class UnknownCodeError(IntegrityError):
    """Subtask codes that do not resolve to the loaded decomposition."""

    def __init__(self, codes: list[str], *, entity: str | None = None) -> None:
        self.codes = sorted(codes)
        super().__init__(f"unknown subtask codes: {', '.join(self.codes)}", entity=entity)


class UnknownNodeError(WorktraceError):
    """Lookup of an id that is not part of the queried structure."""


class ValueRangeError(WorktraceError):
    """A field value outside its declared range."""


class StructuralError(WorktraceError):
    """Inconsistent structure that is not a parse problem (duplicate turns, childless parents)."""


class MismatchedOriginError(WorktraceError):
    """Chunk operation across two different source texts."""


class WindowMismatchError(WorktraceError):
    """Similarity requested for chunks of different window sizes."""


class MissingPairError(WorktraceError):
    """File-backed score table lacks an entry for a requested pair."""

    def __init__(self, pairs: list[tuple[str, str]]) -> None:
        self.pairs = pairs
        preview = "; ".join(f"{l} / {r}" for l, r in pairs[:5])
        suffix = " ..." if len(pairs) > 5 else ""
        super().__init__(f"score table missing {len(pairs)} pair(s): {preview}{suffix}")


class ProviderUnavailableError(WorktraceError):
    """Remote score provider cannot be reached or never became ready."""


class DegenerateMatrixError(WorktraceError):
    """Matrix handed to the balancing step has an all-zero row or column."""


class EmptyGraphError(WorktraceError):
    """Participant has no coded utterances, so no semantic graph exists."""


class ConfigError(WorktraceError):
    """Invalid pipeline configuration."""


class MissingArtifactError(WorktraceError):
    """A stage was invoked before its upstream artifacts were produced."""
