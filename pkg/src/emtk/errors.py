"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class EmtkError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(EmtkError):
    """Malformed input corpus (encoding, row shape, duplicate ids, ...)."""


class ResourceFormatError(EmtkError):
    """Malformed resource file (lexicon, word space, model, idf table)."""


class ConfigurationError(EmtkError):
    """Invalid or inconsistent configuration (flag/mode/resource mismatch)."""


class UsageError(EmtkError):
    """Bad command-line invocation; maps to exit code 2."""


class TrainingError(EmtkError):
    """Training precondition violated or optimizer failed to converge.

    ``final_objective`` carries the last objective value when the error is a
    convergence failure.
    """

    def __init__(self, message: str, final_objective: float | None = None):
        super().__init__(message)
        self.final_objective = final_objective


class PipelineError(EmtkError):
    """Source failure during a pipeline run; carries the partial count."""

    def __init__(self, message: str, processed: int = 0):
        super().__init__(message)
        self.processed = processed


class EquivalenceError(EmtkError):
    """Sequential and parallel transcripts diverged; carries a diff sample."""

    def __init__(self, message: str, diff_sample: list[str] | None = None):
        super().__init__(message)
        self.diff_sample = diff_sample or []


class WorkspaceEscapeError(EmtkError):
    """A relative path tried to escape the configured workspace root."""
