"""Domain error hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI
(``code: message`` on stderr) and the HTTP service (error envelopes).
"""


class BeadLabError(Exception):
    """Base class for all domain errors."""

    code = "error"


class ValidationError(BeadLabError):
    """Bad input values: geometry, indices, sizes, malformed state."""

    code = "invalid"


class UnsupportedError(BeadLabError):
    """Requested configuration outside what the toolkit supports."""

    code = "unsupported"


class CoverageError(BeadLabError):
    """A (factor, level) combination required for fitting has no data."""

    code = "coverage"


class IllConditionedError(BeadLabError):
    """Kernel matrix could not be factorized even at maximum jitter."""

    code = "ill_conditioned"


class PendingConflictError(BeadLabError):
    """A measurement is already pending for this campaign."""

    code = "pending_conflict"


class VersionConflictError(BeadLabError):
    """Optimistic-concurrency check failed (stale campaign version)."""

    code = "version_conflict"


class NotFoundError(BeadLabError):
    """Referenced campaign or report section does not exist."""

    code = "not_found"


class SchemaError(BeadLabError):
    """Campaign file has an unknown schema version or violates invariants."""

    code = "schema"
