"""Exception types shared across the package."""


class DstageError(Exception):
    """Base class for all package errors."""


class DocumentParseError(DstageError):
    """A document failed schema validation; carries the offending path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class InvalidScriptError(DstageError):
    """A structurally invalid script was passed where a valid one is required."""


class DesignSpaceTooLargeError(DstageError):
    """Full factorial expansion would exceed the configured cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"full factorial design has {size} points, cap is {cap}")


class ExtractionError(DstageError):
    """No schema-conforming document could be extracted from a provider response."""


class ReplayMissError(DstageError):
    """A replay-mode lookup found no recorded response for a request."""

    def __init__(self, digest: str, role_id: str):
        self.digest = digest
        self.role_id = role_id
        super().__init__(f"no recorded response for role {role_id!r} (digest {digest})")


class TransportError(DstageError):
    """The live provider could not be reached after retries."""


class GatewayConfigError(DstageError):
    """The gateway is missing configuration required by its mode."""


class CompositionError(DstageError):
    """Script composition failed; carries the partial run for audit."""

    def __init__(self, message: str, run=None):
        self.run = run
        super().__init__(message)


class AllCandidatesAbortedError(CompositionError):
    """Every candidate exhausted its attempt budget before completing."""


class AttemptCapReachedError(DstageError):
    """A rewrite was requested for a candidate that already used every attempt."""


class ScoringError(DstageError):
    """The chief director's response stayed unparseable after a retry."""


class NoAdmissibleScriptError(DstageError):
    """All candidate scripts were eliminated; the requirement needs revision."""


class CastGenerationError(DstageError):
    """The actor factory could not produce a usable cast."""


class UnknownAgentError(DstageError):
    """A constraint, override or state lookup names an agent not in the cast."""


class RunStateError(DstageError):
    """An operation is illegal in the run's current state (sealed, finished, past day)."""


class DegenerateEmbeddingError(DstageError):
    """An embedding vector has zero norm and cannot be compared."""


class PhaseError(DstageError):
    """A service command arrived in a phase that does not accept it."""


class RunNotFoundError(DstageError):
    """No persisted run record exists for the given id."""
