"""Exception types shared across the engine."""


class LifespaceError(Exception):
    """Base class for all engine errors."""


class MapParseError(LifespaceError):
    """The map document is malformed."""


class MapValidationError(LifespaceError):
    """The map document parsed but violates a structural invariant."""


class OutOfBoundsError(LifespaceError):
    """A position lies outside the map."""


class NoRouteError(LifespaceError):
    """No walkable route exists between two tiles."""


class UnknownSceneError(LifespaceError):
    """A scene id is not present in the map."""


class MissingSceneError(LifespaceError):
    """The map lacks a scene that the roster requires."""


class IllegalTransitionError(LifespaceError):
    """An agent state operation was applied in an incompatible mode."""


class TrackMismatchError(LifespaceError):
    """A memory event's kind does not belong to its declared track."""


class PreconditionError(LifespaceError):
    """An operation was called with arguments that violate its contract."""


class ProviderUnavailableError(LifespaceError):
    """A language-model provider failed after exhausting retries."""


class UnknownAgentError(LifespaceError):
    """An agent id is not present in the roster."""


class InvalidSceneError(LifespaceError):
    """A plan names a scene that does not exist in the map."""


class ClosedSessionError(LifespaceError):
    """A chat session is closed and accepts no further messages."""


class CorruptSnapshotError(LifespaceError):
    """A snapshot file is unreadable or fails integrity checks."""


class CorruptLogError(LifespaceError):
    """An event log file is unreadable or structurally broken."""


class EngineNotStartedError(LifespaceError):
    """The service was queried before the engine was initialised."""
