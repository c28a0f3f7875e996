"""Exception hierarchy shared by every revstream component."""

from typing import Any


class RevstreamError(Exception):
    """Base class for all revstream errors."""


class GrammarError(RevstreamError, ValueError):
    """A token stream violates the revision-episode grammar."""

    def __init__(self, message: str, index: int | None = None, token: str | None = None) -> None:
        self.index = index
        self.token = token
        location = f" at token {index}" if index is not None else ""
        shown = f" ({token!r})" if token is not None else ""
        super().__init__(f"{message}{location}{shown}")


class UnterminatedEpisode(GrammarError):
    pass


class NestedEpisode(GrammarError):
    pass


class SentinelOutOfContext(GrammarError):
    pass


class EmptyScope(GrammarError):
    pass


class UnexpectedToken(GrammarError):
    """A code token appeared where an episode delimiter is mandatory."""


class PolicyExhausted(GrammarError):
    """The token source ended while an episode was still open."""


class ConstraintError(RevstreamError, ValueError):
    pass


class EmptyBuffer(ConstraintError):
    pass


class InvalidContinuation(ConstraintError):
    pass


class EmptySpan(ConstraintError):
    pass


class NotASubstring(ConstraintError):
    pass


class ScopeNotFound(RevstreamError):
    def __init__(self, scope: Any) -> None:
        self.scope = tuple(scope)
        super().__init__(f"Scope of {len(self.scope)} tokens does not occur in the buffer")


class InvalidScript(RevstreamError):
    """A scripted policy proposed a token outside the valid set."""

    def __init__(self, message: str, index: int, token: str) -> None:
        self.index = index
        self.token = token
        super().__init__(f"{message} at step {index} ({token!r})")


class DimensionMismatch(RevstreamError, ValueError):
    pass


class EmptyDescription(RevstreamError, ValueError):
    pass


class ExternalCheckerUnavailable(RevstreamError):
    pass
