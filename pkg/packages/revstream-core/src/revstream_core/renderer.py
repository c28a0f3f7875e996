"""
Deterministic renderer: compiles a revision stream into the user-facing program.

- Code tokens in the transparent phase are appended to the buffer immediately.
- Between a trigger and its patch-close sentinel nothing reaches the buffer; the
  scope and patch are held as hidden state.
- On patch-close the revision is spliced in atomically at the right-most occurrence
  of the scope. On any failure the buffer keeps its pre-trigger content.
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from revstream_core.buffer import BufferKind, TokenBuffer, make_buffer
from revstream_core.constraint import LiveIndex, localize
from revstream_core.episode import Phase, next_phase
from revstream_core.errors import ConstraintError, GrammarError, ScopeNotFound, UnterminatedEpisode
from revstream_core.models import (
    DEFAULT_SENTINELS,
    AppendEvent,
    Backend,
    DiscardReason,
    RenderEvent,
    RenderMode,
    RevisionAppliedEvent,
    RevisionDiscardedEvent,
    RevisionEpisode,
    SentinelRole,
    SentinelSet,
    Token,
    Trajectory,
)


@dataclass(frozen=True, slots=True)
class RenderState:
    """Snapshot of a renderer session"""

    buffer: tuple[Token, ...]
    phase: Phase
    pending_scope: tuple[Token, ...]
    pending_patch: tuple[Token, ...]
    events: tuple[RenderEvent, ...]


@dataclass(frozen=True, slots=True)
class RenderResult:
    buffer: tuple[Token, ...]
    events: list[RenderEvent] = field(default_factory=list)


class StreamRenderer:
    """One decoding session's renderer. Feed tokens one at a time; not shared across tasks."""

    def __init__(
        self,
        sentinels: SentinelSet = DEFAULT_SENTINELS,
        mode: RenderMode = RenderMode.STRICT,
        buffer_kind: BufferKind = BufferKind.LIST,
        backend: Backend = Backend.POSITIONS,
        prefix: Iterable[Token] = (),
    ) -> None:
        self.sentinels = sentinels
        self.mode = mode
        self.backend = backend
        self.logger = logging.getLogger(__name__)
        self.buffer: TokenBuffer = make_buffer(buffer_kind, prefix)
        self.index = LiveIndex(backend)
        self.phase = Phase.TRANSPARENT
        self.pending_scope: list[Token] = []
        self.pending_patch: list[Token] = []
        self.events: list[RenderEvent] = []
        self.position = 0
        self._roles = sentinels.role_table()

    @property
    def state(self) -> RenderState:
        return RenderState(
            buffer=self.buffer.tokens(),
            phase=self.phase,
            pending_scope=tuple(self.pending_scope),
            pending_patch=tuple(self.pending_patch),
            events=tuple(self.events),
        )

    def role_of(self, token: Token) -> SentinelRole | None:
        return self._roles.get(token)

    def feed(self, token: Token) -> None:
        index = self.position
        self.position += 1
        role = self._roles.get(token)

        try:
            new_phase = next_phase(self.phase, role, index, token, len(self.pending_scope))
        except GrammarError as e:
            if self.mode is RenderMode.STRICT:
                raise
            self._discard(index, DiscardReason.MALFORMED, str(e))
            return

        if role is None:
            if new_phase is Phase.TRANSPARENT:
                self.buffer.append(token)
                self.index.append(token)
                self.events.append(AppendEvent(index=index, token=token))
            elif new_phase is Phase.IN_SCOPE:
                self.pending_scope.append(token)
            else:
                self.pending_patch.append(token)
            self.phase = new_phase
        elif role is SentinelRole.PATCH_CLOSE:
            self.commit(index)
        else:
            self.phase = new_phase

    def commit(self, index: int | None = None) -> None:
        """Splice the pending revision into the buffer at the right-most scope occurrence."""
        index = self.position - 1 if index is None else index
        scope = tuple(self.pending_scope)
        patch = tuple(self.pending_patch)

        try:
            window = self.index.localize(self.buffer.tokens(), scope)
        except ConstraintError as e:
            if self.mode is RenderMode.STRICT:
                raise ScopeNotFound(scope) from e
            self._discard(index, DiscardReason.SCOPE_NOT_FOUND, f"scope of {len(scope)} tokens not in buffer")
            return

        self.buffer.splice(window.start, window.end, patch)
        self.index.invalidate()
        self.events.append(
            RevisionAppliedEvent(index=index, window_start=window.start, window_end=window.end, old_span=scope, new_span=patch)
        )
        self.logger.debug(f"Applied revision at [{window.start}, {window.end}) replacing {len(scope)} tokens with {len(patch)}")
        self._reset()

    def finish(self) -> RenderResult:
        """End of stream: an open episode is an error (strict) or dropped (lenient)."""
        if self.phase.in_episode:
            if self.mode is RenderMode.STRICT:
                raise UnterminatedEpisode("Stream ended inside an episode", self.position)
            self._discard(self.position, DiscardReason.UNTERMINATED, "stream ended inside an episode")
        return RenderResult(buffer=self.buffer.tokens(), events=list(self.events))

    def _discard(self, index: int, reason: DiscardReason, detail: str) -> None:
        self.logger.debug(f"Discarding revision at token {index}: {detail}")
        self.events.append(RevisionDiscardedEvent(index=index, reason=reason, detail=detail))
        self._reset()

    def _reset(self) -> None:
        self.phase = Phase.TRANSPARENT
        self.pending_scope = []
        self.pending_patch = []


def render(
    stream: Iterable[Token],
    mode: RenderMode = RenderMode.STRICT,
    sentinels: SentinelSet = DEFAULT_SENTINELS,
    buffer_kind: BufferKind = BufferKind.LIST,
    backend: Backend = Backend.POSITIONS,
) -> RenderResult:
    """Fold the renderer over a whole stream, starting from an empty buffer."""
    renderer = StreamRenderer(sentinels=sentinels, mode=mode, buffer_kind=buffer_kind, backend=backend)
    for token in stream:
        renderer.feed(token)
    return renderer.finish()


def apply_episodes(trajectory: Trajectory, backend: Backend = Backend.POSITIONS) -> tuple[Token, ...]:
    """Structural semantics: append code tokens, apply each episode to the growing buffer."""
    buffer: list[Token] = []
    for item in trajectory.items:
        if isinstance(item, RevisionEpisode):
            try:
                window = localize(buffer, item.scope, backend)
            except ConstraintError as e:
                raise ScopeNotFound(item.scope) from e
            buffer[window.start : window.end] = item.patch
        else:
            buffer.append(item)
    return tuple(buffer)


def draft_buffer(trajectory: Trajectory) -> tuple[Token, ...]:
    """The program as emitted before any revision: code tokens only."""
    return tuple(trajectory.code_tokens)


def events_to_jsonl(events: Sequence[RenderEvent]) -> str:
    return "".join(event.model_dump_json() + "\n" for event in events)
