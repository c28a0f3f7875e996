"""
Strict substring constraint for the localization phase.

While a scope is being emitted, every partial scope must remain a contiguous
substring of the reference buffer. The engine keeps the match set (exclusive end
indices j with buffer[j - |s| : j] == s) and derives the valid next tokens from it:
any token that extends a live match, plus the scope-closure token once |s| >= 1.
When the scope closes, the right-most match wins.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Protocol

from revstream_core.automaton import SuffixAutomaton
from revstream_core.errors import EmptyBuffer, EmptySpan, InvalidContinuation, NotASubstring
from revstream_core.models import Backend, Token


class SubstringIndex(Protocol):
    buffer: tuple[Token, ...]

    def root(self) -> Any: ...

    def step(self, cursor: Any, token: Token) -> Any | None: ...

    def continuations(self, cursor: Any) -> frozenset[Token]: ...

    def ends(self, cursor: Any) -> tuple[int, ...]: ...

    def rightmost_end(self, cursor: Any) -> int: ...


class PositionListIndex:
    """Reference backend: the match set is kept as an explicit tuple of end indices.

    The root cursor is None and stands for "every position", i.e. the empty scope.
    """

    def __init__(self, buffer: Sequence[Token]) -> None:
        self.buffer = tuple(buffer)
        self._distinct = frozenset(self.buffer)

    def root(self) -> tuple[int, ...] | None:
        return None

    def step(self, cursor: tuple[int, ...] | None, token: Token) -> tuple[int, ...] | None:
        buffer = self.buffer
        if cursor is None:
            ends = tuple(j + 1 for j, t in enumerate(buffer) if t == token)
        else:
            n = len(buffer)
            ends = tuple(j + 1 for j in cursor if j < n and buffer[j] == token)
        return ends or None

    def continuations(self, cursor: tuple[int, ...] | None) -> frozenset[Token]:
        if cursor is None:
            return self._distinct
        n = len(self.buffer)
        return frozenset(self.buffer[j] for j in cursor if j < n)

    def ends(self, cursor: tuple[int, ...] | None) -> tuple[int, ...]:
        return tuple(range(len(self.buffer))) if cursor is None else cursor

    def rightmost_end(self, cursor: tuple[int, ...] | None) -> int:
        return len(self.buffer) if cursor is None else cursor[-1]


class SuffixAutomatonIndex:
    """Scalable backend: one automaton transition per step, independent of the match count."""

    def __init__(self, buffer: Sequence[Token], automaton: SuffixAutomaton | None = None) -> None:
        self.buffer = tuple(buffer)
        # A supplied automaton must have been built over exactly `buffer`.
        self.automaton = automaton if automaton is not None else SuffixAutomaton(self.buffer)

    def root(self) -> int:
        return 0

    def step(self, cursor: int, token: Token) -> int | None:
        return self.automaton.next[cursor].get(token)

    def continuations(self, cursor: int) -> frozenset[Token]:
        return frozenset(self.automaton.next[cursor])

    def ends(self, cursor: int) -> tuple[int, ...]:
        if cursor == 0:
            return tuple(range(len(self.buffer)))
        return self.automaton.end_positions(cursor)

    def rightmost_end(self, cursor: int) -> int:
        return self.automaton.rightmost_end(cursor)


def build_index(buffer: Sequence[Token], backend: Backend = Backend.POSITIONS) -> SubstringIndex:
    if backend is Backend.AUTOMATON:
        return SuffixAutomatonIndex(buffer)
    return PositionListIndex(buffer)


@dataclass(frozen=True, slots=True)
class MatchSet:
    buffer_len: int
    ends: tuple[int, ...]
    span_len: int


@dataclass(frozen=True, slots=True)
class ValidSet:
    continuations: frozenset[Token]
    closure_allowed: bool

    def allows(self, token: Token) -> bool:
        return token in self.continuations


@dataclass(frozen=True, slots=True)
class LocalizedSpan:
    span: tuple[Token, ...]
    start: int
    end: int


@dataclass(frozen=True, slots=True)
class ConstraintState:
    """Value-semantics localization state; `advance` returns a new state."""

    index: SubstringIndex
    cursor: Any
    span: tuple[Token, ...] = ()

    @property
    def span_len(self) -> int:
        return len(self.span)

    @property
    def buffer(self) -> tuple[Token, ...]:
        return self.index.buffer

    @property
    def valid_set(self) -> ValidSet:
        return ValidSet(continuations=self.index.continuations(self.cursor), closure_allowed=self.span_len >= 1)

    @property
    def match_set(self) -> MatchSet:
        return MatchSet(buffer_len=len(self.index.buffer), ends=self.index.ends(self.cursor), span_len=self.span_len)


def start_constraint(index: SubstringIndex) -> ConstraintState:
    if not index.buffer:
        raise EmptyBuffer("A revision cannot target an empty buffer")
    return ConstraintState(index=index, cursor=index.root())


def open_constraint(buffer: Sequence[Token], backend: Backend = Backend.POSITIONS) -> ConstraintState:
    """Start localization over `buffer`: every distinct buffer token may open the scope."""
    if not buffer:
        raise EmptyBuffer("A revision cannot target an empty buffer")
    return start_constraint(build_index(buffer, backend))


def advance(state: ConstraintState, token: Token) -> ConstraintState:
    cursor = state.index.step(state.cursor, token)
    if cursor is None:
        raise InvalidContinuation(f"Token {token!r} does not extend any match of the partial scope")
    return ConstraintState(index=state.index, cursor=cursor, span=(*state.span, token))


def close_constraint(state: ConstraintState) -> LocalizedSpan:
    """Finalize the scope at its right-most occurrence: window [j* - |s|, j*)."""
    if state.span_len == 0:
        raise EmptySpan("Cannot close an empty scope")
    end = state.index.rightmost_end(state.cursor)
    return LocalizedSpan(span=state.span, start=end - state.span_len, end=end)


def localize(buffer: Sequence[Token], span: Sequence[Token], backend: Backend = Backend.POSITIONS) -> LocalizedSpan:
    """Run a whole span through the constraint and return its right-most window."""
    state = open_constraint(buffer, backend)
    for token in span:
        state = advance(state, token)
    return close_constraint(state)


def rightmost_end(buffer: Sequence[Token], span: Sequence[Token], backend: Backend = Backend.POSITIONS) -> int | None:
    """End index of the right-most occurrence of `span`, or None when it does not occur."""
    try:
        return localize(buffer, span, backend).end
    except (EmptyBuffer, InvalidContinuation, EmptySpan):
        return None


class LiveIndex:
    """Substring index that follows a growing buffer across episodes.

    With the automaton backend the automaton is built on the first `open` and then
    extended online by `append`, so later scopes do not rebuild it. A splice marks it
    stale and the next `open` rebuilds. The position backend is made fresh per scope.
    """

    def __init__(self, backend: Backend = Backend.POSITIONS) -> None:
        self.backend = backend
        self._automaton: SuffixAutomaton | None = None

    def append(self, token: Token) -> None:
        if self._automaton is not None:
            self._automaton.extend(token)

    def invalidate(self) -> None:
        self._automaton = None

    def open(self, buffer: Sequence[Token]) -> ConstraintState:
        if self.backend is not Backend.AUTOMATON:
            return open_constraint(buffer, self.backend)
        if not buffer:
            raise EmptyBuffer("A revision cannot target an empty buffer")
        if self._automaton is None or self._automaton.size != len(buffer):
            self._automaton = SuffixAutomaton(buffer)
        return start_constraint(SuffixAutomatonIndex(buffer, self._automaton))

    def localize(self, buffer: Sequence[Token], span: Sequence[Token]) -> LocalizedSpan:
        state = self.open(buffer)
        for token in span:
            state = advance(state, token)
        return close_constraint(state)


def brute_force_valid_set(buffer: Sequence[Token], partial: Sequence[Token]) -> ValidSet:
    """Naive-scan oracle for the incremental engine."""
    buffer = tuple(buffer)
    partial = tuple(partial)
    n, m = len(buffer), len(partial)

    found = False
    continuations = set()
    for i in range(n - m + 1):
        if buffer[i : i + m] == partial:
            found = True
            if i + m < n:
                continuations.add(buffer[i + m])

    if not found:
        raise NotASubstring(f"Partial scope of {m} tokens does not occur in the buffer")
    return ValidSet(continuations=frozenset(continuations), closure_allowed=m >= 1)
