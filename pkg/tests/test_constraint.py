import random
import time

import pytest
from revstream_core.automaton import SuffixAutomaton
from revstream_core.constraint import (
    advance,
    brute_force_valid_set,
    LiveIndex,
    close_constraint,
    localize,
    open_constraint,
    rightmost_end,
)
from revstream_core.errors import EmptyBuffer, EmptySpan, InvalidContinuation, NotASubstring
from revstream_core.models import Backend

from tests.helpers import naive_ends

BACKENDS = list(Backend)


def random_case(rng: random.Random) -> tuple[list[str], list[str]]:
    alphabet = "abcdefgh"[: rng.randint(1, 8)]
    buffer = [rng.choice(alphabet) for _ in range(rng.randint(1, 64))]
    i = rng.randrange(len(buffer))
    j = rng.randint(i, min(len(buffer), i + 6))
    return buffer, buffer[i:j]


@pytest.mark.parametrize("backend", BACKENDS)
def test_valid_set_matches_naive_scan(rng, backend):
    for _ in range(1000):
        buffer, partial = random_case(rng)
        state = open_constraint(buffer, backend)
        for token in partial:
            state = advance(state, token)

        assert state.valid_set == brute_force_valid_set(buffer, partial)
        if partial:
            assert state.match_set.ends == tuple(naive_ends(buffer, partial))
            assert close_constraint(state).end == max(naive_ends(buffer, partial))


@pytest.mark.parametrize("backend", BACKENDS)
def test_walks_reach_exactly_the_substrings(rng, backend):
    for _ in range(500):
        buffer = [rng.choice("abc") for _ in range(rng.randint(1, 12))]
        substrings = {tuple(buffer[i:j]) for i in range(len(buffer)) for j in range(i + 1, len(buffer) + 1)}

        reached = set()
        stack = [open_constraint(buffer, backend)]
        while stack:
            state = stack.pop()
            if state.valid_set.closure_allowed:
                reached.add(state.span)
            stack.extend(advance(state, token) for token in state.valid_set.continuations)

        assert reached == substrings


def test_backends_agree(rng):
    for _ in range(300):
        buffer, partial = random_case(rng)
        if not partial:
            continue
        by_positions = localize(buffer, partial, Backend.POSITIONS)
        by_automaton = localize(buffer, partial, Backend.AUTOMATON)
        assert by_positions == by_automaton


def test_rightmost_window():
    buffer = list("abcab")
    span = localize(buffer, ["a", "b"])
    assert (span.start, span.end) == (3, 5)


def test_rightmost_end_helper():
    assert rightmost_end(list("abcab"), ["a", "b"]) == 5
    assert rightmost_end(list("abcab"), ["b", "a"]) is None
    assert rightmost_end([], ["a"]) is None
    assert rightmost_end(list("abc"), []) is None


def test_root_allows_every_distinct_token_but_not_closure():
    valid = open_constraint(list("abca")).valid_set
    assert valid.continuations == frozenset("abc")
    assert not valid.closure_allowed


def test_span_at_buffer_end_has_no_continuation():
    state = advance(open_constraint(list("abc")), "c")
    assert state.valid_set.continuations == frozenset()
    assert state.valid_set.closure_allowed


class TestErrors:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_empty_buffer(self, backend):
        with pytest.raises(EmptyBuffer):
            open_constraint([], backend)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_invalid_continuation(self, backend):
        state = advance(open_constraint(list("abc"), backend), "a")
        with pytest.raises(InvalidContinuation):
            advance(state, "c")

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_close_empty_span(self, backend):
        with pytest.raises(EmptySpan):
            close_constraint(open_constraint(list("abc"), backend))

    def test_oracle_rejects_non_substring(self):
        with pytest.raises(NotASubstring):
            brute_force_valid_set(list("abc"), ["c", "a"])


def test_state_is_a_value():
    root = open_constraint(list("abab"))
    after_a = advance(root, "a")
    advance(after_a, "b")
    assert root.span == ()
    assert after_a.span == ("a",)


def test_automaton_end_positions(rng):
    for _ in range(100):
        buffer = [rng.choice("ab") for _ in range(rng.randint(1, 30))]
        automaton = SuffixAutomaton(buffer)
        i = rng.randrange(len(buffer))
        span = buffer[i : i + rng.randint(1, 4)]
        state = automaton.walk(span)
        assert automaton.end_positions(state) == tuple(naive_ends(buffer, span))
        assert automaton.rightmost_end(state) == max(naive_ends(buffer, span))
        assert not automaton.is_substring(["z"])


def test_automaton_steps_on_large_buffer():
    rng = random.Random(7)
    buffer = [rng.choice("abcdefgh") for _ in range(100_000)]
    state = open_constraint(buffer, Backend.AUTOMATON)
    span = buffer[50_000:52_000]

    started = time.perf_counter()
    for token in span:
        state = advance(state, token)
    elapsed = time.perf_counter() - started

    assert close_constraint(state).end == 52_000
    assert len(span) / elapsed >= 1_000


@pytest.mark.parametrize("backend", BACKENDS)
def test_live_index_tracks_edits(rng, backend):
    buffer = [rng.choice("abcd") for _ in range(20)]
    live = LiveIndex(backend)
    for _ in range(200):
        if rng.random() < 0.8:
            token = rng.choice("abcd")
            buffer.append(token)
            live.append(token)
        else:
            start = rng.randrange(len(buffer))
            buffer[start : start + rng.randint(0, 3)] = [rng.choice("abcd") for _ in range(rng.randint(1, 3))]
            live.invalidate()

        i = rng.randrange(len(buffer))
        span = buffer[i : i + rng.randint(1, 5)]
        assert live.localize(buffer, span) == localize(buffer, span, Backend.POSITIONS)


def test_live_index_reuses_automaton_across_appends():
    buffer = list("abcab")
    live = LiveIndex(Backend.AUTOMATON)
    first = live.open(buffer)
    for token in "cabx":
        buffer.append(token)
        live.append(token)

    second = live.open(buffer)
    assert second.index.automaton is first.index.automaton
    assert close_constraint(advance(advance(second, "a"), "b")).end == 8

    buffer[0:2] = ["z"]
    live.invalidate()
    third = live.open(buffer)
    assert third.index.automaton is not first.index.automaton
    assert close_constraint(advance(third, "z")).end == 1
