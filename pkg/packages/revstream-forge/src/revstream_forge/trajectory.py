"""
Linearize a function pair into a revision trajectory.

The vulnerable tokens are emitted in order. After each hunk's window, a trigger
latency d in [0, k] is drawn and the episode follows d more code tokens. d is clamped
so the trigger fires before the next hunk begins and before the function ends.
At trigger time the buffer holds the vulnerable prefix with earlier hunks already
patched; the renderer patches the right-most occurrence of the scope, so the scope is
extended to the left until that occurrence is the hunk itself.
"""

import hashlib
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from revstream_core.constraint import rightmost_end
from revstream_core.episode import detokenize, from_text, serialize, to_text, tokenize
from revstream_core.models import (
    DEFAULT_SENTINELS,
    DiffHunk,
    FunctionPair,
    RevisionEpisode,
    SentinelSet,
    Token,
    TokenizerProfile,
    Trajectory,
    TrajectoryItem,
    TrajectoryRecord,
)
from revstream_core.renderer import render

from revstream_forge.errors import RoundTripMismatch, ScopeAmbiguityUnresolvable

logger = logging.getLogger(__name__)

DEFAULT_LATENCY_K = 8


def record_rng(seed: int, record_id: str) -> np.random.Generator:
    """Generator that depends only on (seed, record id), independent of processing order."""
    digest = hashlib.sha256(record_id.encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "big")])


def disambiguate(buffer: Sequence[Token], start: int, end: int) -> int:
    """
    Smallest start' <= start such that buffer[start':end] has its right-most occurrence ending at `end`.

    Raises ScopeAmbiguityUnresolvable when even buffer[0:end] also occurs further right.
    """
    width = end - start
    span = tuple(buffer[start:end])
    later = [j for j in range(end + 1, len(buffer) + 1) if j >= width and tuple(buffer[j - width : j]) == span]

    while later:
        if start == 0:
            raise ScopeAmbiguityUnresolvable(f"Scope [{start}, {end}) still occurs further right at the function start")
        start -= 1
        width += 1
        later = [j for j in later if j >= width and buffer[j - width] == buffer[start]]
    return start


@dataclass(frozen=True, slots=True)
class Linearization:
    items: tuple[TrajectoryItem, ...]
    latencies: tuple[int, ...]
    fallbacks: int


def linearize(
    vulnerable: Sequence[Token],
    hunks: Sequence[DiffHunk],
    latency_k: int = DEFAULT_LATENCY_K,
    rng: np.random.Generator | None = None,
    latency_fallback: bool = False,
) -> Linearization:
    """Interleave the vulnerable tokens with one episode per hunk."""
    if latency_k < 0:
        raise ValueError("latency_k cannot be negative")
    rng = rng if rng is not None else np.random.default_rng(0)
    hunks = sorted(hunks, key=lambda h: h.vul_start)
    n = len(vulnerable)

    items: list[TrajectoryItem] = []
    buffer: list[Token] = []
    latencies: list[int] = []
    fallbacks = 0
    emitted = 0
    offset = 0  # length change from hunks already applied

    for i, hunk in enumerate(hunks):
        next_start = hunks[i + 1].vul_start if i + 1 < len(hunks) else n
        drawn = int(rng.integers(0, latency_k + 1))
        latency = min(drawn, next_start - hunk.vul_end, n - hunk.vul_end)

        start, end = hunk.vul_start + offset, hunk.vul_end + offset
        trigger_at = hunk.vul_end + latency
        tail = list(vulnerable[emitted:trigger_at])
        candidate = buffer + tail

        try:
            scope_start = disambiguate(candidate, start, end)
        except ScopeAmbiguityUnresolvable:
            if not latency_fallback or latency == 0:
                raise
            # At latency 0 the window is the buffer suffix, so the right-most match is the hunk.
            fallbacks += 1
            latency = 0
            trigger_at = hunk.vul_end
            tail = list(vulnerable[emitted:trigger_at])
            candidate = buffer + tail
            scope_start = disambiguate(candidate, start, end)

        items.extend(tail)
        buffer = candidate
        emitted = trigger_at

        context = tuple(buffer[scope_start:start])
        episode = RevisionEpisode(scope=(*context, *hunk.del_span), patch=(*context, *hunk.ins_span))
        if rightmost_end(buffer, episode.scope) != end:
            raise ScopeAmbiguityUnresolvable(f"Scope of hunk at [{hunk.vul_start}, {hunk.vul_end}) resolves elsewhere")
        items.append(episode)
        buffer[scope_start:end] = episode.patch
        offset += len(hunk.ins_span) - len(hunk.del_span)
        latencies.append(latency)

    items.extend(vulnerable[emitted:])
    return Linearization(items=tuple(items), latencies=tuple(latencies), fallbacks=fallbacks)


def build_trajectory(
    pair: FunctionPair,
    hunks: Sequence[DiffHunk],
    latency_k: int = DEFAULT_LATENCY_K,
    seed: int = 0,
    profile: TokenizerProfile = TokenizerProfile.CHAR,
    latency_fallback: bool = False,
    spec: str = "",
) -> TrajectoryRecord:
    linearization = linearize(tokenize(pair.vulnerable, profile), hunks, latency_k, record_rng(seed, pair.id), latency_fallback)
    return TrajectoryRecord.from_pair(
        pair,
        Trajectory(items=linearization.items),
        spec=spec,
        latency_k=latency_k,
        profile=profile,
        latency_fallbacks=linearization.fallbacks,
    )


def verify_record(record: TrajectoryRecord, patched: str, sentinels: SentinelSet = DEFAULT_SENTINELS) -> None:
    """The stored text form must render back to the patched function byte for byte."""
    trajectory = from_text(to_text(record.trajectory, sentinels), record.meta.profile, sentinels)
    rendered = detokenize(render(serialize(trajectory, sentinels), sentinels=sentinels).buffer)
    if rendered != patched:
        raise RoundTripMismatch(f"Record {record.id} renders to {len(rendered)} chars, expected {len(patched)}")

