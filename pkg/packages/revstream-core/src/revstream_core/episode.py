"""
Episode grammar over the augmented vocabulary.

A trajectory is a flat stream of code tokens interleaved with revision episodes:

    trigger, scope_open, s..., scope_close, patch_open, s'..., patch_close

This module converts between that linear stream and the structured Trajectory,
and provides the character/word tokenizer profiles used everywhere else.
"""

import logging
import re
from collections.abc import Iterable, Sequence
from enum import Enum
from functools import lru_cache

from revstream_core.errors import EmptyScope, GrammarError, NestedEpisode, SentinelOutOfContext, UnexpectedToken, UnterminatedEpisode
from revstream_core.models import (
    DEFAULT_SENTINELS,
    RenderMode,
    RevisionEpisode,
    SentinelRole,
    SentinelSet,
    Token,
    TokenizerProfile,
    Trajectory,
)

logger = logging.getLogger(__name__)

SENTINEL_DESCRIPTIONS: dict[SentinelRole, str] = {
    SentinelRole.TRIGGER: "Triggers a backtracking operation to return to a previous context point.",
    SentinelRole.SCOPE_OPEN: "Localizes and quotes the specific vulnerable code segment from the context.",
    SentinelRole.SCOPE_CLOSE: "Ends the localization of the vulnerable segment.",
    SentinelRole.PATCH_OPEN: "Specifies the repaired code solution to substitute the localized vulnerability.",
    SentinelRole.PATCH_CLOSE: "Ends the repaired code definition.",
}

_WORD_PATTERN = re.compile(r"\s+|\S+")


class Phase(str, Enum):
    """Position of a stream reader inside the episode grammar"""

    TRANSPARENT = "transparent"
    TRIGGERED = "triggered"  # trigger seen, scope_open expected
    IN_SCOPE = "in_scope"
    SCOPED = "scoped"  # scope closed, patch_open expected
    IN_PATCH = "in_patch"

    @property
    def in_episode(self) -> bool:
        return self is not Phase.TRANSPARENT


def next_phase(phase: Phase, role: SentinelRole | None, index: int, token: Token, scope_len: int) -> Phase:
    """Grammar transition for one token; `role` is None for code tokens."""
    if role is SentinelRole.TRIGGER and phase.in_episode:
        raise NestedEpisode("Trigger inside an open episode", index, token)

    match phase:
        case Phase.TRANSPARENT:
            if role is None:
                return Phase.TRANSPARENT
            if role is SentinelRole.TRIGGER:
                return Phase.TRIGGERED
        case Phase.TRIGGERED:
            if role is SentinelRole.SCOPE_OPEN:
                return Phase.IN_SCOPE
            if role is None:
                raise UnexpectedToken("Expected scope delimiter after trigger", index, token)
        case Phase.IN_SCOPE:
            if role is None:
                return Phase.IN_SCOPE
            if role is SentinelRole.SCOPE_CLOSE:
                if scope_len == 0:
                    raise EmptyScope("Scope closed without any token", index, token)
                return Phase.SCOPED
        case Phase.SCOPED:
            if role is SentinelRole.PATCH_OPEN:
                return Phase.IN_PATCH
            if role is None:
                raise UnexpectedToken("Expected patch delimiter after scope", index, token)
        case Phase.IN_PATCH:
            if role is None:
                return Phase.IN_PATCH
            if role is SentinelRole.PATCH_CLOSE:
                return Phase.TRANSPARENT

    raise SentinelOutOfContext(f"Sentinel not allowed in phase {phase.value}", index, token)


def episode_tokens(episode: RevisionEpisode, sentinels: SentinelSet = DEFAULT_SENTINELS) -> list[Token]:
    return [
        sentinels.trigger,
        sentinels.scope_open,
        *episode.scope,
        sentinels.scope_close,
        sentinels.patch_open,
        *episode.patch,
        sentinels.patch_close,
    ]


def serialize(trajectory: Trajectory, sentinels: SentinelSet | None = None) -> list[Token]:
    """Expand a trajectory into its linear token stream, spelled with `sentinels` or the trajectory's own set."""
    if sentinels is not None:
        trajectory = trajectory.with_sentinels(sentinels)
    sentinels = trajectory.sentinels
    stream: list[Token] = []
    for item in trajectory.items:
        if isinstance(item, RevisionEpisode):
            stream.extend(episode_tokens(item, sentinels))
        else:
            stream.append(item)
    return stream


def parse(stream: Iterable[Token], sentinels: SentinelSet = DEFAULT_SENTINELS, mode: RenderMode = RenderMode.STRICT) -> Trajectory:
    """
    Inverse of serialize.

    Strict mode raises on the first grammar violation. Lenient mode drops a malformed
    episode together with the offending token and resumes in the transparent phase;
    a trailing unterminated episode is dropped.
    """
    roles = sentinels.role_table()
    items: list[Token | RevisionEpisode] = []
    scope: list[Token] = []
    patch: list[Token] = []
    phase = Phase.TRANSPARENT
    index = -1

    for index, token in enumerate(stream):
        role = roles.get(token)
        if not token:
            raise UnexpectedToken("Empty token", index, token)
        try:
            new_phase = next_phase(phase, role, index, token, len(scope))
        except GrammarError as e:
            if mode is RenderMode.STRICT:
                raise
            logger.debug(f"Dropping malformed episode: {e}")
            scope, patch = [], []
            phase = Phase.TRANSPARENT
            continue

        if role is None:
            if new_phase is Phase.TRANSPARENT:
                items.append(token)
            elif new_phase is Phase.IN_SCOPE:
                scope.append(token)
            else:
                patch.append(token)
        elif role is SentinelRole.PATCH_CLOSE:
            items.append(RevisionEpisode(scope=tuple(scope), patch=tuple(patch)))
            scope, patch = [], []
        phase = new_phase

    if phase.in_episode:
        if mode is RenderMode.STRICT:
            raise UnterminatedEpisode("Stream ended inside an episode", index + 1)
        logger.debug("Dropping unterminated trailing episode")

    return Trajectory(items=tuple(items), sentinels=sentinels)


def tokenize(text: str, profile: TokenizerProfile = TokenizerProfile.CHAR) -> list[Token]:
    """Split text into tokens; detokenize(tokenize(x)) == x under both profiles."""
    if profile is TokenizerProfile.CHAR:
        return list(text)
    return _WORD_PATTERN.findall(text)


def detokenize(tokens: Iterable[Token]) -> str:
    return "".join(tokens)


@lru_cache(maxsize=16)
def _sentinel_pattern(sentinels: SentinelSet) -> re.Pattern[str]:
    spellings = sorted(sentinels.spellings(), key=len, reverse=True)
    return re.compile("|".join(re.escape(s) for s in spellings))


def tokenize_stream(text: str, profile: TokenizerProfile = TokenizerProfile.CHAR, sentinels: SentinelSet = DEFAULT_SENTINELS) -> list[Token]:
    """Tokenize trajectory text: sentinel spellings become single tokens, the rest follows the profile."""
    tokens: list[Token] = []
    position = 0
    for match in _sentinel_pattern(sentinels).finditer(text):
        tokens.extend(tokenize(text[position : match.start()], profile))
        tokens.append(match.group())
        position = match.end()
    tokens.extend(tokenize(text[position:], profile))
    return tokens


def to_text(trajectory: Trajectory, sentinels: SentinelSet | None = None) -> str:
    return detokenize(serialize(trajectory, sentinels))


def from_text(
    text: str,
    profile: TokenizerProfile = TokenizerProfile.CHAR,
    sentinels: SentinelSet = DEFAULT_SENTINELS,
    mode: RenderMode = RenderMode.STRICT,
) -> Trajectory:
    return parse(tokenize_stream(text, profile, sentinels), sentinels, mode)


def contains_sentinel(tokens: Sequence[Token], sentinels: SentinelSet = DEFAULT_SENTINELS) -> bool:
    spellings = sentinels.spellings()
    return any(token in spellings for token in tokens)
