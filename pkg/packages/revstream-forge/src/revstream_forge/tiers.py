from collections.abc import Iterable, Sequence
from enum import Enum

from revstream_core.models import Tier

MAX_RELAXED_FUNCTIONS = 5
MAX_RELAXED_HUNKS = 5


class TierSelection(str, Enum):
    STRICT = "strict"
    RELAXED = "relaxed"
    BOTH = "both"

    def accepts(self, tier: Tier) -> bool:
        if tier is Tier.REJECTED:
            return False
        if self is TierSelection.BOTH:
            return True
        return tier.value == self.value


def filter_tier(hunk_counts: Sequence[int]) -> Tier:
    """Tier of a commit from the hunk count of every function it modifies."""
    modified = [count for count in hunk_counts if count > 0]
    if len(modified) == 1 and modified[0] == 1:
        return Tier.STRICT
    if 1 <= len(modified) <= MAX_RELAXED_FUNCTIONS and all(count <= MAX_RELAXED_HUNKS for count in modified):
        return Tier.RELAXED
    return Tier.REJECTED


def commit_key(pair_id: str, source_commit: str | None) -> str:
    """Pairs without a source commit form a commit of their own."""
    return source_commit or pair_id


def tier_commits(pairs: Iterable[tuple[str, str | None, int]]) -> dict[str, Tier]:
    """Tier for every commit, given (pair id, source commit, hunk count) per function."""
    counts: dict[str, list[int]] = {}
    for pair_id, source_commit, hunk_count in pairs:
        counts.setdefault(commit_key(pair_id, source_commit), []).append(hunk_count)
    return {commit: filter_tier(hunks) for commit, hunks in counts.items()}
