"""
Token-level diff between the vulnerable and patched versions of a function.

Hunks come from a Myers O(ND) longest common subsequence over tokens, so they can
be sub-line. Every hunk deletes at least one token: a pure insertion is anchored
on the common token before it (or after it, at the very start of the function).
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from revstream_core.episode import tokenize
from revstream_core.models import DEFAULT_SENTINELS, DiffHunk, FunctionPair, SentinelSet, Token, TokenizerProfile

from revstream_forge.errors import EmptySource, IdenticalPair, SentinelInSource

logger = logging.getLogger(__name__)


def longest_common_subsequence(xs: Sequence[Token], ys: Sequence[Token]) -> list[tuple[int, int]]:
    """Matched index pairs (i, j) with xs[i] == ys[j], increasing in both."""
    if not xs or not ys:
        return []

    total = len(xs) + len(ys)
    frontier = [0] * (2 * total + 1)
    candidates: list[tuple | None] = [None] * (2 * total + 1)
    for d in range(total + 1):
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and frontier[total + k - 1] < frontier[total + k + 1]):
                index = total + k + 1
                x = frontier[index]
            else:
                index = total + k - 1
                x = frontier[index] + 1
            y = x - k
            chain = candidates[index]
            while x < len(xs) and y < len(ys) and xs[x] == ys[y]:
                chain = ((x, y), chain)
                x += 1
                y += 1
            if x >= len(xs) and y >= len(ys):
                matches = []
                while chain:
                    matches.append(chain[0])
                    chain = chain[1]
                matches.reverse()
                return matches
            frontier[total + k] = x
            candidates[total + k] = chain
    return []


@dataclass(frozen=True, slots=True)
class Region:
    """A maximal non-matching region: xs[i : i + del_len] became ys[j : j + ins_len]."""

    i: int
    del_len: int
    j: int
    ins_len: int


def diff_regions(xs: Sequence[Token], ys: Sequence[Token]) -> list[Region]:
    i = j = -1
    matches = longest_common_subsequence(xs, ys)
    matches.append((len(xs), len(ys)))
    regions = []
    for mi, mj in matches:
        if mi - i > 1 or mj - j > 1:
            regions.append(Region(i + 1, mi - i - 1, j + 1, mj - j - 1))
        i, j = mi, mj
    return regions


def merge_regions(regions: Sequence[Region], gap: int) -> list[Region]:
    """Merge neighbours separated by fewer than `gap` common tokens."""
    merged: list[Region] = []
    for region in regions:
        if merged:
            last = merged[-1]
            if region.i - (last.i + last.del_len) < gap:
                merged[-1] = Region(last.i, region.i + region.del_len - last.i, last.j, region.j + region.ins_len - last.j)
                continue
        merged.append(region)
    return merged


def anchor(region: Region, xs: Sequence[Token]) -> Region:
    """Give a pure insertion a one-token scope taken from the neighbouring common token."""
    if region.del_len > 0:
        return region
    if region.i > 0:
        return Region(region.i - 1, 1, region.j - 1, region.ins_len + 1)
    return Region(0, 1, region.j, region.ins_len + 1)


def diff_tokens(xs: Sequence[Token], ys: Sequence[Token], merge_gap: int = 0) -> list[DiffHunk]:
    if not xs:
        raise EmptySource("The vulnerable version has no tokens")
    if list(xs) == list(ys):
        raise IdenticalPair("Vulnerable and patched versions are identical")

    regions: list[Region] = []
    for region in (anchor(r, xs) for r in merge_regions(diff_regions(xs, ys), merge_gap)):
        # Anchoring at the function start can reuse the token a following insertion anchors on.
        if regions and region.i < regions[-1].i + regions[-1].del_len:
            last = regions[-1]
            del_end = max(last.i + last.del_len, region.i + region.del_len)
            ins_end = max(last.j + last.ins_len, region.j + region.ins_len)
            regions[-1] = Region(last.i, del_end - last.i, last.j, ins_end - last.j)
        else:
            regions.append(region)

    return [
        DiffHunk(
            vul_start=r.i,
            vul_end=r.i + r.del_len,
            del_span=tuple(xs[r.i : r.i + r.del_len]),
            ins_span=tuple(ys[r.j : r.j + r.ins_len]),
        )
        for r in regions
    ]


def check_source(text: str, sentinels: SentinelSet = DEFAULT_SENTINELS) -> None:
    for spelling in sentinels.spellings():
        if spelling in text:
            raise SentinelInSource(f"Source text contains the reserved spelling {spelling!r}")


def diff_function_pair(
    pair: FunctionPair,
    profile: TokenizerProfile = TokenizerProfile.CHAR,
    merge_gap: int = 0,
    sentinels: SentinelSet = DEFAULT_SENTINELS,
) -> list[DiffHunk]:
    """Minimal-edit hunks turning the vulnerable tokens into the patched tokens, sorted by position."""
    if pair.vulnerable == pair.patched:
        raise IdenticalPair(f"Pair {pair.id} has identical versions")
    check_source(pair.vulnerable, sentinels)
    check_source(pair.patched, sentinels)

    hunks = diff_tokens(tokenize(pair.vulnerable, profile), tokenize(pair.patched, profile), merge_gap)
    logger.debug(f"Pair {pair.id}: {len(hunks)} hunk(s)")
    return hunks


def apply_hunks(tokens: Sequence[Token], hunks: Sequence[DiffHunk]) -> list[Token]:
    """Replace every hunk window by its inserted span; hunks must be disjoint."""
    result = list(tokens)
    for hunk in sorted(hunks, key=lambda h: h.vul_start, reverse=True):
        if tuple(result[hunk.vul_start : hunk.vul_end]) != hunk.del_span:
            raise ValueError(f"Hunk at [{hunk.vul_start}, {hunk.vul_end}) does not match the tokens")
        result[hunk.vul_start : hunk.vul_end] = hunk.ins_span
    return result
