"""Order-sensitive corpus stages: deduplication, general-instruction replay and mixing."""

import hashlib
import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from revstream_core.episode import tokenize
from revstream_core.models import DiffHunk, RecordKind, RecordMeta, TokenizerProfile, Trajectory, TrajectoryRecord

logger = logging.getLogger(__name__)

_C_BLOCK = re.compile(r"```[ \t]*(c|cpp|c\+\+)[ \t]*\n", re.IGNORECASE)
_SECURITY_TALK = re.compile(
    r"\b(vulnerab\w*|exploit\w*|security|insecure|cve-\d{4}-\d+|cwe-\d+|buffer overflow|use[- ]after[- ]free|injection|sanitiz\w*)\b",
    re.IGNORECASE,
)


def _normalize(tokens: Iterable[str]) -> str:
    return " ".join("".join(tokens).split())


def diff_signature(spans: Iterable[tuple[Sequence[str], Sequence[str]]]) -> str:
    """Hash of the whitespace-collapsed (deleted, inserted) spans, in position order."""
    h = hashlib.sha256()
    for deleted, inserted in spans:
        h.update(_normalize(deleted).encode("utf-8"))
        h.update(b"\x00")
        h.update(_normalize(inserted).encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()


def hunk_signature(hunks: Sequence[DiffHunk]) -> str:
    return diff_signature((h.del_span, h.ins_span) for h in sorted(hunks, key=lambda h: h.vul_start))


def record_signature(record: TrajectoryRecord) -> str:
    if record.meta.diff_signature:
        return record.meta.diff_signature
    return diff_signature((e.scope, e.patch) for e in record.trajectory.episodes)


@dataclass(slots=True)
class DedupStats:
    commit_drops: int = 0
    signature_drops: int = 0


def dedup(records: Iterable[TrajectoryRecord], stats: DedupStats | None = None) -> list[TrajectoryRecord]:
    """Drop repeated commits, then repeated diff signatures. First occurrence wins."""
    stats = stats if stats is not None else DedupStats()

    seen_commits: set[tuple[str, str | None]] = set()
    by_commit: list[TrajectoryRecord] = []
    for record in records:
        # A commit touching several functions keeps one record per function.
        key = (record.meta.source_commit or f"id:{record.id}", record.meta.function)
        if key in seen_commits:
            stats.commit_drops += 1
            logger.debug(f"Dropping {record.id}: duplicate commit {key[0]}")
            continue
        seen_commits.add(key)
        by_commit.append(record)

    seen_signatures: set[str] = set()
    kept: list[TrajectoryRecord] = []
    for record in by_commit:
        signature = record_signature(record)
        if signature in seen_signatures:
            stats.signature_drops += 1
            logger.debug(f"Dropping {record.id}: duplicate diff signature")
            continue
        seen_signatures.add(signature)
        kept.append(record)
    return kept


@dataclass(slots=True)
class MixResult:
    records: list[TrajectoryRecord] = field(default_factory=list)
    revision_remainder: int = 0
    general_remainder: int = 0


def parse_ratio(value: str) -> tuple[int, int]:
    """Parse 'r:g' into a pair of positive integers."""
    try:
        r, g = (int(part) for part in value.split(":"))
    except ValueError as e:
        raise ValueError(f"Mixing ratio must look like r:g, got {value!r}") from e
    if r <= 0 or g <= 0:
        raise ValueError("Mixing ratio parts must be positive")
    return r, g


def mix_corpora(revision: Sequence[TrajectoryRecord], general: Sequence[TrajectoryRecord], ratio: tuple[int, int]) -> MixResult:
    """Emit complete blocks of r revision records followed by g general records until a source runs out."""
    r, g = ratio
    if r <= 0 or g <= 0:
        raise ValueError("Mixing ratio parts must be positive")

    blocks = min(len(revision) // r, len(general) // g)
    result = MixResult(revision_remainder=len(revision) - blocks * r, general_remainder=len(general) - blocks * g)
    for b in range(blocks):
        result.records.extend(revision[b * r : (b + 1) * r])
        result.records.extend(general[b * g : (b + 1) * g])

    if result.revision_remainder or result.general_remainder:
        logger.info(f"Mixing left {result.revision_remainder} revision and {result.general_remainder} general records unused")
    return result


def keep_general_sample(text: str) -> bool:
    """Replay samples must carry C/C++ code and must not discuss security fixes."""
    return bool(_C_BLOCK.search(text)) and not _SECURITY_TALK.search(text)


def general_record(sample: dict[str, Any], profile: TokenizerProfile = TokenizerProfile.CHAR) -> TrajectoryRecord:
    """Episode-free record from an {id, instruction, response} sample."""
    return TrajectoryRecord(
        id=str(sample["id"]),
        spec=sample.get("instruction", ""),
        trajectory=Trajectory(items=tuple(tokenize(sample.get("response", ""), profile))),
        meta=RecordMeta(kind=RecordKind.GENERAL, profile=profile),
    )
