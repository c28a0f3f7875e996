#!/usr/bin/env python3
"""
Dataset build: pairs → diff → tier filter → trajectory → dedup → (mix) → JSONL.

The per-pair map runs in a process pool over pairs sorted by id; everything after it
is a sequential, order-preserving reduce, so output depends only on inputs and seed.
"""

import json
import logging
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from revstream_core.models import FunctionPair, Tier, TokenizerProfile, TrajectoryRecord
from revstream_core.records import record_from_dict, write_records
from revstream_core.utils import iter_jsonl_lines, read_text
from tqdm import tqdm

from revstream_forge.corpus import DedupStats, dedup, general_record, hunk_signature, keep_general_sample, mix_corpora
from revstream_forge.diff import diff_function_pair
from revstream_forge.errors import EmptySource, IdenticalPair, RoundTripMismatch, ScopeAmbiguityUnresolvable, SentinelInSource
from revstream_forge.tiers import TierSelection, commit_key, tier_commits
from revstream_forge.trajectory import DEFAULT_LATENCY_K, build_trajectory, verify_record


class BuildConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tier: TierSelection = TierSelection.BOTH
    latency_k: int = Field(DEFAULT_LATENCY_K, ge=0)
    seed: int = 0
    profile: TokenizerProfile = TokenizerProfile.CHAR
    merge_gap: int = Field(0, ge=0)
    latency_fallback: bool = False
    ratio: tuple[int, int] | None = None
    workers: int = Field(1, ge=1)


class BuildSummary(BaseModel):
    pairs_read: int = 0
    malformed_lines: int = 0
    identical_pairs: int = 0
    invalid_sources: int = 0
    commits: dict[Tier, int] = Field(default_factory=lambda: {tier: 0 for tier in Tier})
    records_by_tier: dict[Tier, int] = Field(default_factory=lambda: {Tier.STRICT: 0, Tier.RELAXED: 0})
    tier_filtered: int = 0
    ambiguity_skips: int = 0
    latency_fallbacks: int = 0
    round_trip_mismatches: int = 0
    dedup_commit_drops: int = 0
    dedup_signature_drops: int = 0
    general_kept: int = 0
    general_filtered: int = 0
    revision_remainder: int = 0
    general_remainder: int = 0
    emitted: int = 0


@dataclass(frozen=True, slots=True)
class PairOutcome:
    pair_id: str
    source_commit: str | None
    hunk_count: int
    record: TrajectoryRecord | None
    status: str


def forge_pair(task: tuple[FunctionPair, BuildConfig]) -> PairOutcome:
    """Map stage for one pair; never raises for a bad pair."""
    pair, config = task
    commit = pair.source_commit
    try:
        hunks = diff_function_pair(pair, config.profile, config.merge_gap)
    except IdenticalPair:
        return PairOutcome(pair.id, commit, 0, None, "identical")
    except (EmptySource, SentinelInSource):
        return PairOutcome(pair.id, commit, 0, None, "invalid_source")

    try:
        record = build_trajectory(pair, hunks, config.latency_k, config.seed, config.profile, config.latency_fallback)
        record.meta.diff_signature = hunk_signature(hunks)
        verify_record(record, pair.patched)
    except ScopeAmbiguityUnresolvable:
        return PairOutcome(pair.id, commit, len(hunks), None, "ambiguous")
    except RoundTripMismatch:
        return PairOutcome(pair.id, commit, len(hunks), None, "mismatch")
    return PairOutcome(pair.id, commit, len(hunks), record, "ok")


def read_pairs(path: Path, summary: BuildSummary) -> list[FunctionPair]:
    """Read pairs from a JSONL file or a directory of JSON files, sorted by id."""
    pairs: list[FunctionPair] = []

    if path.is_dir():
        for file in sorted(path.glob("*.json")):
            try:
                pairs.append(FunctionPair.model_validate_json(read_text(file)))
            except ValidationError as e:
                summary.malformed_lines += 1
                logging.warning(f"Skipping malformed pair file {file}: {e.error_count()} error(s)")
    else:
        for line_no, line in iter_jsonl_lines(path):
            try:
                pairs.append(FunctionPair.model_validate_json(line))
            except ValidationError as e:
                summary.malformed_lines += 1
                logging.warning(f"Skipping malformed line {line_no} of {path}: {e.error_count()} error(s)")

    summary.pairs_read = len(pairs)
    return sorted(pairs, key=lambda p: p.id)


def _map_pairs(pairs: list[FunctionPair], config: BuildConfig) -> Iterator[PairOutcome]:
    tasks = [(pair, config) for pair in pairs]
    if config.workers <= 1:
        yield from tqdm(map(forge_pair, tasks), total=len(tasks), desc="Building trajectories")
        return
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        yield from tqdm(pool.map(forge_pair, tasks, chunksize=16), total=len(tasks), desc="Building trajectories")


def read_general(path: Path, profile: TokenizerProfile, summary: BuildSummary) -> list[TrajectoryRecord]:
    """Filtered general-instruction records: {id, instruction, response} samples or episode-free trajectory records."""
    records: list[TrajectoryRecord] = []
    for line_no, line in iter_jsonl_lines(path):
        try:
            sample = json.loads(line)
            if "trajectory" in sample:
                record = record_from_dict(sample)
                text = "".join(record.trajectory.code_tokens)
                usable = not record.trajectory.episodes
            else:
                record = general_record(sample, profile)
                text = sample.get("response", "")
                usable = True
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            summary.malformed_lines += 1
            logging.warning(f"Skipping malformed general line {line_no}: {e}")
            continue

        if usable and keep_general_sample(text):
            records.append(record)
            summary.general_kept += 1
        else:
            summary.general_filtered += 1
    return sorted(records, key=lambda r: r.id)


def build_dataset(pairs_path: Path, out_path: Path, config: BuildConfig, general_path: Path | None = None) -> BuildSummary:
    summary = BuildSummary()
    pairs = read_pairs(pairs_path, summary)
    logging.info(f"Read {len(pairs)} function pairs from {pairs_path}")

    outcomes = list(_map_pairs(pairs, config))
    tiers = tier_commits((o.pair_id, o.source_commit, o.hunk_count) for o in outcomes if o.status not in ("identical", "invalid_source"))
    for tier in tiers.values():
        summary.commits[tier] += 1

    records: list[TrajectoryRecord] = []
    for outcome in outcomes:
        if outcome.status == "identical":
            summary.identical_pairs += 1
            continue
        if outcome.status == "invalid_source":
            summary.invalid_sources += 1
            continue

        tier = tiers[commit_key(outcome.pair_id, outcome.source_commit)]
        if not config.tier.accepts(tier):
            summary.tier_filtered += 1
            continue
        if outcome.status == "ambiguous":
            summary.ambiguity_skips += 1
            logging.warning(f"Skipping {outcome.pair_id}: scope ambiguity could not be resolved")
            continue
        if outcome.status == "mismatch":
            summary.round_trip_mismatches += 1
            logging.warning(f"Skipping {outcome.pair_id}: rendered trajectory differs from the patched text")
            continue

        record = outcome.record
        record.meta.tier = tier
        summary.latency_fallbacks += getattr(record.meta, "latency_fallbacks", 0) or 0
        records.append(record)

    stats = DedupStats()
    records = dedup(records, stats)
    summary.dedup_commit_drops = stats.commit_drops
    summary.dedup_signature_drops = stats.signature_drops
    for record in records:
        summary.records_by_tier[record.meta.tier] += 1

    if general_path is not None:
        general = read_general(general_path, config.profile, summary)
        if config.ratio is not None:
            mixed = mix_corpora(records, general, config.ratio)
            records = mixed.records
            summary.revision_remainder = mixed.revision_remainder
            summary.general_remainder = mixed.general_remainder
        else:
            records = records + general

    summary.emitted = write_records(out_path, records)
    logging.info(f"Wrote {summary.emitted} records to {out_path}")
    return summary
