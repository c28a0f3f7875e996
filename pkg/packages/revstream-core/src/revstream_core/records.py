"""JSONL codec for trajectory records.

On disk the trajectory is kept in its text form (code text with sentinel spellings
inline), so a record line is `{"id", "spec", "trajectory": str, "meta": {...}}`.
The tokenizer profile needed to read it back travels in `meta.profile`.
"""

import json
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

from revstream_core.episode import from_text, to_text
from revstream_core.models import DEFAULT_SENTINELS, RenderMode, SentinelSet, Trajectory, TrajectoryRecord
from revstream_core.utils import iter_jsonl_lines


def record_to_dict(record: TrajectoryRecord, sentinels: SentinelSet | None = None) -> dict[str, Any]:
    return {
        "id": record.id,
        "spec": record.spec,
        "trajectory": to_text(record.trajectory, sentinels),
        "meta": record.meta.model_dump(mode="json", exclude_none=True),
    }


def record_to_json(record: TrajectoryRecord, sentinels: SentinelSet | None = None) -> str:
    return json.dumps(record_to_dict(record, sentinels), ensure_ascii=False)


def record_from_dict(data: dict[str, Any], sentinels: SentinelSet = DEFAULT_SENTINELS, mode: RenderMode = RenderMode.STRICT) -> TrajectoryRecord:
    meta = data.get("meta") or {}
    raw = {"id": data["id"], "spec": data.get("spec", ""), "trajectory": {"items": ()}, "meta": meta}
    skeleton = TrajectoryRecord.model_validate(raw)
    trajectory = data["trajectory"]
    if isinstance(trajectory, str):
        trajectory = from_text(trajectory, skeleton.meta.profile, sentinels, mode)
    else:
        trajectory = Trajectory.model_validate(trajectory)
    return skeleton.model_copy(update={"trajectory": trajectory})


def record_from_json(line: str, sentinels: SentinelSet = DEFAULT_SENTINELS, mode: RenderMode = RenderMode.STRICT) -> TrajectoryRecord:
    return record_from_dict(json.loads(line), sentinels, mode)


def read_records(path: Path, sentinels: SentinelSet = DEFAULT_SENTINELS, mode: RenderMode = RenderMode.STRICT) -> Iterator[TrajectoryRecord]:
    for _, line in iter_jsonl_lines(path):
        yield record_from_json(line, sentinels, mode)


def write_records(path: Path, records: Iterable[TrajectoryRecord], sentinels: SentinelSet | None = None) -> int:
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record_to_json(record, sentinels) + "\n")
            count += 1
    return count
