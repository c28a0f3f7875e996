import logging
import os
from collections.abc import Iterator
from pathlib import Path


def env_bool(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.lower() in ["1", "true"]


def optional_env_int(name: str) -> int | None:
    value = os.getenv(name)
    return None if value is None or value == "" else int(value)


def optional_env_str(name: str) -> str | None:
    value = os.getenv(name)
    return value or None


def read_text(path: Path) -> str:
    """Read a UTF-8 file without newline translation, so byte-exact round trips hold."""
    with open(path, encoding="utf-8", newline="") as f:
        return f.read()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def iter_jsonl_lines(path: Path) -> Iterator[tuple[int, str]]:
    """Yield (line number, stripped line) for every non-blank line of a JSONL file."""
    logging.debug(f"Reading JSONL records from {path}")
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                yield line_no, line
