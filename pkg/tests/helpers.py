import json
import random
from pathlib import Path

from revstream_core.models import DEFAULT_SENTINELS, RevisionEpisode, SentinelSet, Token, Trajectory

S = DEFAULT_SENTINELS


def episode(scope: str, patch: str) -> RevisionEpisode:
    return RevisionEpisode(scope=tuple(scope), patch=tuple(patch))


def episode_stream(scope: list[Token], patch: list[Token], sentinels: SentinelSet = S) -> list[Token]:
    return [sentinels.trigger, sentinels.scope_open, *scope, sentinels.scope_close, sentinels.patch_open, *patch, sentinels.patch_close]


def naive_ends(buffer: list[Token], span: list[Token]) -> list[int]:
    m = len(span)
    return [i + m for i in range(len(buffer) - m + 1) if buffer[i : i + m] == span]


def random_trajectory(rng: random.Random, alphabet: str = "abcd", steps: int = 30) -> tuple[Trajectory, list[Token]]:
    """A well-formed trajectory plus the buffer it must render to, built with a naive right-most splice."""
    items: list = []
    buffer: list[Token] = []
    for _ in range(steps):
        if buffer and rng.random() < 0.25:
            i = rng.randrange(len(buffer))
            j = rng.randint(i + 1, min(len(buffer), i + 3))
            scope = buffer[i:j]
            patch = [rng.choice(alphabet) for _ in range(rng.randint(0, 3))]
            end = max(naive_ends(buffer, scope))
            buffer[end - len(scope) : end] = patch
            items.append(RevisionEpisode(scope=tuple(scope), patch=tuple(patch)))
        else:
            token = rng.choice(alphabet)
            buffer.append(token)
            items.append(token)
    return Trajectory(items=tuple(items)), buffer


def write_synthetic_pairs(path: Path, count: int) -> Path:
    """JSONL of `count` two-hunk C function pairs, one commit each, with distinct diffs."""
    rows = []
    for i in range(count):
        vulnerable = f"int f{i}(char *s, int n) {{\n  char buf[{8 + i % 5}];\n  if (n > {i}) return -1;\n  memcpy(buf, s, n);\n  return 0;\n}}\n"
        patched = vulnerable.replace(f"buf[{8 + i % 5}]", f"buf[{64 + i}]").replace(f"n > {i}", f"n >= {i}")
        rows.append({"id": f"pair-{i:03d}", "vulnerable": vulnerable, "patched": patched, "meta": {"source_commit": f"commit-{i}", "function": f"f{i}"}})
    path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
    return path


def mutate(rng: random.Random, text: str, alphabet: str = "abc(){};= \n", edits: int = 3) -> str:
    """Apply a few random replace/insert/delete edits; never returns the input unchanged."""
    out = text
    for _ in range(rng.randint(1, edits)):
        i = rng.randint(0, len(out))
        j = min(len(out), i + rng.randint(0, 3))
        out = out[:i] + "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 3))) + out[j:]
    return out if out != text else text + "x"
