"""
Syntactic stability audit: well-formedness of programs before and after revision.

The builtin checker is a deterministic bracket/quote balance proxy. Real parsers plug
in as external commands that read the source on stdin and exit 0 on success.
"""

import logging
import subprocess
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Protocol

from pydantic import BaseModel, ConfigDict, Field

from revstream_core.errors import ExternalCheckerUnavailable

logger = logging.getLogger(__name__)

_OPENERS = {")": "(", "]": "[", "}": "{"}


class ValidityVerdict(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    passed: bool = Field(..., alias="pass")
    checker_id: str
    detail: str | None = None


class StabilityLabel(str, Enum):
    STABLE = "stable"
    REGRESSED = "regressed"
    FIXED = "fixed"
    STABLE_FAIL = "stable_fail"


def label_for(pre: bool, post: bool) -> StabilityLabel:
    if pre:
        return StabilityLabel.STABLE if post else StabilityLabel.REGRESSED
    return StabilityLabel.FIXED if post else StabilityLabel.STABLE_FAIL


class StabilityMatrix(BaseModel):
    counts: dict[StabilityLabel, int] = Field(default_factory=lambda: {label: 0 for label in StabilityLabel})
    total: int = 0
    total_samples: int | None = Field(None, description="Generated samples the revised pairs were drawn from")

    @property
    def non_destructive_rate(self) -> float:
        """Share of pairs whose revision kept the pre-revision verdict."""
        if self.total == 0:
            return 0.0
        return (self.counts[StabilityLabel.STABLE] + self.counts[StabilityLabel.STABLE_FAIL]) / self.total

    @property
    def revision_rate(self) -> float | None:
        if not self.total_samples:
            return None
        return self.total / self.total_samples


class Checker(Protocol):
    checker_id: str

    def check(self, text: str) -> ValidityVerdict: ...


class BalanceChecker:
    """Balanced ()/[]/{} and closed quotes; brackets inside strings and C comments are ignored."""

    checker_id = "builtin-balance"

    def check(self, text: str) -> ValidityVerdict:
        stack: list[str] = []
        quote: str | None = None
        escaped = False
        position, n = 0, len(text)

        while position < n:
            ch = text[position]
            if quote is not None:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == quote:
                    quote = None
                position += 1
                continue

            pair = text[position : position + 2]
            if pair == "//":
                newline = text.find("\n", position)
                position = n if newline < 0 else newline + 1
                continue
            if pair == "/*":
                close = text.find("*/", position + 2)
                if close < 0:
                    return self._fail(f"Unterminated comment at offset {position}")
                position = close + 2
                continue

            if ch in ("'", '"'):
                quote = ch
            elif ch in "([{":
                stack.append(ch)
            elif ch in _OPENERS:
                if not stack or stack[-1] != _OPENERS[ch]:
                    return self._fail(f"Unmatched {ch!r} at offset {position}")
                stack.pop()
            position += 1

        if quote is not None:
            return self._fail(f"Unterminated {quote} string")
        if stack:
            return self._fail(f"{len(stack)} unclosed bracket(s)")
        return ValidityVerdict(passed=True, checker_id=self.checker_id)

    def _fail(self, detail: str) -> ValidityVerdict:
        return ValidityVerdict(passed=False, checker_id=self.checker_id, detail=detail)


class ExternalChecker:
    """Runs a parser command with the source on stdin; exit status 0 passes."""

    def __init__(self, command: Sequence[str], timeout: float = 30.0) -> None:
        if not command:
            raise ValueError("External checker command cannot be empty")
        self.command = list(command)
        self.timeout = timeout
        self.checker_id = f"external:{self.command[0]}"

    def check(self, text: str) -> ValidityVerdict:
        try:
            completed = subprocess.run(self.command, input=text, capture_output=True, text=True, timeout=self.timeout, check=False)
        except FileNotFoundError as e:
            raise ExternalCheckerUnavailable(f"Checker command not found: {self.command[0]}") from e
        except subprocess.TimeoutExpired:
            return ValidityVerdict(passed=False, checker_id=self.checker_id, detail=f"timed out after {self.timeout}s")

        detail = completed.stderr.strip() or None
        return ValidityVerdict(passed=completed.returncode == 0, checker_id=self.checker_id, detail=detail)


def check_wellformed(text: str, checker: Checker | None = None) -> ValidityVerdict:
    return (checker or BalanceChecker()).check(text)


def stability_matrix(
    pairs: Sequence[tuple[str, str]],
    checker: Checker | None = None,
    workers: int = 1,
    total_samples: int | None = None,
) -> StabilityMatrix:
    """Check both sides of every (pre, post) pair and tally the four stability cells."""
    checker = checker or BalanceChecker()
    texts = [text for pair in pairs for text in pair]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(checker.check, texts))
    else:
        verdicts = [checker.check(text) for text in texts]

    matrix = StabilityMatrix(total=len(pairs), total_samples=total_samples)
    for i in range(len(pairs)):
        label = label_for(verdicts[2 * i].passed, verdicts[2 * i + 1].passed)
        matrix.counts[label] += 1

    logger.info(f"Stability over {matrix.total} pairs: " + ", ".join(f"{k.value}={v}" for k, v in matrix.counts.items()))
    return matrix
