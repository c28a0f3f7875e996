"""
Decode harness: simulates single-pass revision decoding.

A policy proposes one token at a time. The session enforces the episode grammar
and, while a scope is being emitted, the strict substring mask. Accepted tokens
go to the renderer and the cost counters.

Policies:
- ScriptedPolicy / ReplayPolicy replay a fixed token sequence; a token outside the
  mask is an invalid script.
- StochasticPolicy samples from a next-token weight table with a seeded generator.
  Masked choices are restricted and renormalized. The trigger decision uses its own
  random stream, one draw per code position, so bias 0 is neutral and the number
  of episodes only grows with the bias.
"""

import csv
import json
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from revstream_core.buffer import BufferKind, BufferView
from revstream_core.constraint import ConstraintState, ValidSet, advance
from revstream_core.cost import CostReport, cost_agent
from revstream_core.episode import Phase, serialize, tokenize_stream
from revstream_core.errors import InvalidScript, PolicyExhausted
from revstream_core.models import (
    DEFAULT_SENTINELS,
    Backend,
    RenderEvent,
    RenderMode,
    RevisionAppliedEvent,
    SentinelRole,
    SentinelSet,
    Token,
    TokenizerProfile,
    TrajectoryRecord,
)
from revstream_core.records import record_from_json
from revstream_core.renderer import StreamRenderer
from revstream_core.utils import read_text

logger = logging.getLogger(__name__)

# End-of-stream marker inside weight tables.
END = "<|end|>"


class ScriptFormat(str, Enum):
    LINES = "lines"
    TRAJECTORY = "trajectory"
    RECORD = "record"


@dataclass(frozen=True, slots=True)
class DecodeView:
    """What a policy may observe before proposing the next token"""

    phase: Phase
    buffer: BufferView
    valid_set: ValidSet | None
    sentinels: SentinelSet
    step: int


class Policy(Protocol):
    def propose(self, view: DecodeView, bias: float) -> Token | None: ...


class ScriptedPolicy:
    def __init__(self, tokens: Iterable[Token]) -> None:
        self.tokens = list(tokens)
        self.position = 0

    def propose(self, view: DecodeView, bias: float) -> Token | None:
        if self.position >= len(self.tokens):
            return None
        token = self.tokens[self.position]
        self.position += 1
        return token


class ReplayPolicy(ScriptedPolicy):
    """Replays the serialized trajectory of a dataset record."""

    def __init__(self, record: TrajectoryRecord, sentinels: SentinelSet = DEFAULT_SENTINELS) -> None:
        super().__init__(serialize(record.trajectory, sentinels))
        self.record = record


class WeightTable(BaseModel):
    """Next-token weights for a stochastic policy.

    `start` is the row used before any code token; `transitions[prev]` is the row after
    `prev`. Rows may weight the END marker to stop generation.
    """

    model_config = ConfigDict(frozen=True)

    start: dict[Token, float] = Field(default_factory=dict)
    transitions: dict[Token, dict[Token, float]] = Field(default_factory=dict)
    trigger_weight: float = Field(0.0, ge=0, description="Unbiased score of the trigger at every code position")
    scope_close_weight: float = Field(1.0, ge=0)
    patch_close_weight: float = Field(1.0, ge=0)
    max_code_tokens: int = Field(256, ge=0)
    max_scope_tokens: int = Field(16, ge=1)
    max_patch_tokens: int = Field(16, ge=0)

    def row(self, previous: Token | None) -> dict[Token, float]:
        if previous is None:
            return self.start
        return self.transitions.get(previous, self.start)


def trigger_probability(trigger_weight: float, row_mass: float, bias: float) -> float:
    """P(trigger) when the trigger competes with a row of total mass `row_mass`, its logit shifted by `bias`."""
    if bias == math.inf:
        return 1.0
    if bias == -math.inf or trigger_weight <= 0:
        return 0.0
    if row_mass <= 0:
        return 1.0
    logit = math.log(trigger_weight) + bias - math.log(row_mass)
    return float(0.5 * (1.0 + np.tanh(logit / 2.0)))


class StochasticPolicy:
    """Samples from a WeightTable; three independent streams: trigger decisions, code tokens, episode tokens."""

    def __init__(self, weights: WeightTable, seed: int = 0) -> None:
        self.weights = weights
        self.seed = seed
        self._code_rng = np.random.default_rng([seed, 0])
        self._trigger_rng = np.random.default_rng([seed, 1])
        self._episode_rng = np.random.default_rng([seed, 2])
        self._previous: Token | None = None
        self._code_count = 0
        self._trigger_checked = False
        self._scope: list[Token] = []
        self._patch: list[Token] = []

    def propose(self, view: DecodeView, bias: float) -> Token | None:
        sentinels = view.sentinels
        match view.phase:
            case Phase.TRANSPARENT:
                return self._transparent(view, bias)
            case Phase.TRIGGERED:
                self._scope, self._patch = [], []
                return sentinels.scope_open
            case Phase.IN_SCOPE:
                token = self._scope_token(view)
                if token != sentinels.scope_close:
                    self._scope.append(token)
                return token
            case Phase.SCOPED:
                return sentinels.patch_open
            case Phase.IN_PATCH:
                token = self._patch_token(view)
                if token != sentinels.patch_close:
                    self._patch.append(token)
                return token

    def _transparent(self, view: DecodeView, bias: float) -> Token | None:
        row = self._code_row()
        if not self._trigger_checked:
            self._trigger_checked = True
            u = self._trigger_rng.random()
            # An empty buffer has nothing to revise.
            if view.buffer and u < trigger_probability(self.weights.trigger_weight, sum(row.values()), bias):
                return view.sentinels.trigger

        if self._code_count >= self.weights.max_code_tokens:
            return None
        token = self._draw(self._code_rng, row)
        if token is None or token == END:
            return None

        self._previous = token
        self._code_count += 1
        self._trigger_checked = False
        return token

    def _code_row(self) -> dict[Token, float]:
        return {t: w for t, w in self.weights.row(self._previous).items() if w > 0}

    def _scope_token(self, view: DecodeView) -> Token:
        close = view.sentinels.scope_close
        if len(self._scope) >= self.weights.max_scope_tokens:
            return close

        previous = self._scope[-1] if self._scope else self._previous
        row = {t: w for t, w in self.weights.row(previous).items() if t != END and w > 0}

        if view.valid_set is not None:
            allowed = view.valid_set.continuations
            candidates = {t: w for t, w in row.items() if t in allowed}
            if view.valid_set.closure_allowed and self.weights.scope_close_weight > 0:
                candidates[close] = self.weights.scope_close_weight
            fallback = sorted(allowed) + ([close] if view.valid_set.closure_allowed else [])
        else:
            candidates = dict(row)
            if self._scope and self.weights.scope_close_weight > 0:
                candidates[close] = self.weights.scope_close_weight
            fallback = [close] if self._scope else sorted(set(view.buffer))

        token = self._draw(self._episode_rng, candidates)
        if token is None:
            # No weighted mass survives the mask: uniform over what is allowed.
            token = fallback[int(self._episode_rng.integers(len(fallback)))]
        return token

    def _patch_token(self, view: DecodeView) -> Token:
        close = view.sentinels.patch_close
        if len(self._patch) >= self.weights.max_patch_tokens:
            return close

        previous = self._patch[-1] if self._patch else (self._scope[-1] if self._scope else self._previous)
        spellings = view.sentinels.spellings()
        candidates = {t: w for t, w in self.weights.row(previous).items() if t != END and t not in spellings and w > 0}
        if self.weights.patch_close_weight > 0:
            candidates[close] = self.weights.patch_close_weight
        return self._draw(self._episode_rng, candidates) or close

    @staticmethod
    def _draw(rng: np.random.Generator, weights: dict[Token, float]) -> Token | None:
        if not weights:
            return None
        tokens = list(weights)
        mass = np.asarray([weights[t] for t in tokens], dtype=np.float64)
        total = mass.sum()
        if total <= 0:
            return None
        return tokens[int(rng.choice(len(tokens), p=mass / total))]


@dataclass(slots=True)
class SessionResult:
    buffer: tuple[Token, ...]
    events: list[RenderEvent]
    cost: CostReport
    stream: list[Token] = field(default_factory=list)


def decode_session(
    policy: Policy,
    sentinels: SentinelSet = DEFAULT_SENTINELS,
    bias: float = 0.0,
    enforce_mask: bool = True,
    context_len: int = 0,
    mode: RenderMode = RenderMode.STRICT,
    backend: Backend = Backend.POSITIONS,
    buffer_kind: BufferKind = BufferKind.LIST,
    prefix: Sequence[Token] = (),
) -> SessionResult:
    """Run one decoding session until the policy stops."""
    renderer = StreamRenderer(sentinels=sentinels, mode=mode, buffer_kind=buffer_kind, backend=backend, prefix=prefix)
    buffer = BufferView(renderer.buffer)
    roles = sentinels.role_table()
    constraint: ConstraintState | None = None
    stream: list[Token] = []

    while True:
        phase = renderer.phase
        valid_set = constraint.valid_set if enforce_mask and phase is Phase.IN_SCOPE and constraint is not None else None
        view = DecodeView(phase=phase, buffer=buffer, valid_set=valid_set, sentinels=sentinels, step=len(stream))

        token = policy.propose(view, bias)
        if token is None:
            break

        role = roles.get(token)
        if enforce_mask:
            _check_mask(view, role, token)

        renderer.feed(token)
        stream.append(token)

        if renderer.phase is Phase.IN_SCOPE:
            if phase is not Phase.IN_SCOPE:
                constraint = renderer.index.open(renderer.buffer.tokens()) if enforce_mask else None
            elif constraint is not None and role is None:
                constraint = advance(constraint, token)
        else:
            constraint = None

    if renderer.phase.in_episode and mode is RenderMode.STRICT:
        raise PolicyExhausted("Policy stopped inside an episode", len(stream))

    result = renderer.finish()
    cost = _session_cost(stream, result.events, roles, context_len)
    logger.debug(f"Session finished: {len(stream)} tokens, {cost.episodes} revisions applied")
    return SessionResult(buffer=result.buffer, events=result.events, cost=cost, stream=stream)


def _check_mask(view: DecodeView, role: SentinelRole | None, token: Token) -> None:
    if view.phase is Phase.TRANSPARENT and role is SentinelRole.TRIGGER and not view.buffer:
        raise InvalidScript("Trigger emitted on an empty buffer", view.step, token)
    if view.valid_set is None:
        return
    if role is SentinelRole.SCOPE_CLOSE and not view.valid_set.closure_allowed:
        raise InvalidScript("Scope closed before any token", view.step, token)
    if role is None and not view.valid_set.allows(token):
        raise InvalidScript("Scope token breaks the substring constraint", view.step, token)


def _session_cost(stream: Sequence[Token], events: Sequence[RenderEvent], roles: dict[Token, SentinelRole], context_len: int) -> CostReport:
    applied = [e for e in events if isinstance(e, RevisionAppliedEvent)]
    code = sum(1 for t in stream if t not in roles) - sum(len(e.old_span) + len(e.new_span) for e in applied)
    patch_tokens = sum(len(e.new_span) for e in applied)
    footprint = sum(len(e.old_span) + len(e.new_span) + 5 for e in applied)
    return CostReport(
        kind="sor_session",
        L=context_len,
        N_v=max(code, 0),
        N_s=patch_tokens,
        measured_input=context_len,
        measured_output=len(stream),
        idealized_total=context_len + max(code, 0) + len(applied) + patch_tokens,
        idealized_overhead=len(applied),
        measured_overhead=footprint,
        episodes=len(applied),
    )


def _script_line(line: str) -> Token:
    # A line starting with a quote is a JSON string, so whitespace tokens can be written.
    return json.loads(line) if line.startswith('"') else line


def load_script(
    path: Path,
    fmt: ScriptFormat = ScriptFormat.LINES,
    profile: TokenizerProfile = TokenizerProfile.CHAR,
    sentinels: SentinelSet = DEFAULT_SENTINELS,
) -> list[Token]:
    """Read a policy script: one token per line, trajectory text, or a JSON record."""
    text = read_text(path)
    if fmt is ScriptFormat.LINES:
        return [_script_line(line) for line in text.splitlines() if line != ""]
    if fmt is ScriptFormat.TRAJECTORY:
        return tokenize_stream(text, profile, sentinels)
    record = record_from_json(text.strip(), sentinels)
    return serialize(record.trajectory, sentinels)


class ScalingRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    L: int
    delta_agent: int
    delta_ours_measured: int
    episodes: int


def synthetic_script(N_v: int, N_s: int, sentinels: SentinelSet = DEFAULT_SENTINELS) -> list[Token]:
    """A draft of max(N_v, 1) distinct tokens followed by one episode rewriting its last token into N_s tokens."""
    draft = [f"v{i}" for i in range(max(N_v, 1))]
    patch = [f"p{i}" for i in range(N_s)]
    return [
        *draft,
        sentinels.trigger,
        sentinels.scope_open,
        draft[-1],
        sentinels.scope_close,
        sentinels.patch_open,
        *patch,
        sentinels.patch_close,
    ]


def scaling_row(L: int, N_v: int, N_s: int, sentinels: SentinelSet = DEFAULT_SENTINELS) -> ScalingRow:
    session = decode_session(ScriptedPolicy(synthetic_script(N_v, N_s, sentinels)), sentinels=sentinels, context_len=L)
    agent = cost_agent(L, N_v, N_s)
    return ScalingRow(L=L, delta_agent=agent.idealized_overhead, delta_ours_measured=session.cost.measured_overhead, episodes=session.cost.episodes)


def scaling_experiment(L_values: Sequence[int], N_v: int, N_s: int, workers: int = 1, sentinels: SentinelSet = DEFAULT_SENTINELS) -> list[ScalingRow]:
    if any(b <= a for a, b in zip(L_values, L_values[1:], strict=False)):
        raise ValueError("L values must be strictly increasing")

    if workers <= 1:
        rows = [scaling_row(L, N_v, N_s, sentinels) for L in L_values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda L: scaling_row(L, N_v, N_s, sentinels), L_values))
    return sorted(rows, key=lambda row: row.L)


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, intercept = np.polyfit(np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64), 1)
    return float(slope), float(intercept)


def write_scaling_csv(rows: Iterable[ScalingRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["L", "delta_agent", "delta_ours_measured", "episodes"])
    for row in rows:
        writer.writerow([row.L, row.delta_agent, row.delta_ours_measured, row.episodes])
