import math
import random
import time

import pytest
from revstream_core.episode import detokenize, serialize
from revstream_core.errors import InvalidScript, PolicyExhausted, ScopeNotFound
from revstream_core.harness import (
    END,
    ReplayPolicy,
    ScriptedPolicy,
    ScriptFormat,
    StochasticPolicy,
    WeightTable,
    decode_session,
    load_script,
    trigger_probability,
)
from revstream_core.models import Backend, DiscardReason, FunctionPair, RenderMode, RevisionAppliedEvent
from revstream_core.records import record_to_json
from revstream_forge.diff import diff_function_pair
from revstream_forge.trajectory import build_trajectory

from tests.helpers import S, episode_stream

PAIR = FunctionPair(
    id="memcpy-1",
    vulnerable="void f(char *d, char *s, int n) {\n  memcpy(d, s, n);\n}\n",
    patched="void f(char *d, char *s, int n) {\n  if (n > 16) return;\n  memcpy(d, s, n);\n}\n",
)

WEIGHTS = WeightTable(
    start={"a": 1.0, "b": 1.0, END: 0.1},
    transitions={"a": {"a": 1.0, "b": 2.0, END: 0.1}, "b": {"a": 2.0, "b": 1.0, END: 0.1}},
    trigger_weight=0.5,
    max_code_tokens=8,
    max_scope_tokens=2,
    max_patch_tokens=3,
)
PREFIX = list("abbaabababbbaaabbaba")


def forged_record():
    return build_trajectory(PAIR, diff_function_pair(PAIR), latency_k=8, seed=1)


class TestScripted:
    def test_replay_renders_patched(self):
        record = forged_record()
        session = decode_session(ReplayPolicy(record), context_len=40)
        assert detokenize(session.buffer) == PAIR.patched
        assert session.stream == serialize(record.trajectory)

    def test_cost_matches_stream(self):
        record = forged_record()
        session = decode_session(ReplayPolicy(record), context_len=40)
        footprint = sum(e.serialized_length for e in record.trajectory.episodes)
        assert session.cost.measured_output == record.trajectory.serialized_length
        assert session.cost.measured_output == len(record.trajectory.code_tokens) + footprint
        assert session.cost.measured_overhead == footprint
        assert session.cost.episodes == len(record.trajectory.episodes)
        assert session.cost.measured_input == 40

    def test_scope_token_outside_mask(self):
        with pytest.raises(InvalidScript) as exc:
            decode_session(ScriptedPolicy(["a", "b", S.trigger, S.scope_open, "z"]))
        assert exc.value.index == 4

    def test_trigger_on_empty_buffer(self):
        with pytest.raises(InvalidScript):
            decode_session(ScriptedPolicy([S.trigger]))

    def test_scope_closed_before_any_token(self):
        with pytest.raises(InvalidScript):
            decode_session(ScriptedPolicy(["a", S.trigger, S.scope_open, S.scope_close]))

    def test_unmasked_scope_not_found(self):
        with pytest.raises(ScopeNotFound):
            decode_session(ScriptedPolicy(["a", *episode_stream(["z"], ["b"])]), enforce_mask=False)

    def test_policy_stops_inside_episode(self):
        script = ["a", S.trigger, S.scope_open]
        with pytest.raises(PolicyExhausted):
            decode_session(ScriptedPolicy(script))

        session = decode_session(ScriptedPolicy(script), mode=RenderMode.LENIENT)
        assert session.buffer == ("a",)
        assert session.events[-1].reason is DiscardReason.UNTERMINATED

    def test_prefix_is_revisable(self):
        session = decode_session(ScriptedPolicy(episode_stream(["y"], ["Y"])), prefix=["x", "y"])
        assert session.buffer == ("x", "Y")


class TestLoadScript:
    def test_lines(self, tmp_path):
        path = tmp_path / "script.txt"
        path.write_text(f'a\n" "\nb\n{S.trigger}\n{S.scope_open}\nb\n{S.scope_close}\n{S.patch_open}\nc\n{S.patch_close}\n', encoding="utf-8")
        tokens = load_script(path)
        assert tokens[:3] == ["a", " ", "b"]
        assert decode_session(ScriptedPolicy(tokens)).buffer == ("a", " ", "c")

    def test_trajectory_text(self, tmp_path):
        path = tmp_path / "trajectory.txt"
        path.write_text(f"ab{S.trigger}{S.scope_open}b{S.scope_close}{S.patch_open}c{S.patch_close}", encoding="utf-8")
        assert decode_session(ScriptedPolicy(load_script(path, ScriptFormat.TRAJECTORY))).buffer == ("a", "c")

    def test_record(self, tmp_path):
        path = tmp_path / "record.json"
        record = forged_record()
        path.write_text(record_to_json(record), encoding="utf-8")
        assert load_script(path, ScriptFormat.RECORD) == serialize(record.trajectory)


class TestTriggerProbability:
    def test_limits(self):
        assert trigger_probability(0.5, 2.0, math.inf) == 1.0
        assert trigger_probability(0.5, 2.0, -math.inf) == 0.0
        assert trigger_probability(0.0, 2.0, 10.0) == 0.0

    def test_softmax_share(self):
        assert trigger_probability(1.0, 3.0, 0.0) == pytest.approx(0.25)
        assert trigger_probability(1.0, 1.0, 0.0) == pytest.approx(0.5)

    def test_monotone_in_bias(self):
        values = [trigger_probability(0.5, 2.0, b) for b in (-3, -1, 0, 1, 3)]
        assert values == sorted(values)


def triggers(seed: int, bias: float) -> int:
    session = decode_session(StochasticPolicy(WEIGHTS, seed=seed), bias=bias, prefix=PREFIX)
    return session.stream.count(S.trigger)


class TestStochastic:
    def test_masked_sessions_always_commit(self):
        for seed in range(50):
            session = decode_session(StochasticPolicy(WEIGHTS, seed=seed), bias=1.0, prefix=PREFIX)
            applied = [e for e in session.events if isinstance(e, RevisionAppliedEvent)]
            assert len(applied) == session.stream.count(S.trigger)
            assert not set(session.buffer) & S.spellings()

    def test_infinite_bias_triggers_first(self):
        session = decode_session(StochasticPolicy(WEIGHTS, seed=3), bias=math.inf, prefix=PREFIX)
        assert session.stream[0] == S.trigger

    def test_negative_infinite_bias_never_triggers(self):
        assert all(triggers(seed, -math.inf) == 0 for seed in range(20))

    def test_no_trigger_on_empty_buffer(self):
        session = decode_session(StochasticPolicy(WEIGHTS, seed=0), bias=math.inf)
        assert not session.stream or session.stream[0] != S.trigger

    def test_same_seed_same_session(self):
        first = decode_session(StochasticPolicy(WEIGHTS, seed=11), prefix=PREFIX)
        second = decode_session(StochasticPolicy(WEIGHTS, seed=11), bias=0.0, prefix=PREFIX)
        assert first.stream == second.stream

    def test_trigger_count_grows_with_bias(self):
        for seed in range(20):
            counts = [triggers(seed, bias) for bias in (-math.inf, -2.0, 0.0, 2.0, math.inf)]
            assert counts == sorted(counts)

    def test_mask_falls_back_to_buffer_tokens(self):
        weights = WeightTable(start={"a": 1.0, END: 0.5}, trigger_weight=1.0, max_code_tokens=4, max_scope_tokens=2)
        for seed in range(20):
            session = decode_session(StochasticPolicy(weights, seed=seed), bias=math.inf, prefix=list("xyz"))
            first = session.events[0]
            assert isinstance(first, RevisionAppliedEvent)
            assert set(first.old_span) <= set("xyz")

    def test_unmasked_lenient_sessions_never_leak_sentinels(self):
        for seed in range(20):
            session = decode_session(StochasticPolicy(WEIGHTS, seed=seed), bias=2.0, prefix=PREFIX, enforce_mask=False, mode=RenderMode.LENIENT)
            assert not set(session.buffer) & S.spellings()



class RecordingPolicy(ScriptedPolicy):
    def __init__(self, tokens):
        super().__init__(tokens)
        self.views = []

    def propose(self, view, bias):
        self.views.append((view.buffer, len(view.buffer)))
        return super().propose(view, bias)


class TestThroughput:
    def test_view_is_shared_not_copied(self):
        policy = RecordingPolicy(["a", "b", "c", S.trigger, S.scope_open, "b", S.scope_close, S.patch_open, S.patch_close])
        session = decode_session(policy)

        buffers = {id(buffer) for buffer, _ in policy.views}
        assert len(buffers) == 1
        assert [length for _, length in policy.views[:4]] == [0, 1, 2, 3]
        assert list(policy.views[0][0]) == list(session.buffer) == ["a", "c"]

    @pytest.mark.parametrize("backend", list(Backend))
    def test_scope_steps_on_large_prefix(self, backend):
        rng = random.Random(11)
        prefix = [rng.choice("abcdefgh") for _ in range(100_000)]
        scope = prefix[60_000:64_000]
        policy = ScriptedPolicy([S.trigger, S.scope_open, *scope, S.scope_close, S.patch_open, "Z", S.patch_close])

        started = time.perf_counter()
        session = decode_session(policy, prefix=prefix, backend=backend)
        elapsed = time.perf_counter() - started

        assert session.cost.episodes == 1
        assert session.buffer[60_000] == "Z"
        assert len(session.buffer) == 100_000 - len(scope) + 1
        assert len(scope) / elapsed >= 1_000

