import pytest
from revstream_core.episode import detokenize, serialize, tokenize
from revstream_core.models import DiffHunk, FunctionPair, RevisionEpisode, TokenizerProfile, Trajectory
from revstream_core.records import record_to_json
from revstream_core.renderer import render
from revstream_forge.diff import diff_function_pair, diff_tokens
from revstream_forge.errors import ScopeAmbiguityUnresolvable
from revstream_forge.trajectory import build_trajectory, disambiguate, linearize, record_rng, verify_record

from tests.helpers import mutate


class FixedLatency:
    """Stands in for the numpy generator: always draws the same latency."""

    def __init__(self, value: int) -> None:
        self.value = value

    def integers(self, low: int, high: int) -> int:
        return min(self.value, high - 1)


def rendered(items) -> str:
    return detokenize(render(serialize(Trajectory(items=items))).buffer)


def test_zero_latency_single_hunk():
    hunks = diff_tokens(list("abcd"), list("abXd"))
    lin = linearize(list("abcd"), hunks, latency_k=0)
    assert lin.items == ("a", "b", "c", RevisionEpisode(scope=("c",), patch=("X",)), "d")
    assert lin.latencies == (0,)


def test_latency_is_clamped_before_next_hunk_and_end():
    xs = list("aXbbbbYc")
    ys = list("abbbbc")
    hunks = diff_tokens(xs, ys)
    lin = linearize(xs, hunks, latency_k=50, rng=FixedLatency(50))
    assert len(lin.latencies) == 2
    for hunk, following, latency in zip(hunks, [*[h.vul_start for h in hunks[1:]], len(xs)], lin.latencies, strict=True):
        assert hunk.vul_end + latency <= following
    assert rendered(lin.items) == "abbbbc"


def test_scope_is_extended_past_a_later_duplicate():
    vulnerable = "f(){return 0;return 0;}"
    patched = "f(){return -1;return 0;}"
    xs = tokenize(vulnerable)
    hunks = diff_tokens(xs, tokenize(patched))
    lin = linearize(xs, hunks, latency_k=12, rng=FixedLatency(12))

    [episode] = [item for item in lin.items if isinstance(item, RevisionEpisode)]
    assert episode.scope == tuple("{return 0")
    assert episode.patch == tuple("{return -1")
    assert rendered(lin.items) == patched


def test_unresolvable_scope_is_skipped_by_default():
    xs = list("aaaa")
    hunk = DiffHunk(vul_start=0, vul_end=1, del_span=("a",), ins_span=("X",))
    with pytest.raises(ScopeAmbiguityUnresolvable):
        linearize(xs, [hunk], latency_k=3, rng=FixedLatency(3))


def test_unresolvable_scope_falls_back_to_zero_latency():
    xs = list("aaaa")
    hunk = DiffHunk(vul_start=0, vul_end=1, del_span=("a",), ins_span=("X",))
    lin = linearize(xs, [hunk], latency_k=3, rng=FixedLatency(3), latency_fallback=True)
    assert lin.fallbacks == 1
    assert lin.latencies == (0,)
    assert rendered(lin.items) == "Xaaa"


def test_disambiguate():
    buffer = list("xab_ab")
    assert disambiguate(buffer, 1, 3) == 0
    assert disambiguate(list("ab_ab"), 3, 5) == 3
    with pytest.raises(ScopeAmbiguityUnresolvable):
        disambiguate(list("abab"), 0, 2)


def test_negative_latency_bound():
    with pytest.raises(ValueError):
        linearize(list("ab"), diff_tokens(list("ab"), list("aX")), latency_k=-1)


@pytest.mark.parametrize("fallback", [False, True])
def test_random_pairs_round_trip(rng, fallback):
    skipped = 0
    for n in range(500):
        base = "".join(rng.choice("abc(){};= \n") for _ in range(rng.randint(1, 30)))
        vulnerable = base * rng.randint(1, 3)
        patched = mutate(rng, vulnerable, edits=4)
        pair = FunctionPair(id=f"pair-{n}", vulnerable=vulnerable, patched=patched)

        hunks = diff_function_pair(pair)
        try:
            record = build_trajectory(pair, hunks, latency_k=8, seed=n, latency_fallback=fallback)
        except ScopeAmbiguityUnresolvable:
            assert not fallback
            skipped += 1
            continue
        verify_record(record, patched)
        assert detokenize(record.trajectory.code_tokens) == vulnerable
        assert len(record.trajectory.episodes) == len(hunks)
    assert skipped < 500


def test_word_profile_record():
    pair = FunctionPair(id="w", vulnerable="if (n > len) return 0;\nmemcpy(d, s, n);\n", patched="if (n >= len) return -1;\nmemcpy(d, s, n);\n")
    hunks = diff_function_pair(pair, TokenizerProfile.WORD)
    record = build_trajectory(pair, hunks, profile=TokenizerProfile.WORD)
    verify_record(record, pair.patched)
    assert record.meta.profile is TokenizerProfile.WORD


def test_build_is_deterministic():
    pair = FunctionPair(id="det", vulnerable="int a = b + c; return a;", patched="int a = b - c; return a + 1;", meta={"source_commit": "c0"})
    hunks = diff_function_pair(pair)
    first = build_trajectory(pair, hunks, latency_k=8, seed=3)
    second = build_trajectory(pair, hunks, latency_k=8, seed=3)
    assert record_to_json(first) == record_to_json(second)
    assert first.meta.source_commit == "c0"
    assert first.meta.latency_k == 8


def test_record_rng_depends_on_seed_and_id():
    def draw(seed, record_id):
        return int(record_rng(seed, record_id).integers(0, 1 << 30))

    assert draw(1, "a") == draw(1, "a")
    assert draw(1, "a") != draw(2, "a")
    assert draw(1, "a") != draw(1, "b")
