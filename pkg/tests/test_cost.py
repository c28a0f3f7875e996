import io
import random
from fractions import Fraction

import numpy as np
import pytest
from revstream_core.cost import AgentTurn, cost_agent, cost_agent_turns, cost_sor, cost_sor_trajectory
from revstream_core.embedding import EmbeddingInitSpec, description_words, init_sentinel_embeddings, semantic_init
from revstream_core.errors import DimensionMismatch, EmptyDescription
from revstream_core.harness import linear_fit, scaling_experiment, write_scaling_csv
from revstream_core.models import RevisionEpisode, Trajectory

from tests.helpers import S, episode


class TestAgentCost:
    def test_three_step(self):
        report = cost_agent(100, 10, 5)
        assert report.idealized_total == 225
        assert report.measured_total == 225
        assert report.kind == "agent_3step"

    def test_four_step(self):
        assert cost_agent(100, 10, 5, steps=4, loc_output=10).idealized_total == 345

    def test_critic_prompts_add_input(self):
        assert cost_agent(100, 10, 5, overhead_prompts=[7, 3]).measured_input == 2 * 100 + 10 + 10

    def test_overhead_grows_with_context(self):
        assert cost_agent(1000, 50, 5).idealized_overhead == 1100
        assert cost_agent(64, 0, 3).idealized_overhead == 64

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            cost_agent(1, 1, 1, steps=5)
        with pytest.raises(ValueError):
            cost_agent(-1, 1, 1)

    def test_turns(self):
        report = cost_agent_turns(100, 10, [AgentTurn(critic_prompt=4, fix_output=12), AgentTurn(critic_prompt=4, fix_output=11)])
        assert report.measured_input == 100 + (100 + 10 + 4) + (100 + 12 + 4)
        assert report.measured_output == 10 + 12 + 11
        assert report.N_s == 11
        assert report.episodes == 2


class TestSingleStreamCost:
    def test_idealized(self):
        report = cost_sor(100, 5)
        assert report.idealized_total == 106
        assert report.idealized_overhead == 1

    def test_overhead_ratio(self):
        assert cost_agent(1000, 50, 5).idealized_overhead / cost_sor(1000, 5).idealized_overhead == 1100

    def test_measured_without_episode(self):
        report = cost_sor(100, 0, measured=True, n_resume=7)
        assert report.measured_total == 107
        assert report.measured_overhead == 0
        assert report.episodes == 0

    def test_measured_episode_footprint(self):
        report = cost_sor(100, 2, measured=True, episode=RevisionEpisode(scope=("a", "b", "c"), patch=("x", "y")), n_resume=4)
        assert report.measured_overhead == 3 + 2 + 5
        assert report.measured_output == 10 + 4

    def test_trajectory(self):
        trajectory = Trajectory(items=("a", "b", episode("b", "cd"), "e"))
        report = cost_sor_trajectory(20, trajectory)
        assert report.measured_output == 3 + 1 + 2 + 5
        assert report.measured_overhead == 8
        assert report.idealized_overhead == 1


class TestScaling:
    L_VALUES = [2**e for e in range(8, 15)]

    def test_slopes(self):
        rows = scaling_experiment(self.L_VALUES, N_v=10, N_s=5)
        agent_slope, _ = linear_fit([r.L for r in rows], [r.delta_agent for r in rows])
        ours_slope, ours_intercept = linear_fit([r.L for r in rows], [r.delta_ours_measured for r in rows])

        assert agent_slope == pytest.approx(1.0, abs=1e-9)
        assert ours_slope == pytest.approx(0.0, abs=1e-9)
        assert ours_intercept == pytest.approx(1 + 5 + 5)
        assert all(r.delta_agent == r.L + 2 * 10 for r in rows)
        assert all(r.episodes == 1 for r in rows)

    def test_without_draft(self):
        rows = scaling_experiment([256, 512, 1024], N_v=0, N_s=5)
        assert [r.delta_agent for r in rows] == [256, 512, 1024]

    def test_threaded_matches_sequential(self):
        assert scaling_experiment(self.L_VALUES, 10, 5, workers=4) == scaling_experiment(self.L_VALUES, 10, 5)

    def test_requires_increasing_lengths(self):
        with pytest.raises(ValueError):
            scaling_experiment([512, 256], 10, 5)

    def test_csv(self):
        out = io.StringIO()
        write_scaling_csv(scaling_experiment([256, 512, 1024], 10, 5), out)
        lines = out.getvalue().splitlines()
        assert lines[0] == "L,delta_agent,delta_ours_measured,episodes"
        assert lines[1:] == ["256,276,11,1", "512,532,11,1", "1024,1044,11,1"]


class TestSemanticInit:
    def test_uniform_basis(self):
        result = semantic_init(EmbeddingInitSpec(description_vectors=[[1, 0], [0, 1]]))
        assert result.tolist() == [0.5, 0.5]

    def test_weighted(self):
        result = semantic_init(EmbeddingInitSpec(description_vectors=[[2, 0], [0, 4]], weights=[3, 1]))
        assert result.tolist() == [1.5, 1.0]

    def test_single_vector_is_returned(self):
        assert semantic_init(EmbeddingInitSpec(description_vectors=[[0.25, -2.0, 7.0]])).tolist() == [0.25, -2.0, 7.0]

    def test_matches_exact_reference(self):
        rng = random.Random(99)
        for _ in range(100):
            count, dim = rng.randint(1, 12), rng.randint(1, 8)
            vectors = [[rng.uniform(0.1, 1) for _ in range(dim)] for _ in range(count)]
            weights = [rng.uniform(0.1, 2) for _ in range(count)]
            result = semantic_init(EmbeddingInitSpec(description_vectors=vectors, weights=weights))

            z = sum(Fraction(w) for w in weights)
            for d in range(dim):
                exact = sum(Fraction(w) * Fraction(v[d]) for w, v in zip(weights, vectors, strict=True)) / z
                assert result[d] == pytest.approx(float(exact), rel=1e-12)

    def test_errors(self):
        with pytest.raises(EmptyDescription):
            semantic_init(EmbeddingInitSpec(description_vectors=[]))
        with pytest.raises(DimensionMismatch):
            semantic_init(EmbeddingInitSpec(description_vectors=[[1, 0], [1]]))
        with pytest.raises(DimensionMismatch):
            semantic_init(EmbeddingInitSpec(description_vectors=[[1, 0]], weights=[1, 1]))
        with pytest.raises(ValueError):
            semantic_init(EmbeddingInitSpec(description_vectors=[[1, 0]], weights=[0]))

    def test_sentinel_embeddings(self):
        vectors = init_sentinel_embeddings(lambda word: [float(len(word)), 1.0])
        assert set(vectors) == {S.trigger, S.scope_open, S.scope_close, S.patch_open, S.patch_close}
        for vector in vectors.values():
            assert isinstance(vector, np.ndarray)
            assert vector[1] == pytest.approx(1.0)

    def test_description_words(self):
        assert description_words("Ends the repaired code definition.") == ["ends", "the", "repaired", "code", "definition"]
