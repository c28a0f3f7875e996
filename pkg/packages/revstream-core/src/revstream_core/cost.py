"""
Token cost accounting for single-pass revision versus post-hoc agent pipelines.

All counts are token counts. "Overhead" is measured against the ideal single pass
that reads the context once and writes only the fix: L + N_s.
"""

from collections.abc import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, Field

from revstream_core.models import RevisionEpisode, Trajectory


class CostReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str = Field(..., description="Accounting model that produced the report")
    L: int = Field(0, ge=0, description="Input/context tokens")
    N_v: int = Field(0, ge=0, description="Vulnerable draft tokens")
    N_s: int = Field(0, ge=0, description="Patch tokens")
    measured_input: int = Field(0, ge=0)
    measured_output: int = Field(0, ge=0)
    idealized_total: int = Field(0, ge=0)
    idealized_overhead: int = Field(0, ge=0)
    measured_overhead: int = Field(0, ge=0)
    episodes: int = Field(0, ge=0)

    @property
    def measured_total(self) -> int:
        return self.measured_input + self.measured_output


class AgentTurn(BaseModel):
    """One critique/fix round of a multi-turn agent"""

    model_config = ConfigDict(frozen=True)

    critic_prompt: int = Field(0, ge=0)
    fix_output: int = Field(0, ge=0)


def cost_agent(L: int, N_v: int, N_s: int, steps: int = 3, loc_output: int = 0, overhead_prompts: Iterable[int] = ()) -> CostReport:
    """
    Closed-form cost of a generate → (localize →) repair agent.

    3 steps: generation reads L and writes N_v; repair re-reads L + N_v and writes N_s.
    4 steps: an extra localization call re-reads L + N_v and writes `loc_output`.
    Critic prompt sizes are added to the input side.
    """
    if steps not in (3, 4):
        raise ValueError(f"Agent cost model supports 3 or 4 steps, got {steps}")
    if min(L, N_v, N_s, loc_output) < 0:
        raise ValueError("Token counts cannot be negative")

    prompts = sum(overhead_prompts)
    if steps == 3:
        measured_input = 2 * L + N_v + prompts
        measured_output = N_v + N_s
    else:
        measured_input = 3 * L + 2 * N_v + prompts
        measured_output = N_v + N_s + loc_output

    total = measured_input + measured_output
    overhead = total - (L + N_s)
    return CostReport(
        kind=f"agent_{steps}step",
        L=L,
        N_v=N_v,
        N_s=N_s,
        measured_input=measured_input,
        measured_output=measured_output,
        idealized_total=total,
        idealized_overhead=overhead,
        measured_overhead=overhead,
    )


def cost_agent_turns(x_len: int, y0_len: int, turns: Sequence[AgentTurn]) -> CostReport:
    """Multi-turn agent: |x| + |y0| + sum over turns of (|x| + |y_prev| + |p_critic| + |y_fix|)."""
    measured_input = x_len
    measured_output = y0_len
    previous = y0_len
    for turn in turns:
        measured_input += x_len + previous + turn.critic_prompt
        measured_output += turn.fix_output
        previous = turn.fix_output

    N_s = turns[-1].fix_output if turns else 0
    total = measured_input + measured_output
    return CostReport(
        kind="agent_turns",
        L=x_len,
        N_v=y0_len,
        N_s=N_s,
        measured_input=measured_input,
        measured_output=measured_output,
        idealized_total=total,
        idealized_overhead=max(total - (x_len + N_s), 0),
        measured_overhead=max(total - (x_len + N_s), 0),
        episodes=len(turns),
    )


def cost_sor(L: int, N_s: int, measured: bool = False, episode: RevisionEpisode | None = None, n_resume: int = 0) -> CostReport:
    """
    Single-pass revision cost.

    Idealized: one trigger token on top of the ideal pass, L + 1 + N_s.
    Measured: the episode's full footprint |s| + |s'| + 5 plus the continuation length.
    """
    if not measured:
        return CostReport(
            kind="sor_idealized",
            L=L,
            N_s=N_s,
            measured_input=L,
            measured_output=1 + N_s,
            idealized_total=L + 1 + N_s,
            idealized_overhead=1,
            measured_overhead=1,
            episodes=1,
        )

    footprint = episode.serialized_length if episode is not None else 0
    patch_len = len(episode.patch) if episode is not None else N_s
    return CostReport(
        kind="sor_measured",
        L=L,
        N_s=patch_len,
        measured_input=L,
        measured_output=footprint + n_resume,
        idealized_total=L + (1 + patch_len if episode is not None else 0) + n_resume,
        idealized_overhead=1 if episode is not None else 0,
        measured_overhead=footprint,
        episodes=1 if episode is not None else 0,
    )


def cost_sor_trajectory(x_len: int, trajectory: Trajectory) -> CostReport:
    """Cost of emitting a whole trajectory in one pass."""
    episodes = trajectory.episodes
    code = len(trajectory.code_tokens)
    patch_tokens = sum(len(e.patch) for e in episodes)
    measured_overhead = sum(e.serialized_length for e in episodes)
    return CostReport(
        kind="sor_trajectory",
        L=x_len,
        N_v=code,
        N_s=patch_tokens,
        measured_input=x_len,
        measured_output=trajectory.serialized_length,
        idealized_total=x_len + code + len(episodes) + patch_tokens,
        idealized_overhead=len(episodes),
        measured_overhead=measured_overhead,
        episodes=len(episodes),
    )
