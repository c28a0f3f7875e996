"""
revstream core

Single-pass revision decoding: a token stream may revise already emitted code through
in-stream episodes that a deterministic renderer applies atomically.
"""

__version__ = "0.1.0"

from .constraint import advance, close_constraint, localize, open_constraint
from .episode import parse, serialize, tokenize
from .models import DEFAULT_SENTINELS, RenderMode, RevisionEpisode, SentinelSet, TokenizerProfile, Trajectory, TrajectoryRecord
from .renderer import StreamRenderer, apply_episodes, render

__all__ = [
    "DEFAULT_SENTINELS",
    "RenderMode",
    "RevisionEpisode",
    "SentinelSet",
    "StreamRenderer",
    "TokenizerProfile",
    "Trajectory",
    "TrajectoryRecord",
    "advance",
    "apply_episodes",
    "close_constraint",
    "localize",
    "open_constraint",
    "parse",
    "render",
    "serialize",
    "tokenize",
]
