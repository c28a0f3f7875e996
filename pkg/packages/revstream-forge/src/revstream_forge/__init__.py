"""
revstream forge

Turns vulnerable/patched function pairs into revision-stream training records.
"""

__version__ = "0.1.0"

from .corpus import dedup, mix_corpora
from .diff import apply_hunks, diff_function_pair
from .pipeline import BuildConfig, BuildSummary, build_dataset
from .tiers import filter_tier
from .trajectory import build_trajectory, verify_record

__all__ = [
    "BuildConfig",
    "BuildSummary",
    "apply_hunks",
    "build_dataset",
    "build_trajectory",
    "dedup",
    "diff_function_pair",
    "filter_tier",
    "mix_corpora",
    "verify_record",
]
