import random

import pytest
from revstream_core.models import DEFAULT_SENTINELS, SentinelSet


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240917)


@pytest.fixture
def sentinels() -> SentinelSet:
    return DEFAULT_SENTINELS
