import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(0xC5)


def random_block(r):
    return tuple(r.getrandbits(32) for _ in range(4))
