import random

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "det",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("det")


@pytest.fixture
def rng():
    return random.Random(12345)


def random_label_grid(rng: random.Random, h: int = 12, w: int = 12, density: float = 0.55) -> np.ndarray:
    """Small random raw-label grid for oracle comparisons."""
    grid = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            if rng.random() < density:
                grid[y, x] = rng.randint(1, 9)
    return grid
