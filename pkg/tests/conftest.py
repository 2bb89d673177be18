import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def uniform_points(rng, M):
    g = rng.standard_normal((M, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
