import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from geowl.generate import FamilySpec, random_cloud

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def clouds(draw, n_min=4, n_max=9):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_cloud(FamilySpec("random", n, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def regular_tetrahedron():
    from geowl.geometry import PointCloud

    return PointCloud([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
