import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from inexact_ipg.covertree import PointCloud
from inexact_ipg.sensing import gen_manifold

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_cloud(seed, d=None, dim=None):
    """Mixed test clouds: Gaussian, uniform noise, integer grids with ties, manifolds."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 300)) if d is None else d
    dim = int(rng.integers(1, 21)) if dim is None else dim
    kind = seed % 4
    if kind == 0:
        pts = rng.standard_normal((d, dim))
    elif kind == 1:
        pts = rng.uniform(-1, 1, (d, dim)) * rng.uniform(0.01, 100)
    elif kind == 2:
        pts = rng.integers(0, 6, (d, dim)).astype(float)
        pts = np.unique(pts, axis=0)
        pts = pts[rng.permutation(len(pts))]
    else:
        name = ("s-curve", "swiss-roll", "oscillating-wave")[seed % 3]
        pts = gen_manifold(name, d, max(dim, 3), seed).points
    return PointCloud(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
