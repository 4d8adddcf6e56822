import numpy as np
import pytest
from hypothesis import given, strategies as st

from inexact_ipg import sensing as se
from inexact_ipg.covertree import PointCloud
from inexact_ipg.errors import (
    AmbientTooSmall,
    DimensionMismatch,
    EmptyCloud,
    ParseError,
    SpecError,
    ZeroDimension,
)


def test_gaussian_is_deterministic():
    a = se.gen_gaussian(4, 10, 7)
    b = se.gen_gaussian(4, 10, 7)
    assert np.array_equal(a.matrix, b.matrix)
    assert (a.m, a.n, a.seed) == (4, 10, 7)
    assert not np.array_equal(a.matrix, se.gen_gaussian(4, 10, 8).matrix)


def test_gaussian_zero_dimension():
    with pytest.raises(ZeroDimension):
        se.gen_gaussian(0, 10, 1)
    with pytest.raises(ZeroDimension):
        se.gen_gaussian(3, 0, 1)


def test_energy_concentrates_near_m():
    A = se.gen_gaussian(200, 1000, 3)
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(100):
        x = rng.standard_normal(1000)
        x /= np.linalg.norm(x)
        ratios.append(np.sum(A.apply(x) ** 2))
    ratios = np.array(ratios)
    assert np.all(np.abs(ratios - 200) <= 0.3 * 200)


def test_identity_operator():
    A = se.SamplingOperator(np.eye(5))
    x = np.arange(5.0)
    assert np.array_equal(A.apply(x), x)
    assert np.array_equal(A.adjoint(x), x)


@given(st.integers(0, 10**6), st.integers(1, 30), st.integers(1, 30))
def test_adjoint_consistency(seed, m, n):
    rng = np.random.default_rng(seed)
    A = se.gen_gaussian(m, n, seed)
    x, v = rng.standard_normal(n), rng.standard_normal(m)
    lhs, rhs = A.apply(x) @ v, x @ A.adjoint(v)
    scale = np.linalg.norm(A.matrix) * np.linalg.norm(x) * np.linalg.norm(v)
    assert abs(lhs - rhs) <= 1e-10 * scale


def test_operator_dimension_checks():
    A = se.gen_gaussian(3, 4, 0)
    with pytest.raises(DimensionMismatch):
        A.apply(np.ones(3))
    with pytest.raises(DimensionMismatch):
        A.adjoint(np.ones(4))


def test_operator_csv_roundtrip(tmp_path):
    A = se.gen_gaussian(5, 7, 11)
    path = tmp_path / "A.csv"
    A.save_csv(path)
    assert path.read_text().splitlines()[0] == "5,7,11"
    B = se.SamplingOperator.load_csv(path)
    assert np.array_equal(A.matrix, B.matrix) and B.seed == 11


def test_operator_csv_bad_row(tmp_path):
    path = tmp_path / "A.csv"
    path.write_text("2,2,0\n1,2\n3\n")
    with pytest.raises(ParseError, match="line 3"):
        se.SamplingOperator.load_csv(path)


def test_spectral_norm_matches_svd():
    for seed in range(3):
        A = se.gen_gaussian(30, 80, seed).matrix
        assert se.spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-8)
    assert se.spectral_norm(np.array([[0.6, -0.8]])) == pytest.approx(1.0, rel=1e-12)


def test_gradient_identity_cases():
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(se.gradient(np.eye(3), np.zeros(3), x), x)
    assert np.array_equal(se.gradient(np.eye(3), x, x), np.zeros(3))


def test_gradient_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        se.gradient(np.eye(3), np.zeros(2), np.zeros(3))


@given(st.integers(0, 10**6), st.floats(0.01, 10), st.sampled_from(["random", "adversarial"]))
def test_fp_gradient_error_norm(seed, nu, pert):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 9))
    y, x = rng.standard_normal(6), rng.standard_normal(9)
    spec = se.GradientSpec("fp", nu, pert, seed)
    err = se.gradient(A, y, x, spec, k=3) - se.gradient(A, y, x)
    assert abs(np.linalg.norm(err) - nu) <= 1e-12 * max(1.0, nu)


def test_fp_gradient_half():
    rng = np.random.default_rng(1)
    A, y, x = rng.standard_normal((4, 5)), rng.standard_normal(4), rng.standard_normal(5)
    err = se.gradient(A, y, x, se.GradientSpec("fp", 0.5)) - se.gradient(A, y, x)
    assert np.linalg.norm(err) == pytest.approx(0.5, abs=1e-12)


def test_adversarial_direction_is_fixed_and_aligned():
    rng = np.random.default_rng(2)
    A, y = rng.standard_normal((4, 5)), rng.standard_normal(4)
    spec = se.GradientSpec("fp", 0.3, "adversarial", 9)
    for k in range(3):
        x = rng.standard_normal(5)
        g = se.gradient(A, y, x)
        e = se.gradient(A, y, x, spec, k) - g
        assert e @ g >= 0


def test_gradient_decay_schedule():
    spec = se.GradientSpec("fp", 1.0, decay=0.5)
    assert [spec.precision(k) for k in (0, 1, 3)] == [1.0, 0.5, 0.125]
    with pytest.raises(SpecError):
        se.GradientSpec("exact", 0.1)


@pytest.mark.parametrize("kind", sorted(se.MANIFOLDS))
def test_manifold_is_rank_three(kind):
    cloud = se.gen_manifold(kind, 400, 20, 5)
    s = np.linalg.svd(cloud.points, compute_uv=False)
    assert s[3] / s[0] < 1e-10


@pytest.mark.parametrize("kind", sorted(se.MANIFOLDS))
def test_manifold_deterministic_and_single_point(kind):
    a = se.gen_manifold(kind, 50, 6, 3)
    assert np.array_equal(a.points, se.gen_manifold(kind, 50, 6, 3).points)
    assert se.gen_manifold(kind, 1, 6, 3).d == 1


def test_manifold_embedding_is_isometric():
    # the same surface sample lifted to two ambient sizes keeps its distances
    a = se.gen_manifold("swiss-roll", 30, 3, 4).points
    b = se.gen_manifold("swiss-roll", 30, 40, 4).points
    da = np.linalg.norm(a[:, None] - a[None], axis=2)
    db = np.linalg.norm(b[:, None] - b[None], axis=2)
    assert np.allclose(da, db, rtol=1e-10, atol=1e-10)


def test_swiss_roll_pca_large_scale():
    cloud = se.gen_manifold("swiss-roll", 5000, 200, 0)
    centered = cloud.points - cloud.points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False) ** 2
    assert s[:3].sum() / s.sum() > 0.99


def test_manifold_errors():
    with pytest.raises(AmbientTooSmall):
        se.gen_manifold("s-curve", 10, 2, 0)
    with pytest.raises(SpecError):
        se.gen_manifold("torus", 10, 5, 0)


def test_select_signal_membership():
    cloud = se.gen_manifold("s-curve", 5000, 20, 1)
    sig = se.select_signal(cloud, 50, 2)
    assert sig.X.shape == (20, 50)
    for j in range(50):
        assert np.any(np.all(cloud.points == sig.X[:, j], axis=1))
    assert np.array_equal(sig.X, se.select_signal(cloud, 50, 2).X)


def test_select_signal_single_atom_and_vec_layout():
    cloud = PointCloud(np.arange(12.0).reshape(4, 3))
    sig = se.select_signal(cloud, 1, 0)
    assert np.array_equal(sig.vec(), cloud.points[sig.indices[0]])
    two = se.SignalMatrix(np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]]))
    assert two.vec().tolist() == [1, 2, 3, 4, 5, 6]
    assert np.array_equal(se.SignalMatrix.unvec(two.vec(), 3), two.X)


def test_select_signal_errors():
    with pytest.raises(SpecError):
        se.select_signal(PointCloud(np.eye(3)), 0, 1)
    with pytest.raises(EmptyCloud):
        se.select_signal(None, 2, 1)
