import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inexact_ipg import ipg
from inexact_ipg.analysis import estimate_constants
from inexact_ipg.covertree import PointCloud, build
from inexact_ipg.errors import DimensionMismatch, GammaOutOfRange, NonpositiveStep
from inexact_ipg.projection import OracleSpec
from inexact_ipg.sensing import GradientSpec, gen_gaussian, gen_manifold, select_signal


def _instance(seed, d=100, amb=8, J=4, ratio=1.5, kind="s-curve"):
    cloud = gen_manifold(kind, d, amb, seed)
    x_star = select_signal(cloud, J, seed + 50).vec()
    A = gen_gaussian(int(ratio * amb * J), amb * J, seed + 99).matrix
    return A, A @ x_star, x_star, cloud


def test_identity_one_step():
    cloud = gen_manifold("s-curve", 30, 5, 0)
    x_star = select_signal(cloud, 3, 1).vec()
    x, trace = ipg.run(np.eye(15), x_star, cloud, None, ipg.IpgConfig(mu=1.0), x_star)
    assert trace[0].error == 0.0
    assert np.array_equal(x, x_star)


def test_small_instance_recovers():
    A, y, x_star, cloud = _instance(3)
    tree = build(cloud)
    for oracle in ("exact", "tree", "pfp:1.0:0.3"):
        cfg = ipg.IpgConfig(mu=0.9 / A.shape[0], tol=None, oracle=oracle)
        _, trace = ipg.run(A, y, cloud, tree, cfg, x_star)
        assert trace.errors().min() <= 1e-4, oracle


def test_iterates_stay_in_model():
    A, y, x_star, cloud = _instance(4, ratio=0.75)
    tree = build(cloud)
    for oracle in ("exact", "fp:0.2", "eps:1"):
        cfg = ipg.IpgConfig(mu=1 / A.shape[0], max_iters=5, tol=None, oracle=oracle)
        x, _ = ipg.run(A, y, cloud, tree, cfg, x_star)
        for col in x.reshape(4, 8):
            assert np.any(np.all(cloud.points == col, axis=1))


@given(st.integers(0, 10**6))
def test_objective_monotone_with_safe_step(seed):
    rng = np.random.default_rng(seed)
    cloud = PointCloud(rng.standard_normal((int(rng.integers(5, 25)), 3)))
    J = int(rng.integers(1, 3))
    x_star = select_signal(cloud, J, seed).vec()
    A = gen_gaussian(int(rng.integers(2, 10)), 3 * J, seed).matrix
    const = estimate_constants(A, cloud, x_star, J)
    cfg = ipg.IpgConfig(mu=1 / const.M, max_iters=15, tol=None)
    _, trace = ipg.run(A, A @ x_star, cloud, None, cfg, x_star)
    # the start x = 0 is not a model point, so descent is guaranteed from x^1 on
    f = trace.objectives()
    assert np.all(np.diff(f) <= 1e-12 * max(f[0], 1e-300))


def test_deterministic_traces():
    A, y, x_star, cloud = _instance(5, ratio=1.0)
    tree = build(cloud)
    cfg = ipg.IpgConfig(mu=1 / A.shape[0], oracle="eps:0.4",
                        gradient=GradientSpec("fp", 0.01, seed=3))
    _, a = ipg.run(A, y, cloud, tree, cfg, x_star)
    _, b = ipg.run(A, y, cloud, tree, cfg, x_star)
    assert a.records == b.records


def test_trace_bookkeeping():
    A, y, x_star, cloud = _instance(6, ratio=1.0)
    tree = build(cloud)
    cfg = ipg.IpgConfig(mu=1 / A.shape[0], max_iters=12, tol=None, oracle="pfp:1.0:0.5",
                        gradient=GradientSpec("fp", 0.1, decay=0.5))
    _, trace = ipg.run(A, y, cloud, tree, cfg, x_star)
    assert len(trace) == 12
    assert np.all(np.diff(trace.evals()) >= 0)
    assert [r.k for r in trace] == list(range(1, 13))
    assert trace[1].nu_p == 0.25 and trace[1].nu_g == 0.025


def test_tolerance_stops_early():
    A, y, x_star, cloud = _instance(7, ratio=1.5)
    _, trace = ipg.run(A, y, cloud, None, ipg.IpgConfig(mu=0.9 / A.shape[0], tol=1e-8), x_star)
    assert len(trace) < 30
    f = trace.objectives()
    assert abs(f[-2] - f[-1]) <= 1e-8


def test_trace_csv_columns():
    A, y, x_star, cloud = _instance(8, ratio=1.0)
    cfg = ipg.IpgConfig(mu=1 / A.shape[0], max_iters=3, tol=None)
    _, with_star = ipg.run(A, y, cloud, None, cfg, x_star)
    _, without = ipg.run(A, y, cloud, None, cfg)
    buf = io.StringIO()
    with_star.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "k,error,objective,cum_dist_evals,nu_p_k,nu_g_k"
    assert len(lines) == 4
    buf = io.StringIO()
    without.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "k,objective,cum_dist_evals,nu_p_k,nu_g_k"


def test_config_and_dimension_errors():
    with pytest.raises(NonpositiveStep):
        ipg.IpgConfig(mu=0.0)
    cloud = PointCloud(np.eye(3))
    with pytest.raises(DimensionMismatch):
        ipg.run(np.ones((2, 7)), np.ones(2), cloud, None, ipg.IpgConfig(mu=1.0))
    with pytest.raises(DimensionMismatch):
        ipg.run(np.ones((2, 6)), np.ones(3), cloud, None, ipg.IpgConfig(mu=1.0))


# -- the adversarial line example -------------------------------------------------


def test_converse_reference_value():
    xs = ipg.run_converse(math.pi / 3, 0.5, 3)
    factor = 0.5 * math.sqrt(3)
    assert xs[3, 0] == pytest.approx(1 - factor ** 3, rel=1e-12)
    assert xs[3, 0] == pytest.approx(0.35048094716167, rel=1e-10)
    assert np.all(xs[:, 1] == 0)


def test_converse_exact_projection_one_step():
    xs = ipg.run_converse(math.pi / 5, 0.0, 4)
    assert xs[1].tolist() == pytest.approx([1.0, 0.0], abs=1e-15)
    assert np.allclose(xs[1:], [[1.0, 0.0]] * 4, rtol=0, atol=1e-15)


def test_converse_divergence():
    xs = ipg.run_converse(math.pi / 3, 0.6, 60)
    err = np.abs(xs[1:, 0] - 1)
    assert np.all(np.diff(err) > 0)
    assert err[-1] > 9


@given(st.floats(0, 1.5), st.floats(0, 1.2))
def test_converse_closed_form(gamma, eps):
    xs = ipg.run_converse(gamma, eps, 20)
    for k in range(1, 21):
        cf = ipg.converse_closed_form(gamma, eps, k)
        assert abs(xs[k, 0] - cf) <= 1e-9 * max(1.0, abs(cf))


def test_converse_gamma_range():
    with pytest.raises(GammaOutOfRange):
        ipg.run_converse(math.pi / 2, 0.1, 3)
    with pytest.raises(GammaOutOfRange):
        ipg.run_converse(-0.1, 0.1, 3)


def test_oracle_strings_accepted():
    cfg = ipg.IpgConfig(mu=1.0, oracle="fp:0.1")
    assert cfg.oracle == OracleSpec("fp", nu_p=0.1)
