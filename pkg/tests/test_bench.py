import io
import math

import numpy as np
import pytest

from inexact_ipg import bench
from inexact_ipg.errors import GammaOutOfRange, SpecError

SMALL = dict(d=200, ambient_dim=10, J=4, trials=2, seed=3)


def test_spec_validation():
    with pytest.raises(SpecError):
        bench.ExperimentSpec(J=0)
    with pytest.raises(SpecError):
        bench.ExperimentSpec(trials=0)
    with pytest.raises(SpecError):
        bench.ExperimentSpec(ratios=(0.0, 0.5))
    with pytest.raises(SpecError):
        bench.ExperimentSpec(ratios=(1.2,))
    with pytest.raises(SpecError):
        bench.ExperimentSpec(oracles=("nearest",))
    with pytest.raises(SpecError):
        bench.ExperimentSpec(dataset="torus")


def test_instances_depend_on_cell_not_grid():
    a = bench.ExperimentSpec(ratios=(0.2, 0.3), **SMALL)
    b = bench.ExperimentSpec(ratios=(0.3,), **SMALL)
    cloud = bench.make_cloud(a)
    A1, y1, x1 = bench.instance(a, cloud, 0.3, 1)
    A2, y2, x2 = bench.instance(b, cloud, 0.3, 1)
    assert np.array_equal(A1, A2) and np.array_equal(x1, x2)
    A3, _, x3 = bench.instance(a, cloud, 0.3, 0)
    assert not np.array_equal(A1, A3)


def test_convergence_rows_and_reproducibility():
    spec = bench.ExperimentSpec(ratios=(0.5,), oracles=("exact", "eps:0.4"), tol=None,
                                max_iters=7, **SMALL)
    t1 = bench.cmd_convergence(spec)
    t2 = bench.cmd_convergence(spec)
    assert len(t1.rows) == 2 * 2 * 7  # trials x oracles x iterations
    assert t1.rows == t2.rows
    buf = io.StringIO()
    t1.write_csv(buf)
    assert buf.getvalue().splitlines()[0].startswith("oracle,ratio,trial,k,error")


def test_full_sampling_recovers():
    spec = bench.ExperimentSpec(ratios=(1.0,), oracles=("exact",), tol=None, step_scale=0.9,
                                **SMALL)
    table = bench.cmd_phase_transition(spec)
    assert table.rows[0][3] is True


def test_phase_grid_shape():
    spec = bench.ExperimentSpec(ratios=(0.3, 0.6), oracles=("eps:0.4", "eps:3"), tol=None,
                                max_iters=10, **SMALL)
    table = bench.cmd_phase_transition(spec)
    assert len(table.rows) == 4
    for row in table.rows:
        assert row[2] >= 0 and row[3] == (row[2] <= bench.RECOVERY_THRESHOLD)
        assert row[4] == 2


def test_cost_table():
    spec = bench.ExperimentSpec(ratios=(0.5,), oracles=("exact", "tree", "eps:0.4"),
                                step_scale=0.9, **SMALL)
    table = bench.cmd_cost(spec)
    evals = dict(zip(table.column("oracle"), table.column("mean_dist_evals")))
    assert evals["tree"] < evals["exact"]
    assert len(table.rows) == 3


def test_parallel_matches_serial():
    kw = dict(ratios=(0.4, 0.8), oracles=("tree",), tol=None, max_iters=5, **SMALL)
    serial = bench.cmd_convergence(bench.ExperimentSpec(**kw))
    parallel = bench.cmd_convergence(bench.ExperimentSpec(jobs=2, **kw))
    assert serial.rows == parallel.rows


def test_converse_table():
    table = bench.cmd_converse([math.pi / 3], [0.5, 0.6, 0.0], K=20)
    assert len(table.rows) == 3 * 21
    for eps, conv in [(0.5, True), (0.6, False), (0.0, True)]:
        rows = table.where(eps=eps)
        assert all(r[8] is conv and r[9] is conv for r in rows)
        assert max(r[7] for r in rows) <= 1e-12
    zero = table.where(eps=0.0)
    assert all(abs(r[4] - 1.0) == 0 for r in zero if r[3] >= 1)
    with pytest.raises(GammaOutOfRange):
        bench.cmd_converse([2.0], [0.1])


def test_tiny_instance_condition():
    A, y, x_star, cloud, const = bench.tiny_instance(2)
    assert const.M < 2 * const.m_x
    assert np.allclose(A @ x_star, y)


def test_bounds_table_holds():
    table = bench.cmd_bounds(seed=1, max_iters=15)
    assert len(table.rows) == 15
    assert all(r[3] >= -1e-9 for r in table.rows)
