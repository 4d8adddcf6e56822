"""Desk-scale experiment harness: convergence traces, phase grids, cost tables,
the converse line example and theory-versus-measurement bound tables.

Every experiment draws its sampling matrix and signal from a seed sequence
keyed by (master seed, ratio, trial), so a cell gives the same instance no
matter which grid it belongs to and every oracle sees the same instance.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import analysis
from .covertree import PointCloud, build
from .errors import SpecError
from .ipg import IpgConfig, converse_closed_form, run, run_converse
from .projection import OracleSpec
from .sensing import MANIFOLDS, GradientSpec, gen_gaussian, gen_manifold, select_signal

__all__ = [
    "RECOVERY_THRESHOLD",
    "DEFAULT_RATIOS",
    "ExperimentSpec",
    "Table",
    "make_cloud",
    "instance",
    "cmd_convergence",
    "cmd_phase_transition",
    "cmd_cost",
    "cmd_converse",
    "cmd_bounds",
    "tiny_instance",
]

RECOVERY_THRESHOLD = 1e-4
DEFAULT_RATIOS = tuple(round(0.05 * i, 2) for i in range(1, 11))


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def write_csv(self, path_or_file):
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                self._write(fh)

    def _write(self, fh):
        w = csv.writer(fh)
        w.writerow(self.columns)
        w.writerows(self.rows)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match):
        idx = {k: self.columns.index(k) for k in match}
        return [r for r in self.rows if all(r[i] == match[k] for k, i in idx.items())]


@dataclass
class ExperimentSpec:
    """One desk experiment.

    ``step_scale`` multiplies the default step ``1/m``. ``tol=None`` runs
    every iteration.
    """

    dataset: str = "s-curve"
    d: int = 1000
    ambient_dim: int = 50
    J: int = 20
    ratios: tuple = DEFAULT_RATIOS
    oracles: tuple = ("exact",)
    trials: int = 5
    seed: int = 1
    max_iters: int = 30
    tol: float | None = 1e-8
    step_scale: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.dataset not in MANIFOLDS:
            raise SpecError(f"unknown dataset {self.dataset!r}")
        if self.d < 1 or self.ambient_dim < 3:
            raise SpecError(f"need d >= 1 and ambient_dim >= 3, got {self.d}, {self.ambient_dim}")
        if self.J < 1:
            raise SpecError(f"J must be >= 1, got {self.J}")
        if self.trials < 1:
            raise SpecError(f"trials must be >= 1, got {self.trials}")
        if not self.ratios:
            raise SpecError("at least one subsampling ratio is required")
        for r in self.ratios:
            if not 0 < r <= 1:
                raise SpecError(f"ratio {r} outside (0, 1]")
        if not self.oracles:
            raise SpecError("at least one oracle is required")
        self.oracles = tuple(o if isinstance(o, OracleSpec) else OracleSpec.parse(o)
                             for o in self.oracles)
        if any(o.kind == "advline" for o in self.oracles):
            raise SpecError("advline runs through cmd_converse")
        if not self.step_scale > 0:
            raise SpecError(f"step_scale must be positive, got {self.step_scale}")
        if self.max_iters < 1:
            raise SpecError(f"max_iters must be >= 1, got {self.max_iters}")

    @property
    def n(self):
        return self.ambient_dim * self.J


def make_cloud(spec):
    return gen_manifold(spec.dataset, spec.d, spec.ambient_dim, spec.seed)


def _ratio_key(ratio):
    return int(round(ratio * 10**6))


def instance(spec, cloud, ratio, trial):
    """Sampling matrix, true signal and measurements for one (ratio, trial) cell."""
    m = max(1, int(round(ratio * spec.n)))
    sig_ss, a_ss = np.random.SeedSequence([spec.seed, _ratio_key(ratio), trial]).spawn(2)
    signal = select_signal(cloud, spec.J, sig_ss)
    A = gen_gaussian(m, spec.n, a_ss)
    x_star = signal.vec()
    return A.matrix, A.matrix @ x_star, x_star


def _run_cell(args):
    spec, cloud, tree, ratio, trial = args
    A, y, x_star = instance(spec, cloud, ratio, trial)
    mu = spec.step_scale / A.shape[0]
    out = []
    for oracle in spec.oracles:
        cfg = IpgConfig(mu=mu, max_iters=spec.max_iters, tol=spec.tol, oracle=oracle)
        _, trace = run(A, y, cloud, tree if oracle.needs_tree else None, cfg, x_star)
        out.append((oracle.label, trace))
    return ratio, trial, out


def _sweep(spec, cloud=None, tree=None):
    """Run every (ratio, trial) cell; results come back in grid order."""
    cloud = make_cloud(spec) if cloud is None else cloud
    if tree is None and any(o.needs_tree for o in spec.oracles):
        tree = build(cloud)
    cells = [(spec, cloud, tree, r, t) for r in spec.ratios for t in range(spec.trials)]
    if spec.jobs > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def cmd_convergence(spec, cloud=None, tree=None):
    """One trace per (ratio, trial, oracle), long form."""
    table = Table(["oracle", "ratio", "trial", "k", "error", "objective",
                   "cum_dist_evals", "nu_p_k", "nu_g_k"])
    for ratio, trial, runs in _sweep(spec, cloud, tree):
        for label, trace in runs:
            for rec in trace:
                table.rows.append([label, ratio, trial, rec.k, rec.error, rec.objective,
                                   rec.cum_dist_evals, "" if rec.nu_p is None else rec.nu_p,
                                   rec.nu_g])
    return table


def cmd_phase_transition(spec, cloud=None, tree=None):
    """Mean final normalized error per (ratio, oracle) and the recovered flag."""
    results = _sweep(spec, cloud, tree)
    table = Table(["ratio", "oracle", "mean_error", "recovered", "trials"])
    for ratio in spec.ratios:
        for oracle in spec.oracles:
            errs = [tr.records[-1].error for r, _, runs in results if r == ratio
                    for label, tr in runs if label == oracle.label]
            mean = float(np.mean(errs))
            table.rows.append([ratio, oracle.label, mean, mean <= RECOVERY_THRESHOLD, len(errs)])
    return table


def cmd_cost(spec, cloud=None, tree=None):
    """Distance evaluations per run, averaged over trials, with the final error."""
    results = _sweep(spec, cloud, tree)
    table = Table(["oracle", "ratio", "mean_dist_evals", "mean_error", "mean_iters", "trials"])
    for oracle in spec.oracles:
        for ratio in spec.ratios:
            runs = [tr for r, _, rs in results if r == ratio
                    for label, tr in rs if label == oracle.label]
            table.rows.append([
                oracle.label, ratio,
                float(np.mean([tr.records[-1].cum_dist_evals for tr in runs])),
                float(np.mean([tr.records[-1].error for tr in runs])),
                float(np.mean([len(tr) for tr in runs])),
                len(runs),
            ])
    return table


def converse_converged(iterates):
    """Empirical convergence: the final error is below the starting error.

    Comparing against the previous step instead fails once the iterates stall
    one ulp away from the solution.
    """
    err = np.abs(iterates[:, 0] - 1.0)
    return bool(err[-1] < err[0])


def cmd_converse(gammas, epsilons, K=50):
    """Simulated and closed-form iterates of the line example on a (gamma, eps) grid."""
    if K < 1:
        raise SpecError(f"K must be >= 1, got {K}")
    table = Table(["gamma", "eps", "factor", "k", "x1", "x2", "closed_form",
                   "rel_dev", "converged", "predicted"])
    for g in gammas:
        for e in epsilons:
            xs = run_converse(g, e, K)
            factor = e * math.tan(g)
            conv = converse_converged(xs)
            for k in range(K + 1):
                cf = converse_closed_form(g, e, k)
                dev = abs(xs[k, 0] - cf)
                rel = dev / abs(cf) if cf != 0 else dev
                table.rows.append([g, e, factor, k, xs[k, 0], xs[k, 1], cf, rel,
                                   conv, factor < 1])
    return table


# -- theory versus measurement ------------------------------------------------


def tiny_instance(seed, d=60, ambient_dim=4, J=1, m=None, max_draws=200, accept=None):
    """A small cloud, signal and sampling matrix with ``M < 2 m_x``.

    The matrix is redrawn until the condition holds, and ``accept(constants)``
    too when given. Returns ``(A, y, x_star, cloud, constants)``.
    """
    m = 6 * ambient_dim * J if m is None else m
    ss = np.random.SeedSequence([seed, d, ambient_dim, J, m])
    c_ss, s_ss, a_ss = ss.spawn(3)
    rng = np.random.default_rng(c_ss)
    cloud = PointCloud(rng.standard_normal((d, ambient_dim)))
    x_star = select_signal(cloud, J, s_ss).vec()
    for a_seed in a_ss.spawn(max_draws):
        A = gen_gaussian(m, ambient_dim * J, a_seed).matrix
        const = analysis.estimate_constants(A, cloud, x_star, J)
        if const.M < 2 * const.m_x and (accept is None or accept(const)):
            return A, A @ x_star, x_star, cloud, const
    raise SpecError(f"no acceptable matrix in {max_draws} draws")


def cmd_bounds(seed=0, d=60, ambient_dim=4, J=1, m=None, oracle="fp:0.05",
               nu_g=0.01, max_iters=30):
    """Measured error next to the theoretical bound at every iteration."""
    A, y, x_star, cloud, const = tiny_instance(seed, d, ambient_dim, J, m)
    spec = OracleSpec.parse(oracle)
    tree = build(cloud)
    mu = 1.0 / const.M
    grad = GradientSpec("fp", nu_g, seed=seed) if nu_g > 0 else GradientSpec()
    cfg = IpgConfig(mu=mu, max_iters=max_iters, tol=None, oracle=spec, gradient=grad)
    _, trace = run(A, y, cloud, tree if spec.needs_tree else None, cfg, x_star)
    x_norm = float(np.linalg.norm(x_star))
    nu_gs = [r.nu_g for r in trace]
    table = Table(["k", "measured", "bound", "slack"])
    for rec in trace:
        k = rec.k
        if spec.kind == "eps":
            bound = analysis.rate_and_bound_eps(mu, const.m_x, const.M, const.spectral_norm,
                                                spec.eps, nu_gs, 0.0, k, x_norm)[3]
        else:
            nu_ps = [0.0 if r.nu_p_eff is None else r.nu_p_eff for r in trace]
            bound = analysis.bound_fp(k, x_norm, mu, const.m_x, const.M, nu_gs, nu_ps, 0.0)
        table.rows.append([k, rec.abs_error, bound, bound - rec.abs_error])
    return table


def with_overrides(spec, **kw):
    return replace(spec, **{k: v for k, v in kw.items() if v is not None})
