"""Iterative projected gradient with exact or inexact oracles."""

import csv
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimensionMismatch, GammaOutOfRange, NonpositiveStep, SpecError
from .projection import OracleSpec, adversarial_line_project, project
from .sensing import GradientSpec, SignalMatrix, _matrix, gradient

__all__ = ["IpgConfig", "TraceRecord", "Trace", "run", "run_converse", "converse_closed_form"]


@dataclass
class IpgConfig:
    """Solver settings.

    ``tol`` stops the loop once the absolute objective change between two
    iterates is at most ``tol``; set it to None to always run ``max_iters``.
    """

    mu: float
    max_iters: int = 30
    tol: float | None = 1e-8
    oracle: OracleSpec = field(default_factory=lambda: OracleSpec("exact"))
    gradient: GradientSpec = field(default_factory=GradientSpec)

    def __post_init__(self):
        if isinstance(self.oracle, str):
            self.oracle = OracleSpec.parse(self.oracle)
        if not self.mu > 0:
            raise NonpositiveStep(f"step size must be positive, got {self.mu}")
        if self.max_iters < 1:
            raise SpecError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol is not None and self.tol < 0:
            raise SpecError(f"tol must be >= 0, got {self.tol}")


@dataclass
class TraceRecord:
    k: int
    error: float | None
    objective: float
    cum_dist_evals: int
    nu_p: float | None
    nu_g: float
    abs_error: float | None = None
    # sqrt of the summed per-column squared excess allowed by an additive oracle
    nu_p_eff: float | None = None


@dataclass
class Trace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def has_error(self):
        return bool(self.records) and self.records[0].error is not None

    def errors(self):
        return np.array([r.error for r in self.records], dtype=float)

    def objectives(self):
        return np.array([r.objective for r in self.records])

    def evals(self):
        return np.array([r.cum_dist_evals for r in self.records], dtype=np.int64)

    def columns(self):
        cols = ["k"]
        if self.has_error:
            cols.append("error")
        return cols + ["objective", "cum_dist_evals", "nu_p_k", "nu_g_k"]

    def rows(self):
        for r in self.records:
            row = [r.k]
            if self.has_error:
                row.append(r.error)
            row += [r.objective, r.cum_dist_evals, "" if r.nu_p is None else r.nu_p, r.nu_g]
            yield row

    def write_csv(self, path_or_file):
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                self._write(fh)

    def _write(self, fh):
        w = csv.writer(fh)
        w.writerow(self.columns())
        w.writerows(self.rows())


def _objective(A, y, x):
    r = y - A @ x
    return 0.5 * float(r @ r)


def run(A, y, cloud, tree, config, x_star=None):
    """Run IPG from ``x = 0`` and return the final iterate and its trace.

    The signal is the column-stacked vectorisation of an ``ambient_dim x J``
    matrix whose columns are projected onto the cloud independently.
    """
    A = _matrix(A)
    y = np.asarray(y, dtype=float)
    amb = cloud.ambient_dim
    m, n = A.shape
    if y.shape != (m,) or n % amb:
        raise DimensionMismatch(
            f"A is {A.shape}, y has shape {y.shape}, atom dimension {amb}"
        )
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        if x_star.shape != (n,):
            raise DimensionMismatch(f"x* has shape {x_star.shape}, expected ({n},)")
        star_norm = float(np.linalg.norm(x_star))

    x = np.zeros(n)
    f_prev = _objective(A, y, x)
    evals = 0
    trace = Trace()
    for k in range(1, config.max_iters + 1):
        g = gradient(A, y, x, config.gradient, k)
        z = x - config.mu * g
        out = project(SignalMatrix.unvec(z, amb), cloud, tree, config.oracle, k)
        x = SignalMatrix(out.X).vec()
        evals += out.distance_evals
        f = _objective(A, y, x)

        nu_p = out.nu_p
        nu_eff = None
        if nu_p is not None:
            # achieved distances bound the true ones from above
            nu_eff = math.sqrt(float(np.sum(2 * out.distances * nu_p + nu_p * nu_p)))
        err = abs_err = None
        if x_star is not None:
            abs_err = float(np.linalg.norm(x - x_star))
            err = abs_err / star_norm if star_norm > 0 else abs_err
        trace.records.append(TraceRecord(
            k, err, f, evals, nu_p, config.gradient.precision(k), abs_err, nu_eff))
        if config.tol is not None and abs(f_prev - f) <= config.tol:
            break
        f_prev = f
    return x, trace


def converse_closed_form(gamma, eps, k):
    return 1.0 - (eps * math.tan(gamma)) ** k


def run_converse(gamma, eps, K):
    """Iterate IPG on the one-measurement line example with the adversarial oracle.

    ``A = [cos g, -sin g]``, ``x* = [1, 0]``, ``y = A x*`` and step
    ``1 / cos(g)**2``. Returns the iterates ``x^0..x^K`` as a ``(K+1, 2)`` array.
    """
    if not 0 <= gamma < math.pi / 2:
        raise GammaOutOfRange(f"gamma must lie in [0, pi/2), got {gamma}")
    if eps < 0:
        raise SpecError(f"eps must be >= 0, got {eps}")
    A = np.array([[math.cos(gamma), -math.sin(gamma)]])
    y = A @ np.array([1.0, 0.0])
    mu = 1.0 / math.cos(gamma) ** 2
    x = np.zeros(2)
    out = [x]
    for _ in range(K):
        x = adversarial_line_project(x - mu * (A.T @ (A @ x - y)), eps)
        out.append(x)
    return np.array(out)
