"""Sampling operators, gradient oracles, synthetic manifold dictionaries and signals."""

from dataclasses import dataclass

import numpy as np

from .covertree import PointCloud
from .errors import (
    AmbientTooSmall,
    DimensionMismatch,
    EmptyCloud,
    ParseError,
    SpecError,
    ZeroDimension,
)

__all__ = [
    "SamplingOperator",
    "SignalMatrix",
    "GradientSpec",
    "gen_gaussian",
    "gradient",
    "spectral_norm",
    "gen_manifold",
    "select_signal",
    "MANIFOLDS",
]


class SamplingOperator:
    """Dense linear sampling map ``A`` with ``m`` rows and ``n`` columns."""

    def __init__(self, matrix, seed=None):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2:
            raise DimensionMismatch(f"sampling matrix must be 2-D, got shape {A.shape}")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise ZeroDimension(f"sampling matrix has shape {A.shape}")
        A.setflags(write=False)
        self.matrix = A
        self.seed = seed

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    def __repr__(self):
        return f"SamplingOperator(m={self.m}, n={self.n}, seed={self.seed})"

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected vector of length {self.n}, got shape {x.shape}")
        return self.matrix @ x

    def adjoint(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.m,):
            raise DimensionMismatch(f"expected vector of length {self.m}, got shape {v.shape}")
        return self.matrix.T @ v

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.m},{self.n},{'' if self.seed is None else self.seed}\n")
            np.savetxt(fh, self.matrix, delimiter=",", fmt="%.17g")

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if len(header) != 3:
                raise ParseError("operator header must be m,n,seed", 1)
            try:
                m, n = int(header[0]), int(header[1])
                seed = int(header[2]) if header[2] else None
            except ValueError:
                raise ParseError(f"bad operator header {header}", 1) from None
            rows = []
            for lineno, raw in enumerate(fh, start=2):
                if not raw.strip():
                    continue
                try:
                    row = [float(v) for v in raw.split(",")]
                except ValueError:
                    raise ParseError("non-numeric matrix entry", lineno) from None
                if len(row) != n:
                    raise ParseError(f"expected {n} columns, found {len(row)}", lineno)
                rows.append(row)
        if len(rows) != m:
            raise ParseError(f"expected {m} matrix rows, found {len(rows)}", m + 1)
        return cls(np.array(rows), seed)


def _matrix(A):
    return A.matrix if isinstance(A, SamplingOperator) else np.asarray(A, dtype=float)


def gen_gaussian(m, n, seed):
    """``m x n`` matrix with i.i.d. standard normal entries from ``seed``."""
    if m < 1 or n < 1:
        raise ZeroDimension(f"need m, n >= 1, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    return SamplingOperator(rng.standard_normal((m, n)), seed)


def spectral_norm(A, rtol=1e-10, max_iter=10000):
    """Largest singular value by power iteration on ``A^T A``."""
    A = _matrix(A)
    v = np.random.default_rng(12345).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        new = np.sqrt(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / np.linalg.norm(w)
        if abs(new - est) <= rtol * new:
            return float(new)
        est = new
    return float(est)


@dataclass(frozen=True)
class GradientSpec:
    """Gradient oracle settings.

    ``mode`` is ``"exact"`` or ``"fp"``. In fp mode the returned gradient is
    off by a vector of norm exactly ``nu_g`` (times ``decay**k`` when a decay
    is set). ``perturbation`` picks a fresh random direction per iteration or
    a fixed direction whose sign is matched to the exact gradient.
    """

    mode: str = "exact"
    nu_g: float = 0.0
    perturbation: str = "random"
    seed: int = 0
    decay: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "fp"):
            raise SpecError(f"unknown gradient mode {self.mode!r}")
        if self.perturbation not in ("random", "adversarial"):
            raise SpecError(f"unknown perturbation {self.perturbation!r}")
        if self.nu_g < 0:
            raise SpecError(f"nu_g must be >= 0, got {self.nu_g}")
        if self.mode == "exact" and self.nu_g != 0:
            raise SpecError("exact gradients carry nu_g = 0")
        if self.decay is not None and not 0 < self.decay < 1:
            raise SpecError(f"decay must lie in (0, 1), got {self.decay}")

    def precision(self, k):
        if self.mode == "exact":
            return 0.0
        if self.decay is None:
            return self.nu_g
        return self.nu_g * self.decay ** k


def gradient(A, y, x, spec=None, k=0):
    """``A^T (A x - y)``, perturbed per ``spec`` at iteration ``k``."""
    A = _matrix(A)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != (A.shape[1],) or y.shape != (A.shape[0],):
        raise DimensionMismatch(
            f"A is {A.shape}, x has shape {x.shape}, y has shape {y.shape}"
        )
    g = A.T @ (A @ x - y)
    if spec is None or spec.mode == "exact":
        return g
    nu = spec.precision(k)
    if nu == 0:
        return g
    if spec.perturbation == "random":
        e = np.random.default_rng([spec.seed, k]).standard_normal(g.shape[0])
    else:
        e = np.random.default_rng([spec.seed]).standard_normal(g.shape[0])
        if e @ g < 0:
            e = -e
    return g + nu * (e / np.linalg.norm(e))


# -- synthetic dictionaries --------------------------------------------------


def _s_curve(t, s):
    t = 3 * np.pi * (t - 0.5)
    return np.column_stack((np.sin(t), 2 * s, np.sign(t) * (np.cos(t) - 1)))


def _swiss_roll(t, s):
    t = 1.5 * np.pi * (1 + 2 * t)
    return np.column_stack((t * np.cos(t), 21 * s, t * np.sin(t)))


def _oscillating_wave(t, s):
    return np.column_stack((t, s, np.sin(4 * np.pi * t)))


MANIFOLDS = {
    "s-curve": _s_curve,
    "swiss-roll": _swiss_roll,
    "oscillating-wave": _oscillating_wave,
}


def gen_manifold(kind, d, ambient_dim, seed):
    """Sample ``d`` points on a 2-parameter surface and embed it isometrically.

    The surface lives in 3-D; an orthonormal ``ambient_dim x 3`` map (from
    the QR factorisation of a seeded Gaussian matrix) lifts it, so pairwise
    distances are those of the surface.
    """
    if kind not in MANIFOLDS:
        raise SpecError(f"unknown manifold {kind!r}; choose from {sorted(MANIFOLDS)}")
    if d < 1:
        raise EmptyCloud(f"need d >= 1, got {d}")
    if ambient_dim < 3:
        raise AmbientTooSmall(f"ambient dimension must be >= 3, got {ambient_dim}")
    rng = np.random.default_rng(seed)
    t, s = rng.random(d), rng.random(d)
    surface = MANIFOLDS[kind](t, s)
    Q, _ = np.linalg.qr(rng.standard_normal((ambient_dim, 3)))
    return PointCloud(surface @ Q.T)


@dataclass
class SignalMatrix:
    """Ground-truth signal: ``J`` dictionary atoms as the columns of ``X``."""

    X: np.ndarray
    indices: np.ndarray | None = None

    @property
    def J(self):
        return self.X.shape[1]

    def vec(self):
        return self.X.ravel(order="F").copy()

    @staticmethod
    def unvec(x, ambient_dim):
        x = np.asarray(x, dtype=float)
        if x.size % ambient_dim:
            raise DimensionMismatch(f"length {x.size} is not a multiple of {ambient_dim}")
        return x.reshape(-1, ambient_dim).T


def select_signal(cloud, J, seed):
    """Draw ``J`` atoms uniformly with replacement."""
    if J < 1:
        raise SpecError(f"need J >= 1, got {J}")
    if cloud is None or len(cloud) == 0:
        raise EmptyCloud("cannot draw a signal from an empty cloud")
    idx = np.random.default_rng(seed).integers(0, cloud.d, size=J)
    return SignalMatrix(cloud.points[idx].T.copy(), idx)
