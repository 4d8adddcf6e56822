"""Column-wise projection oracles onto a product of point-cloud models."""

from dataclasses import dataclass

import numpy as np

from .covertree import distances
from .errors import BadIteration, DimensionMismatch, MissingTree, SpecError

__all__ = ["OracleSpec", "ProjectionOutcome", "project", "adversarial_line_project"]

_KINDS = {"exact": 0, "tree": 0, "fp": 1, "pfp": 2, "eps": 1, "advline": 2}


@dataclass(frozen=True)
class OracleSpec:
    """A projection oracle.

    ``kind`` is one of ``exact`` (brute force), ``tree`` (exact cover-tree
    search), ``fp`` (additive precision ``nu_p``), ``pfp`` (precision
    ``nu_p * r**k`` at iteration ``k``), ``eps`` (multiplicative ``1 + eps``)
    or ``advline`` (the adversarial line oracle, with ``gamma`` recorded).
    """

    kind: str
    nu_p: float | None = None
    rate: float | None = None
    eps: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecError(f"unknown oracle {self.kind!r}")
        if self.kind in ("fp", "pfp") and not (self.nu_p is not None and self.nu_p > 0):
            raise SpecError(f"{self.kind} needs nu_p > 0, got {self.nu_p}")
        if self.kind == "pfp" and not (self.rate is not None and 0 < self.rate < 1):
            raise SpecError(f"pfp needs 0 < r < 1, got {self.rate}")
        if self.kind in ("eps", "advline") and not (self.eps is not None and self.eps >= 0):
            raise SpecError(f"{self.kind} needs eps >= 0, got {self.eps}")

    @classmethod
    def parse(cls, text):
        """Parse ``exact``, ``tree``, ``fp:0.01``, ``pfp:1.0:0.3``, ``eps:0.4`` or ``advline:0.5:1.05``."""
        parts = text.strip().split(":")
        kind = parts[0]
        if kind not in _KINDS:
            raise SpecError(f"unknown oracle {text!r}")
        if len(parts) - 1 != _KINDS[kind]:
            raise SpecError(f"oracle {kind!r} takes {_KINDS[kind]} parameter(s): {text!r}")
        try:
            args = [float(p) for p in parts[1:]]
        except ValueError:
            raise SpecError(f"non-numeric oracle parameter in {text!r}") from None
        if kind == "fp":
            return cls(kind, nu_p=args[0])
        if kind == "pfp":
            return cls(kind, nu_p=args[0], rate=args[1])
        if kind == "eps":
            return cls(kind, eps=args[0])
        if kind == "advline":
            return cls(kind, eps=args[0], gamma=args[1])
        return cls(kind)

    @property
    def label(self):
        if self.kind == "fp":
            return f"fp:{self.nu_p:g}"
        if self.kind == "pfp":
            return f"pfp:{self.nu_p:g}:{self.rate:g}"
        if self.kind == "eps":
            return f"eps:{self.eps:g}"
        if self.kind == "advline":
            return f"advline:{self.eps:g}:{self.gamma:g}"
        return self.kind

    @property
    def needs_tree(self):
        return self.kind in ("tree", "fp", "pfp", "eps")

    def precision(self, k, tree=None):
        """Additive precision used at iteration ``k``, or None for non-additive oracles."""
        if self.kind == "fp":
            return self.nu_p
        if self.kind == "pfp":
            if k < 1:
                raise BadIteration(f"pfp precision is defined for k >= 1, got {k}")
            nu = self.nu_p * self.rate ** k
            if tree is not None:
                nu = max(nu, tree.finest_resolution)
            return nu
        return None


@dataclass
class ProjectionOutcome:
    X: np.ndarray
    indices: np.ndarray
    distance_evals: int
    distances: np.ndarray
    nu_p: float | None = None


def project(X, cloud, tree, spec, k=1):
    """Replace each column of ``X`` by a (possibly approximate) nearest atom.

    Parameters
    ----------
    X : ndarray, shape (ambient_dim, J)
    cloud : PointCloud
    tree : CoverTree or None
        Required by every variant except brute force.
    spec : OracleSpec
    k : int
        Iteration number; sets the pfp precision.
    """
    X = np.asarray(X, dtype=float)
    pts = cloud.points
    if X.ndim != 2 or X.shape[0] != cloud.ambient_dim:
        raise DimensionMismatch(f"iterate has shape {X.shape}, atoms have dimension {cloud.ambient_dim}")
    if spec.kind == "advline":
        raise SpecError("advline acts on 2-vectors; use adversarial_line_project")
    if spec.needs_tree and tree is None:
        raise MissingTree(f"oracle {spec.label} needs a cover tree")
    nu = spec.precision(k, tree)

    J = X.shape[1]
    idx = np.empty(J, dtype=np.int64)
    dist = np.empty(J)
    evals = 0
    if spec.kind == "exact":
        for j in range(J):
            dj = distances(pts, X[:, j])
            idx[j] = int(np.argmin(dj))
            dist[j] = dj[idx[j]]
            evals += pts.shape[0]
    else:
        for j in range(J):
            if spec.kind == "tree":
                res = tree.nn_exact(X[:, j])
            elif spec.kind == "eps":
                res = tree.nn_eps(X[:, j], spec.eps)
            else:
                res = tree.nn_fp(X[:, j], nu)
            idx[j], dist[j] = res.index, res.distance
            evals += res.distance_evals
    return ProjectionOutcome(pts[idx].T.copy(), idx, evals, dist, nu)


def adversarial_line_project(x, eps):
    """Map ``x`` to ``[x1 + eps * x2, 0]``: a valid but worst-case (1+eps) projection onto the first axis."""
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise DimensionMismatch(f"expected a 2-vector, got shape {x.shape}")
    return np.array([x[0] + eps * x[1], 0.0])
