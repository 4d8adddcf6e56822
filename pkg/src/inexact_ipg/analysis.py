"""Embedding constants, convergence-rate calculators and error bounds.

Notation: ``M`` is the largest and ``m_x`` the smallest restricted energy
ratio ``||A v||^2 / ||v||^2`` of the sampling matrix, over differences of
model points (``M``) or differences with the true signal (``m_x``).
"""

from dataclasses import dataclass
import math

import numpy as np

from .covertree import distances
from .errors import (
    ConditionViolated,
    DegenerateCloud,
    DimensionMismatch,
    EpsilonTooLarge,
    NonpositivePrecision,
    RateOutOfRange,
    StepOutOfRange,
    TooLargeToEnumerate,
    XStarNotInModel,
)
from .sensing import _matrix, spectral_norm

__all__ = [
    "EmbeddingConstants",
    "estimate_constants",
    "rate_fp",
    "nu_tilde",
    "bound_fp",
    "rate_and_bound_eps",
    "eps_distortion",
    "max_admissible_eps",
    "bound_pfp",
    "iterations_for_accuracy",
    "jl_distortion",
    "PFP_TIE_SLACK",
]

MAX_STATES = 10**6
# cap on the number of product-space difference vectors enumerated for M
MAX_DIFFERENCES = 5 * 10**7
# rate bump used when the pfp decay equals the contraction factor
PFP_TIE_SLACK = 1e-6


@dataclass(frozen=True)
class EmbeddingConstants:
    M: float
    m_x: float
    spectral_norm: float


def _blocks(A, amb, J):
    A = _matrix(A)
    if A.shape[1] != amb * J:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, expected {amb}*{J}")
    return [A[:, j * amb:(j + 1) * amb] for j in range(J)]


def _extreme_ratio(images, sqnorms, pick, chunk=2048):
    """Max or min of ||sum_j u_j||^2 / sum_j |v_j|^2 over one choice per column.

    ``images[j]`` holds the candidate ``A_j v`` vectors as columns and
    ``sqnorms[j]`` the matching ``||v||^2``. Choices with zero denominator
    are skipped.
    """
    m = images[0].shape[0]
    prefix = np.zeros((m, 1))
    pden = np.zeros(1)
    for U, dn in zip(images[:-1], sqnorms[:-1]):
        prefix = (prefix[:, :, None] + U[:, None, :]).reshape(m, -1)
        pden = (pden[:, None] + dn[None, :]).ravel()
    U, dn = images[-1], sqnorms[-1]
    last_sq = np.sum(U * U, axis=0)
    best = None
    for s in range(0, prefix.shape[1], chunk):
        P = prefix[:, s:s + chunk]
        if len(images) == 1:
            num = last_sq[None, :]
        else:
            num = np.sum(P * P, axis=0)[:, None] + last_sq[None, :] + 2 * (P.T @ U)
        den = pden[s:s + chunk, None] + dn[None, :]
        ok = den > 0
        if not ok.any():
            continue
        val = pick(num[ok] / den[ok])
        best = val if best is None else pick([best, val])
    return float(best)


def estimate_constants(A, cloud, x_star, J):
    """Exact ``M``, ``m_x`` and ``||A||`` by enumerating the product model.

    Parameters
    ----------
    A : array_like, shape (m, ambient_dim * J)
    cloud : PointCloud
    x_star : array_like
        Column-stacked signal whose columns must be atoms of ``cloud``.
    J : int

    Raises
    ------
    TooLargeToEnumerate
        ``d**J`` exceeds one million, or the difference product for ``M``
        exceeds ``MAX_DIFFERENCES``.
    XStarNotInModel
        Some column of ``x_star`` is not an atom.
    """
    pts = cloud.points
    d, amb = pts.shape
    if float(d) ** J > MAX_STATES:
        raise TooLargeToEnumerate(f"{d}**{J} product states exceed {MAX_STATES}")
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (amb * J,):
        raise DimensionMismatch(f"x* has shape {x_star.shape}, expected ({amb * J},)")
    cols = x_star.reshape(J, amb)
    for j, c in enumerate(cols):
        if not np.any(np.all(pts == c, axis=1)):
            raise XStarNotInModel(f"column {j} of x* is not an atom of the cloud")
    n_diff = d * (d - 1) + 1
    if float(n_diff) ** J > MAX_DIFFERENCES:
        raise TooLargeToEnumerate(
            f"{n_diff}**{J} difference vectors exceed {MAX_DIFFERENCES}")
    blocks = _blocks(A, amb, J)

    # m_x: every model point against x*
    imgs, sq = [], []
    for Aj, c in zip(blocks, cols):
        V = pts - c
        imgs.append(Aj @ V.T)
        sq.append(np.sum(V * V, axis=1))
    m_x = _extreme_ratio(imgs, sq, np.min)

    # M: every difference of two model points, column by column
    a, b = np.nonzero(~np.eye(d, dtype=bool))
    V = np.vstack((np.zeros((1, amb)), pts[a] - pts[b]))
    sqd = np.sum(V * V, axis=1)
    imgs = [Aj @ V.T for Aj in blocks]
    M = _extreme_ratio(imgs, [sqd] * J, np.max)
    return EmbeddingConstants(M, m_x, spectral_norm(A))


# -- rate and bound calculators ---------------------------------------------


def rate_fp(mu, m_x):
    """Contraction factor ``sqrt(1 / (mu * m_x) - 1)``; requires ``0 < mu <= 1/m_x``."""
    if not (mu > 0 and m_x > 0):
        raise StepOutOfRange(f"need mu > 0 and m_x > 0, got mu={mu}, m_x={m_x}")
    if mu > 1.0 / m_x:
        raise StepOutOfRange(f"mu = {mu} exceeds 1/m_x = {1.0 / m_x}")
    return math.sqrt(max(0.0, 1.0 / (mu * m_x) - 1.0))


def _per_iteration(values, k):
    """Values for iterations 1..k from a scalar or a sequence indexed from 1."""
    if np.ndim(values) == 0:
        return np.full(k, float(values))
    v = np.asarray(values, dtype=float)
    if v.shape[0] < k:
        raise ValueError(f"need {k} per-iteration values, got {v.shape[0]}")
    return v[:k]


def nu_tilde(nu_g, nu_p, mu, m_x):
    """Combined per-iteration error of gradient and projection oracles."""
    return (2.0 / m_x) * np.asarray(nu_g, dtype=float) + np.asarray(nu_p, dtype=float) / math.sqrt(mu * m_x)


def _accumulate(rho, k, x_norm, errors, tail):
    powers = rho ** np.arange(k - 1, -1, -1, dtype=float)  # rho**(k-i), i = 1..k
    return rho ** k * x_norm + float(np.sum(powers * errors)) + tail


def _check_fp_conditions(mu, m_x, M, factor=2.0):
    if not M < factor * m_x:
        raise ConditionViolated(f"M < {factor:g}*m_x fails: M={M}, m_x={m_x}")
    if not mu > 1.0 / (factor * m_x):
        raise ConditionViolated(f"mu > 1/({factor:g}*m_x) fails: mu={mu}, bound {1.0 / (factor * m_x)}")
    if not mu <= 1.0 / M:
        raise ConditionViolated(f"mu <= 1/M fails: mu={mu}, 1/M={1.0 / M}")


def bound_fp(k, x_norm, mu, m_x, M, nu_g, nu_p, w=0.0):
    """Error bound at iteration ``k`` for fixed-precision oracles.

    ``nu_g`` and ``nu_p`` are scalars or per-iteration sequences (entry 0 is
    iteration 1). ``nu_p`` is the product-space projection slack, i.e. the
    square root of the allowed excess in squared distance.
    """
    _check_fp_conditions(mu, m_x, M)
    rho = rate_fp(mu, m_x)
    errs = nu_tilde(_per_iteration(nu_g, k), _per_iteration(nu_p, k), mu, m_x)
    tail = (2.0 * math.sqrt(M) / m_x) * w / (1.0 - rho)
    return _accumulate(rho, k, x_norm, errs, tail)


def eps_distortion(eps):
    return math.sqrt(2.0 * eps + eps * eps)


def max_admissible_eps(m_x, A_norm):
    """Supremum of ``eps`` keeping ``eps_distortion(eps) * ||A|| / sqrt(m_x)`` below 1."""
    return -1.0 + math.sqrt(1.0 + m_x / A_norm ** 2)


def rate_and_bound_eps(mu, m_x, M, A_norm, eps, nu_g, w, k, x_norm):
    """Rate, gradient and noise coefficients, and error bound for (1+eps) projections.

    Returns ``(rho, kappa_g, kappa_w, bound)``. At ``eps = 0`` every
    quantity equals its fixed-precision counterpart with ``nu_p = 0``.
    """
    delta = eps_distortion(eps) * A_norm / math.sqrt(m_x)
    if not delta < 1:
        raise EpsilonTooLarge(
            f"eps={eps} gives delta={delta} >= 1 (largest admissible eps "
            f"{max_admissible_eps(m_x, A_norm):.6g})")
    _check_fp_conditions(mu, m_x, M, factor=2.0 - 2.0 * delta + delta * delta)
    rho = rate_fp(mu, m_x) + delta
    kappa_g = 2.0 / m_x + math.sqrt(mu) * delta / A_norm
    kappa_w = 2.0 * math.sqrt(M) / m_x + math.sqrt(mu) * delta
    errs = kappa_g * _per_iteration(nu_g, k)
    bound = _accumulate(rho, k, x_norm, errs, kappa_w * w / (1.0 - rho))
    return rho, kappa_g, kappa_w, bound


def bound_pfp(k, rho, r, C, x_norm, M, m_x, w=0.0):
    """Bound when the combined error decays like ``C * r**k``.

    Returns ``(bound, rate)`` where ``rate`` is the effective linear rate:
    ``max(rho, r)``, or ``rho + PFP_TIE_SLACK`` when the two coincide.
    """
    if not 0 < r < 1:
        raise RateOutOfRange(f"decay r must lie in (0, 1), got {r}")
    if not 0 <= rho < 1:
        raise RateOutOfRange(f"rho must lie in [0, 1), got {rho}")
    tail = (2.0 * math.sqrt(M) / m_x) * w / (1.0 - rho)
    if r < rho:
        return rho ** k * (x_norm + C / (1.0 - r / rho)) + tail, rho
    if r > rho:
        return r ** k * (x_norm + C / (1.0 - rho / r)) + tail, r
    return rho ** k * (x_norm + C * k) + tail, rho + PFP_TIE_SLACK


def iterations_for_accuracy(rho, x_norm, tau):
    """Iterations after which ``rho**K * x_norm`` drops to ``tau``."""
    if not 0 < rho < 1:
        raise RateOutOfRange(f"rho must lie in (0, 1), got {rho}")
    if not tau > 0:
        raise NonpositivePrecision(f"tau must be positive, got {tau}")
    if x_norm <= tau:
        return 0
    return max(0, math.ceil(math.log(x_norm / tau) / math.log(1.0 / rho)))


def jl_distortion(A, cloud):
    """Worst pairwise distortion ``| ||A(x - x')|| / (sqrt(m) ||x - x'||) - 1 |``."""
    A = _matrix(A)
    pts = cloud.points if hasattr(cloud, "points") else np.asarray(cloud, dtype=float)
    d = pts.shape[0]
    if d < 2:
        raise DegenerateCloud("need at least two points")
    if A.shape[1] != pts.shape[1]:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, atoms have dimension {pts.shape[1]}")
    img = pts @ A.T / math.sqrt(A.shape[0])
    worst = 0.0
    for i in range(d - 1):
        orig = distances(pts[i + 1:], pts[i])
        if np.any(orig == 0):
            raise DegenerateCloud(f"point {i} is duplicated")
        ratio = distances(img[i + 1:], img[i]) / orig
        worst = max(worst, float(np.max(np.abs(ratio - 1.0))))
    return worst
