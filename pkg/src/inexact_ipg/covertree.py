"""Cover tree over a finite Euclidean point cloud.

Scales grow downward from the root at scale 0. A point that first appears
at scale ``s`` stays present (as its own self-child) at every finer scale,
and the explicit representation stores one node per point: its
introduction scale, its parent and the maximum distance to its subtree.

Invariants, for the covering radius ``sigma * 2**-i`` at scale ``i``:

* nesting:    ``S_i`` is a subset of ``S_{i+1}``
* covering:   a node introduced at ``i+1`` lies within ``sigma * 2**-i`` of
              its parent
* separation: two distinct nodes of ``S_i`` are more than ``sigma * 2**-i``
              apart

Search accounting counts full ambient-dimension distance evaluations only.
Self-children inherit their parent's distance and are never re-evaluated.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (
    DegenerateCloud,
    DimensionMismatch,
    DuplicatePoints,
    EmptyCloud,
    NegativeEpsilon,
    NonpositivePrecision,
    ParseError,
)

__all__ = [
    "PointCloud",
    "CoverTree",
    "SearchResult",
    "CheckResult",
    "InvariantReport",
    "distances",
    "build",
    "verify",
    "nn_brute",
    "nn_exact",
    "nn_eps",
    "nn_fp",
    "fp_level",
    "aspect_ratio",
    "save_tree",
    "load_tree",
    "load_cloud_csv",
    "save_cloud_csv",
]

# Relative slack on branch-and-bound pruning; absorbs rounding in d - maxdist.
_PRUNE_RTOL = 1e-12


def distances(points, q):
    """Euclidean distances from each row of ``points`` to ``q``.

    Every distance in this module goes through this function, so a value
    computed during search is bit-identical to the same pair computed by a
    brute-force scan.
    """
    diff = points - q
    return np.sqrt(np.sum(diff * diff, axis=1))


class PointCloud:
    """A dictionary of ``d`` atoms in ambient dimension ``ambient_dim``.

    A one-dimensional input is read as ``d`` scalar points.
    """

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DimensionMismatch(f"points must be 2-D, got shape {pts.shape}")
        if pts.shape[0] == 0:
            raise EmptyCloud("point cloud has no points")
        if pts.shape[1] == 0:
            raise DimensionMismatch("points have zero ambient dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite values")
        pts.setflags(write=False)
        self.points = pts

    @property
    def d(self):
        return self.points.shape[0]

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.d

    def __repr__(self):
        return f"PointCloud(d={self.d}, ambient_dim={self.ambient_dim})"

    def duplicate_pair(self):
        """Return the first ``(i, j)`` with identical points, or None."""
        pts = self.points
        order = np.lexsort(pts.T[::-1])
        same = np.all(pts[order[1:]] == pts[order[:-1]], axis=1)
        if not same.any():
            return None
        k = int(np.argmax(same))
        i, j = sorted((int(order[k]), int(order[k + 1])))
        return i, j


def _as_cloud(cloud):
    if isinstance(cloud, PointCloud):
        return cloud
    return PointCloud(cloud)


@dataclass(frozen=True)
class SearchResult:
    index: int
    distance: float
    distance_evals: int


def nn_brute(points, q):
    """Exhaustive nearest neighbour; ties go to the lowest index."""
    points = np.asarray(points, dtype=float)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != points.shape[1]:
        raise DimensionMismatch(
            f"query has dimension {q.shape[0]}, cloud has {points.shape[1]}"
        )
    dist = distances(points, q)
    i = int(np.argmin(dist))
    return SearchResult(i, float(dist[i]), points.shape[0])


def fp_level(sigma, nu_p):
    """Smallest scale ``l`` with ``sigma * 2**(1 - l) <= nu_p``."""
    if not nu_p > 0:
        raise NonpositivePrecision(f"precision must be positive, got {nu_p}")
    if sigma <= 0:
        return 0
    l = max(0, math.ceil(1 + math.log2(sigma / nu_p)))
    # log2 may round either way; settle the boundary exactly
    while l > 0 and sigma * 2.0 ** (2 - l) <= nu_p:
        l -= 1
    while sigma * 2.0 ** (1 - l) > nu_p:
        l += 1
    return l


@dataclass(eq=False)
class CoverTree:
    """Explicit cover tree; one node per point (node id == point index).

    Use :func:`build` to construct one, or :meth:`from_structure` to
    rebuild search caches around a given node table.
    """

    points: np.ndarray
    root: int
    sigma: float
    scale: np.ndarray
    parent: np.ndarray
    maxdist: np.ndarray | None
    l_max: int = field(init=False)
    _profile: np.ndarray = field(init=False, repr=False)
    _ptr: list = field(init=False, repr=False)
    _kids: list = field(init=False, repr=False)

    def __post_init__(self):
        self.scale = np.asarray(self.scale, dtype=np.int64)
        self.parent = np.asarray(self.parent, dtype=np.int64)
        if self.maxdist is not None:
            self.maxdist = np.asarray(self.maxdist, dtype=float)
        self.l_max = int(self.scale.max()) if self.scale.size else 0
        self._index_children()
        if self.maxdist is None:
            self._profile = self._scale_bound_profile()
        else:
            self._profile = self._exact_profile()

    @classmethod
    def from_structure(cls, points, root, sigma, scale, parent, maxdist=None):
        return cls(np.asarray(points, dtype=float), int(root), float(sigma),
                   scale, parent, maxdist)

    @property
    def d(self):
        return self.points.shape[0]

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    @property
    def finest_resolution(self):
        return self.sigma * 2.0 ** -self.l_max

    def nodes_per_scale(self):
        """Number of logical nodes ``|S_i|`` for ``i = 0..l_max``."""
        counts = np.bincount(self.scale, minlength=self.l_max + 1)
        return np.cumsum(counts)

    # -- construction helpers -------------------------------------------

    def _index_children(self):
        d, L = self.d, self.l_max
        ptr = [np.zeros(d + 1, dtype=np.int64)]
        kids = [np.zeros(0, dtype=np.int64)]
        nonroot = self.parent >= 0
        for s in range(1, L + 1):
            members = np.flatnonzero(nonroot & (self.scale == s))
            par = self.parent[members]
            order = np.lexsort((members, par))
            members, par = members[order], par[order]
            p = np.zeros(d + 1, dtype=np.int64)
            np.add.at(p, par + 1, 1)
            ptr.append(np.cumsum(p))
            kids.append(members)
        self._ptr, self._kids = ptr, kids

    def _children(self, nodes, s):
        """Explicit children introduced at scale ``s`` of every node in ``nodes``."""
        if s > self.l_max:
            return np.zeros(0, dtype=np.int64)
        ptr = self._ptr[s]
        starts, ends = ptr[nodes], ptr[nodes + 1]
        counts = ends - starts
        total = int(counts.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64)
        offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts)
        return self._kids[s][offsets + np.arange(total)]

    def _exact_profile(self):
        """maxdist of logical node (p, j) for every scale, NaN above p's scale.

        Descendants of (p, j) are the subtrees hanging from children that
        p acquired at scales deeper than j.
        """
        d, L = self.d, self.l_max
        # best[b, a]: farthest point below a reached through a child introduced at b
        best = np.zeros((L + 2, d))
        node = np.arange(d)
        valid = self.parent >= 0
        node, anc, branch = node[valid], self.parent[valid], self.scale[valid]
        while node.size:
            dist = _pair_distances(self.points, anc, node)
            np.maximum.at(best, (branch, anc), dist)
            up = self.parent[anc] >= 0
            node, branch, anc = node[up], self.scale[anc[up]], self.parent[anc[up]]
        # suffix max over branch scales > j
        suffix = np.maximum.accumulate(best[::-1], axis=0)[::-1]
        profile = suffix[1:L + 2].copy()
        profile[np.arange(L + 1)[:, None] < self.scale[None, :]] = np.nan
        profile.setflags(write=False)
        return profile

    def _scale_bound_profile(self):
        d, L = self.d, self.l_max
        has_kids = np.zeros((L + 2, d), dtype=bool)
        nonroot = self.parent >= 0
        has_kids[self.scale[nonroot], self.parent[nonroot]] = True
        below = np.logical_or.accumulate(has_kids[::-1], axis=0)[::-1][1:L + 2]
        radius = self.sigma * 2.0 ** (1 - np.arange(L + 1))
        profile = np.where(below, radius[:, None], 0.0)
        profile[np.arange(L + 1)[:, None] < self.scale[None, :]] = np.nan
        profile.setflags(write=False)
        return profile

    # -- search ------------------------------------------------------------

    def _check_query(self, q):
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"query has dimension {q.shape[0]}, tree has {self.ambient_dim}"
            )
        return q

    def _search(self, q, eps=0.0, nu_p=None):
        pts = self.points
        best_i = self.root
        best_d = float(distances(pts[[self.root]], q)[0])
        evals = 1
        stop_scale = self.l_max if nu_p is None else min(self.l_max, fp_level(self.sigma, nu_p))

        cand = np.array([self.root], dtype=np.int64)
        cand_d = np.array([best_d])
        i = 0
        while i < stop_scale:
            md = self._profile[i, cand]
            deepest = md.max()
            if deepest == 0.0:
                break
            if nu_p is not None and deepest < nu_p:
                break
            if eps > 0.0:
                lower = max(0.0, float((cand_d - md).min()))
                if best_d <= (1.0 + eps) * lower:
                    break

            kids = self._children(cand, i + 1)
            if kids.size:
                kid_d = distances(pts[kids], q)
                evals += kids.size
                m = kid_d.min()
                if m <= best_d:
                    j = int(kids[kid_d == m].min())
                    if m < best_d or j < best_i:
                        best_i, best_d = j, float(m)
                cand = np.concatenate((cand, kids))
                cand_d = np.concatenate((cand_d, kid_d))

            md = self._profile[i + 1, cand]
            keep = cand_d - md - best_d <= _PRUNE_RTOL * (cand_d + md)
            cand, cand_d = cand[keep], cand_d[keep]
            i += 1
        return SearchResult(best_i, best_d, evals)

    def nn_exact(self, q):
        """Exact nearest neighbour by branch and bound over maxdist balls."""
        return self._search(self._check_query(q))

    def nn_eps(self, q, eps):
        """A point within ``(1 + eps)`` times the nearest distance.

        Descent stops once the incumbent is within ``1 + eps`` of the lower
        bound ``min(d(q, c) - maxdist(c))`` over surviving candidates.
        ``eps = 0`` is the exact search.
        """
        if eps < 0:
            raise NegativeEpsilon(f"eps must be >= 0, got {eps}")
        return self._search(self._check_query(q), eps=float(eps))

    def nn_fp(self, q, nu_p):
        """A point within ``d* + nu_p``: exact search on the truncated tree.

        The descent stops at scale ``fp_level(sigma, nu_p)``, or earlier once
        every surviving candidate's maxdist is below ``nu_p``.
        """
        if not nu_p > 0:
            raise NonpositivePrecision(f"precision must be positive, got {nu_p}")
        return self._search(self._check_query(q), nu_p=float(nu_p))


def _pair_distances(points, a, b):
    diff = points[b] - points[a]
    return np.sqrt(np.sum(diff * diff, axis=1))


def build(cloud):
    """Build a cover tree by inserting points one at a time in input order.

    The first point is the root and ``sigma`` is its distance to the
    farthest point. Each insertion descends through cover sets and attaches
    the point at the deepest scale where a covering parent still exists.

    Raises
    ------
    EmptyCloud
        The cloud has no points.
    DuplicatePoints
        Two points coincide exactly (separation would be impossible).
    """
    cloud = _as_cloud(cloud)
    dup = cloud.duplicate_pair()
    if dup is not None:
        raise DuplicatePoints(f"points {dup[0]} and {dup[1]} are identical")
    pts = cloud.points
    d = cloud.d
    root = 0
    sigma = float(distances(pts, pts[root]).max())
    scale = np.zeros(d, dtype=np.int64)
    parent = np.full(d, -1, dtype=np.int64)
    kids = {}

    def children(nodes, s):
        found = [kids[(int(n), s)] for n in nodes if (int(n), s) in kids]
        if not found:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(found)

    for p in range(1, d):
        q = pts[p]
        cover = np.array([root], dtype=np.int64)
        cover_d = distances(pts[cover], q)
        j = 0
        frames = []
        while True:
            new = children(cover, j + 1)
            cand = np.concatenate((cover, new))
            cand_d = np.concatenate((cover_d, distances(pts[new], q)))
            radius = sigma * 2.0 ** -j
            if cand_d.min() > radius:
                break
            frames.append((cover, cover_d, j))
            keep = cand_d <= radius
            cover, cover_d = cand[keep], cand_d[keep]
            j += 1

        for cover, cover_d, j in reversed(frames):
            if cover_d.min() <= sigma * 2.0 ** -j:
                m = cover_d.min()
                host = int(cover[cover_d == m].min())
                parent[p] = host
                scale[p] = j + 1
                kids.setdefault((host, j + 1), []).append(p)
                break
        else:  # pragma: no cover - the root frame always covers
            raise AssertionError(f"no parent found for point {p}")

    # a placeholder maxdist selects the exact profile; then store its own column
    tree = CoverTree.from_structure(pts, root, sigma, scale, parent, maxdist=np.zeros(d))
    tree.maxdist = tree._profile[tree.scale, np.arange(d)].copy()
    return tree


def nn_exact(tree, q):
    return tree.nn_exact(q)


def nn_eps(tree, q, eps):
    return tree.nn_eps(q, eps)


def nn_fp(tree, q, nu_p):
    return tree.nn_fp(q, nu_p)


def aspect_ratio(cloud):
    """Largest over smallest pairwise distance of the cloud."""
    pts = np.asarray(cloud.points if isinstance(cloud, PointCloud) else cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = pts.shape[0]
    if d == 0:
        raise EmptyCloud("point cloud has no points")
    if d < 2:
        raise DegenerateCloud("aspect ratio needs at least two points")
    lo, hi = np.inf, 0.0
    for i in range(d - 1):
        dist = distances(pts[i + 1:], pts[i])
        lo = min(lo, dist.min())
        hi = max(hi, dist.max())
    if lo == 0.0:
        raise DegenerateCloud("cloud has coincident points")
    return float(hi / lo)


# -- verification -----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    counterexample: str | None = None
    skipped: bool = False

    def line(self):
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        text = f"{status} {self.name}"
        if self.counterexample:
            text += f": {self.counterexample}"
        return text


@dataclass
class InvariantReport:
    checks: list

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def __str__(self):
        return "\n".join(c.line() for c in self.checks)


def _check_nesting(tree):
    d = tree.d
    scale, parent = tree.scale, tree.parent
    if scale.shape != (d,) or parent.shape != (d,):
        return CheckResult("nesting", False, "node table does not have one node per point")
    roots = np.flatnonzero(parent < 0)
    if roots.size != 1 or roots[0] != tree.root:
        return CheckResult("nesting", False, f"expected single root {tree.root}, found {roots.tolist()}")
    if scale[tree.root] != 0:
        return CheckResult("nesting", False, f"root {tree.root} sits at scale {scale[tree.root]}")
    for p in range(d):
        if p == tree.root:
            continue
        par = parent[p]
        if par >= d or par == p:
            return CheckResult("nesting", False, f"node {p} has invalid parent {par}")
        if scale[p] < 1 or scale[par] >= scale[p]:
            return CheckResult(
                "nesting", False,
                f"node {p} at scale {scale[p]} has parent {par} at scale {scale[par]}, "
                "so the parent is absent from the scale above",
            )
    if tree.l_max != int(scale.max()):
        return CheckResult("nesting", False, f"l_max {tree.l_max} != deepest scale {scale.max()}")
    return CheckResult("nesting", True)


def _check_covering(tree, pts):
    for p in range(tree.d):
        par = tree.parent[p]
        if par < 0:
            continue
        dist = float(distances(pts[[par]], pts[p])[0])
        limit = tree.sigma * 2.0 ** -(int(tree.scale[p]) - 1)
        if dist > limit:
            return CheckResult(
                "covering", False,
                f"node {p} at scale {tree.scale[p]} is {dist:.6g} from parent {par} "
                f"(limit {limit:.6g})",
            )
    return CheckResult("covering", True)


def _check_separation(tree, pts):
    scale = tree.scale
    for i in range(tree.d - 1):
        dist = distances(pts[i + 1:], pts[i])
        sep = tree.sigma * 2.0 ** -np.maximum(scale[i], scale[i + 1:]).astype(float)
        bad = np.flatnonzero(dist <= sep)
        if bad.size:
            j = i + 1 + int(bad[0])
            s = max(scale[i], scale[j])
            return CheckResult(
                "separation", False,
                f"nodes {i} and {j} share scale {s} but are {dist[bad[0]]:.6g} apart "
                f"(need > {sep[bad[0]]:.6g})",
            )
    return CheckResult("separation", True)


def _subtree_profiles(tree, pts):
    """Exact maxdist of every logical node, via explicit child lists."""
    d, L = tree.d, tree.l_max
    children = [[] for _ in range(d)]
    for p in range(d):
        if tree.parent[p] >= 0:
            children[tree.parent[p]].append(p)
    exact = np.full((L + 1, d), np.nan)
    for p in range(d):
        members, branches = [], []
        for c in children[p]:
            stack = [c]
            while stack:
                n = stack.pop()
                members.append(n)
                branches.append(tree.scale[c])
                stack.extend(children[n])
        dist = distances(pts[members], pts[p]) if members else np.zeros(0)
        branches = np.asarray(branches, dtype=np.int64)
        for j in range(int(tree.scale[p]), L + 1):
            below = dist[branches > j]
            exact[j, p] = below.max() if below.size else 0.0
    return exact


def _check_maxdist(tree, pts):
    if tree.maxdist is None:
        return (CheckResult("maxdist", True, "not stored", skipped=True),
                CheckResult("maxdist_bound", True, "not stored", skipped=True))
    exact = _subtree_profiles(tree, pts)
    own = exact[tree.scale, np.arange(tree.d)]
    correct = CheckResult("maxdist", True)
    wrong = np.flatnonzero(tree.maxdist != own)
    if wrong.size:
        p = int(wrong[0])
        correct = CheckResult(
            "maxdist", False,
            f"node {p} stores maxdist {tree.maxdist[p]!r}, true value {own[p]!r}",
        )
    else:
        mask = ~np.isnan(exact)
        if not np.array_equal(tree._profile[mask], exact[mask]):
            j, p = np.argwhere(mask & (tree._profile != exact))[0]
            correct = CheckResult(
                "maxdist", False,
                f"node {p} at scale {j}: cached maxdist {tree._profile[j, p]!r}, "
                f"true value {exact[j, p]!r}",
            )

    bound = CheckResult("maxdist_bound", True)
    limit = tree.sigma * 2.0 ** (1 - tree.scale.astype(float))
    over = np.flatnonzero(~(tree.maxdist < limit) & (tree.maxdist > 0))
    if over.size:
        p = int(over[0])
        bound = CheckResult(
            "maxdist_bound", False,
            f"node {p} at scale {tree.scale[p]} has maxdist {tree.maxdist[p]:.6g} "
            f">= {limit[p]:.6g}",
        )
    else:
        radius = tree.sigma * 2.0 ** (1 - np.arange(tree.l_max + 1, dtype=float))
        with np.errstate(invalid="ignore"):
            viol = (exact > 0) & ~(exact < radius[:, None])
        if viol.any():
            j, p = np.argwhere(viol)[0]
            bound = CheckResult(
                "maxdist_bound", False,
                f"node {p} at scale {j} has maxdist {exact[j, p]:.6g} >= {radius[j]:.6g}",
            )
    return correct, bound


def verify(tree, cloud=None):
    """Exhaustively check nesting, covering, separation and maxdist.

    Failures are returned as data: each check carries the first
    counterexample found. Checks that need a valid node table are skipped
    when nesting fails.
    """
    pts = tree.points if cloud is None else _as_cloud(cloud).points
    if pts.shape != tree.points.shape:
        return InvariantReport([CheckResult(
            "nesting", False, f"tree indexes {tree.points.shape}, cloud is {pts.shape}")])
    nesting = _check_nesting(tree)
    if not nesting.passed:
        rest = [CheckResult(n, False, "not checked: node table invalid", skipped=True)
                for n in ("covering", "separation", "maxdist", "maxdist_bound")]
        return InvariantReport([nesting] + rest)
    checks = [nesting, _check_covering(tree, pts), _check_separation(tree, pts)]
    checks.extend(_check_maxdist(tree, pts))
    return InvariantReport(checks)


# -- file formats ------------------------------------------------------------


def load_cloud_csv(path):
    """Read a cloud: one point per row, no header."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                row = [float(v) for v in text.split(",")]
            except ValueError:
                raise ParseError(f"non-numeric value in {text!r}", lineno) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
            rows.append(row)
    if not rows:
        raise EmptyCloud(f"{path} contains no points")
    return PointCloud(np.array(rows))


def save_cloud_csv(cloud, path):
    pts = _as_cloud(cloud).points
    np.savetxt(path, pts, delimiter=",", fmt="%.17g")


def save_tree(tree, path):
    """Write ``d,ambient,sigma,l_max`` then one ``node,point,scale,parent,maxdist`` row per node."""
    with open(path, "w") as fh:
        fh.write(f"{tree.d},{tree.ambient_dim},{tree.sigma:.17g},{tree.l_max}\n")
        for p in range(tree.d):
            md = "" if tree.maxdist is None else f"{tree.maxdist[p]:.17g}"
            fh.write(f"{p},{p},{tree.scale[p]},{tree.parent[p]},{md}\n")


def load_tree(path, cloud):
    """Read a tree written by :func:`save_tree` and attach it to ``cloud``.

    An empty maxdist column means the values were omitted; search then falls
    back to the ``sigma * 2**(1 - i)`` bound.
    """
    cloud = _as_cloud(cloud)
    with open(path) as fh:
        lines = [(n, raw.strip()) for n, raw in enumerate(fh, start=1) if raw.strip()]
    if not lines:
        raise ParseError("empty tree file", 1)
    lineno, header = lines[0]
    fields = header.split(",")
    if len(fields) != 4:
        raise ParseError("header must be d,ambient,sigma,l_max", lineno)
    try:
        d, amb, sigma, l_max = int(fields[0]), int(fields[1]), float(fields[2]), int(fields[3])
    except ValueError:
        raise ParseError(f"bad header {header!r}", lineno) from None
    if (d, amb) != (cloud.d, cloud.ambient_dim):
        raise ParseError(f"tree is for a {d}x{amb} cloud, got {cloud.d}x{cloud.ambient_dim}", lineno)
    if len(lines) - 1 != d:
        raise ParseError(f"expected {d} node rows, found {len(lines) - 1}", lineno)

    scale = np.full(d, -1, dtype=np.int64)
    parent = np.full(d, -2, dtype=np.int64)
    maxdist = np.full(d, np.nan)
    stored = []
    point_of = {}
    for lineno, text in lines[1:]:
        parts = text.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, found {len(parts)}", lineno)
        try:
            node, pt, s, par = (int(v) for v in parts[:4])
            md = float(parts[4]) if parts[4] != "" else None
        except ValueError:
            raise ParseError(f"bad node row {text!r}", lineno) from None
        if not 0 <= node < d or not 0 <= pt < d:
            raise ParseError(f"node/point index out of range in {text!r}", lineno)
        if node in point_of:
            raise ParseError(f"duplicate node id {node}", lineno)
        point_of[node] = pt
        scale[pt], parent[pt] = s, par
        stored.append(md is not None)
        if md is not None:
            maxdist[pt] = md
    if len(set(point_of.values())) != d:
        raise ParseError("every point must own exactly one node", lines[-1][0])
    # parent column holds node ids; map to point indices
    parent = np.array([point_of[p] if p >= 0 else -1 for p in parent], dtype=np.int64)
    roots = np.flatnonzero(parent < 0)
    root = int(roots[0]) if roots.size else 0
    if scale.max() != l_max:
        raise ParseError(f"header l_max {l_max} disagrees with deepest scale {scale.max()}", 1)
    have_md = all(stored)
    return CoverTree.from_structure(cloud.points, root, sigma, scale, parent,
                                    maxdist if have_md else None)
