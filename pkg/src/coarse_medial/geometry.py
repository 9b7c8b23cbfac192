"""Points, finite site sets and exact nearest-site queries.

A :class:`SiteSet` stands in for the compact set ``K``.  Every query is
defined against a linear scan over the sites; the k-d tree only prunes
candidates, and the final distances are always recomputed with
:func:`euclidean` so that indexed and brute-force answers agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "InputError",
    "SiteSet",
    "BallSpec",
    "as_point",
    "euclidean",
    "tie_tolerance",
    "dist_to_set",
    "dist_to_set_many",
    "near_minimizer_indices",
    "near_minimizers",
    "angle_between",
    "max_pairwise_angle",
    "unit_ball_volume",
    "ball_volume",
    "distance_function",
]

# relative widening of tree search radii; tree distances and euclidean()
# may differ in the last few ulps
_PRUNE_SLACK = 1e-9


class InputError(ValueError):
    """Raised for malformed geometric input (dimension mismatch, NaN, ...)."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-d float array, optionally checking its dimension."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or p.size == 0:
        raise InputError(f"a point must be a non-empty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InputError("point coordinates must be finite")
    if dim is not None and p.size != dim:
        raise InputError(f"dimension mismatch: point has {p.size} coordinates, expected {dim}")
    return p


def euclidean(a, b) -> np.ndarray:
    """Euclidean distance along the last axis.  The one metric used everywhere."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def tie_tolerance(d):
    """Absolute slack that lets exact geometric ties survive round-off."""
    return 1e-12 * (1.0 + d)


class SiteSet:
    """Finite, immutable set of sites in R^k with an exact nearest-site index.

    Parameters
    ----------
    sites : array_like, shape (n, k) or (n,)
        Site coordinates.  A 1-d input is read as ``n`` points on the line.
    """

    def __init__(self, sites):
        arr = np.array(sites, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise InputError(f"sites must be a non-empty (n, k) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("site coordinates must be finite")
        arr.setflags(write=False)
        self._sites = arr
        self._tree = cKDTree(arr)

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    @property
    def dim(self) -> int:
        return self._sites.shape[1]

    @property
    def tree(self) -> cKDTree:
        return self._tree

    def __len__(self) -> int:
        return self._sites.shape[0]

    def __repr__(self) -> str:
        return f"SiteSet(n={len(self)}, dim={self.dim})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SiteSet):
            return NotImplemented
        return self._sites.shape == other._sites.shape and bool(np.array_equal(self._sites, other._sites))

    __hash__ = None

    def transformed(self, rotation=None, shift=None, scale: float = 1.0) -> "SiteSet":
        """Sites mapped by ``p -> scale * rotation @ p + shift``."""
        pts = self._sites
        if rotation is not None:
            pts = pts @ np.asarray(rotation, dtype=float).T
        pts = scale * pts
        if shift is not None:
            pts = pts + np.asarray(shift, dtype=float)
        return SiteSet(pts)


@dataclass(frozen=True)
class BallSpec:
    """Closed ball ``B(center, radius)``: one location and one scale."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_point(self.center)
        c.setflags(write=False)
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise InputError(f"ball radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "BallSpec":
        return cls(d["center"], d["radius"])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BallSpec):
            return NotImplemented
        return self.radius == other.radius and bool(np.array_equal(self.center, other.center))

    def __hash__(self):
        return hash((tuple(self.center.tolist()), self.radius))


def _candidates(K: SiteSet, x: np.ndarray, radius: float) -> np.ndarray:
    idx = K.tree.query_ball_point(x, radius * (1.0 + _PRUNE_SLACK) + 1e-300)
    return np.sort(np.asarray(idx, dtype=np.intp))


def dist_to_set(x, K: SiteSet) -> tuple[float, np.ndarray]:
    """Distance from ``x`` to ``K`` and the nearest site.

    Ties are broken toward the lowest site index.
    """
    x = as_point(x, K.dim)
    d0, _ = K.tree.query(x, k=1)
    idx = _candidates(K, x, float(d0))
    dists = euclidean(K.sites[idx], x)
    j = int(np.argmin(dists))  # first minimum -> lowest index, since idx is sorted
    return float(dists[j]), K.sites[idx[j]].copy()


def dist_to_set_many(X, K: SiteSet) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`dist_to_set`.

    Returns the distances and the index of the nearest site for each row of
    ``X``, with the same lowest-index tie-break as the scalar version.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if K.dim > 1 else X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != K.dim:
        raise InputError(f"dimension mismatch: query points have shape {X.shape}, sites have dim {K.dim}")
    if not np.all(np.isfinite(X)):
        raise InputError("query coordinates must be finite")
    n_sites = len(K)
    m = min(n_sites, 4)
    tree_d, nbr = K.tree.query(X, k=m)
    tree_d = tree_d.reshape(len(X), m)
    nbr = nbr.reshape(len(X), m)

    exact = euclidean(K.sites[nbr], X[:, None, :])
    # order candidates by (distance, index) so argmin picks the lowest index on ties
    order = np.lexsort((nbr, exact), axis=-1)
    exact = np.take_along_axis(exact, order, axis=-1)
    nbr = np.take_along_axis(nbr, order, axis=-1)
    dist = exact[:, 0].copy()
    index = nbr[:, 0].copy()

    # rows where some site beyond the first m might tie with the minimum
    if m < n_sites:
        bound = tree_d[:, 0] * (1.0 + _PRUNE_SLACK) + 1e-300
        unsure = np.flatnonzero(tree_d[:, -1] <= bound)
        for i in unsure:
            idx = _candidates(K, X[i], float(tree_d[i, 0]))
            dd = euclidean(K.sites[idx], X[i])
            j = int(np.argmin(dd))
            dist[i], index[i] = dd[j], idx[j]
    return dist, index


def near_minimizer_indices(x, K: SiteSet, slack: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the sites within ``d(x, K) + slack`` of ``x``.

    The threshold is widened by :func:`tie_tolerance`.  Output is sorted by
    distance, then by site index.
    """
    if not slack >= 0:
        raise InputError(f"slack must be non-negative, got {slack!r}")
    x = as_point(x, K.dim)
    d, _ = dist_to_set(x, K)
    threshold = d + slack + tie_tolerance(d)
    idx = _candidates(K, x, threshold)
    dists = euclidean(K.sites[idx], x)
    keep = dists <= threshold
    idx, dists = idx[keep], dists[keep]
    order = np.lexsort((idx, dists))
    return idx[order], dists[order]


def near_minimizers(x, K: SiteSet, slack: float) -> np.ndarray:
    """Sites ``z`` with ``d(x, z) <= d(x, K) + slack`` (up to the tie tolerance), as rows."""
    idx, _ = near_minimizer_indices(x, K, slack)
    return K.sites[idx].copy()


def _cosines(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu = np.sqrt(np.sum(u * u, axis=-1))
    nv = np.sqrt(np.sum(v * v, axis=-1))
    return np.clip(np.sum(u * v, axis=-1) / (nu * nv), -1.0, 1.0)


def angle_between(x, z1, z2) -> float:
    """Unsigned angle in ``[0, pi]`` between the segments ``[x, z1]`` and ``[x, z2]``."""
    x = as_point(x)
    u = as_point(z1, x.size) - x
    v = as_point(z2, x.size) - x
    if not (np.any(u != 0) and np.any(v != 0)):
        raise InputError("angle is undefined for a zero-length arm")
    return float(np.arccos(_cosines(u, v)))


def max_pairwise_angle(x, Z) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Largest angle subtended at ``x`` by a pair of points of ``Z``.

    Returns ``(theta_max, (z_i, z_j))`` for the lexicographically first
    maximizing pair ``i < j``.  A single point gives ``(0.0, (z, z))``.
    """
    x = as_point(x)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(1, -1)
    if Z.shape[0] == 0:
        raise InputError("max_pairwise_angle needs at least one point")
    if Z.shape[1] != x.size:
        raise InputError(f"dimension mismatch: points have dim {Z.shape[1]}, x has dim {x.size}")
    V = Z - x
    if np.any(np.all(V == 0, axis=1)):
        raise InputError("angle is undefined for a zero-length arm")
    if len(Z) == 1:
        return 0.0, (Z[0].copy(), Z[0].copy())
    I, J = np.triu_indices(len(Z), k=1)  # row-major, so argmax is lexicographically first
    angles = np.arccos(_cosines(V[I], V[J]))
    p = int(np.argmax(angles))
    return float(angles[p]), (Z[I[p]].copy(), Z[J[p]].copy())


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k via the recursion w_k = 2 pi / k * w_{k-2}."""
    if int(k) != k or k < 1:
        raise InputError(f"dimension must be a positive integer, got {k!r}")
    k = int(k)
    w = 2.0 if k % 2 else math.pi
    for j in range(3 if k % 2 else 4, k + 1, 2):
        w *= 2.0 * math.pi / j
    return w


def ball_volume(k: int, L: float) -> float:
    """Lebesgue measure of a ball of radius ``L`` in R^k."""
    if not (L > 0 and math.isfinite(L)):
        raise InputError(f"radius must be positive and finite, got {L!r}")
    return unit_ball_volume(k) * L**k


def distance_function(K: SiteSet):
    """The 1-Lipschitz function ``p -> d(p, K)``, evaluated row-wise on an (n, k) array."""

    def f(X) -> np.ndarray:
        return dist_to_set_many(X, K)[0]

    f.sites = K
    return f
