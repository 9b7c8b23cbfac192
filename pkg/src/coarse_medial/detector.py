"""Location-scale pairs that look like they meet the medial axis.

A pair ``(x, r)`` with ``0 < r < d(x, K)`` is *flagged* when two sites are
both within ``d(x, K) + eps * r`` of ``x`` and subtend an angle at ``x``
larger than ``theta_star(delta, eps)``.  On a flagged ball the distance
function cannot be ``delta``-coarsely differentiable; :func:`verify_consistency`
checks that implication against a sampled minimax fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coarse_diff import Certificate, SamplePlan, coarse_diff_test, dense_plan
from .geometry import (
    BallSpec,
    InputError,
    SiteSet,
    as_point,
    dist_to_set,
    distance_function,
    euclidean,
    max_pairwise_angle,
    near_minimizer_indices,
    tie_tolerance,
)

__all__ = [
    "VERIFY_MARGIN",
    "GParams",
    "GMembership",
    "Consistency",
    "theta_star",
    "in_G",
    "in_G_many",
    "G_oracle",
    "apex_angle",
    "bisector_distance",
    "verify_consistency",
]

VERIFY_MARGIN = 0.05

# near-set candidates fetched per point before falling back to the scalar path
_BATCH_NEIGHBOURS = 8


@dataclass(frozen=True)
class GParams:
    """Resolution parameters: ``eps`` (near-minimizer slack per unit radius) and ``delta``."""

    eps: float
    delta: float

    def __post_init__(self):
        eps, delta = float(self.eps), float(self.delta)
        if not (math.isfinite(eps) and eps >= 0):
            raise InputError(f"eps must be finite and non-negative, got {self.eps!r}")
        if not (math.isfinite(delta) and delta > 0):
            raise InputError(f"delta must be finite and positive, got {self.delta!r}")
        if not 2 * delta + eps < 1:
            raise InputError(f"parameters violate 2*delta + eps < 1 (delta={delta}, eps={eps})")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "GParams":
        return cls(d["eps"], d["delta"])


@dataclass(frozen=True)
class GMembership:
    ball: BallSpec
    params: GParams
    d_xK: float
    near_set_size: int
    theta_max: float
    theta_star: float
    in_G: bool
    witness: tuple[np.ndarray, np.ndarray] | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "ball": self.ball.to_dict(),
            "params": self.params.to_dict(),
            "d_xK": self.d_xK,
            "near_set_size": self.near_set_size,
            "theta_max": self.theta_max,
            "theta_star": self.theta_star,
            "in_G": self.in_G,
            "witness": None if self.witness is None else [w.tolist() for w in self.witness],
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GMembership":
        w = d.get("witness")
        return cls(
            BallSpec.from_dict(d["ball"]),
            GParams.from_dict(d["params"]),
            d["d_xK"],
            d["near_set_size"],
            d["theta_max"],
            d["theta_star"],
            d["in_G"],
            None if w is None else (np.asarray(w[0], dtype=float), np.asarray(w[1], dtype=float)),
            d.get("reason", ""),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, GMembership):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def theta_star(params: GParams) -> float:
    """Largest angle between near-minimizer arms compatible with ``delta``-coarse differentiability.

    ``arccos(2 * ((1 - (2 delta + eps)) / (1 + 2 delta))**2 - 1)``
    """
    ratio = (1.0 - (2.0 * params.delta + params.eps)) / (1.0 + 2.0 * params.delta)
    return math.acos(min(1.0, max(-1.0, 2.0 * ratio * ratio - 1.0)))


def in_G(x, r: float, K: SiteSet, params: GParams) -> GMembership:
    """Decide whether ``(x, r)`` is flagged for the site set ``K``."""
    x = as_point(x, K.dim)
    ball = BallSpec(x, r)
    tstar = theta_star(params)
    d, _ = dist_to_set(x, K)
    if not ball.radius < d:
        return GMembership(ball, params, d, 0, 0.0, tstar, False, None, "scale constraint")
    idx, _ = near_minimizer_indices(x, K, params.eps * ball.radius)
    if len(idx) < 2:
        return GMembership(ball, params, d, len(idx), 0.0, tstar, False, None, "unique near-minimizer")
    theta, pair = max_pairwise_angle(x, K.sites[idx])
    if theta > tstar:
        return GMembership(ball, params, d, len(idx), theta, tstar, True, pair, "wide near-minimizer angle")
    return GMembership(ball, params, d, len(idx), theta, tstar, False, None, "narrow near-minimizer angle")


def in_G_many(X, r: float, K: SiteSet, params: GParams) -> np.ndarray:
    """Boolean membership of ``(x, r)`` for every row ``x`` of ``X`` at one scale.

    Agrees with :func:`in_G` row by row; rows whose near set may exceed the
    batched neighbour count are delegated to it.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != K.dim:
        raise InputError(f"dimension mismatch: query points have shape {X.shape}, sites have dim {K.dim}")
    r = float(r)
    if not (math.isfinite(r) and r > 0):
        raise InputError(f"radius must be positive and finite, got {r!r}")
    n_pts = len(X)
    out = np.zeros(n_pts, dtype=bool)
    if n_pts == 0:
        return out
    tstar = theta_star(params)
    m = min(len(K), _BATCH_NEIGHBOURS)
    _, nbr = K.tree.query(X, k=m)
    nbr = nbr.reshape(n_pts, m)
    dist = euclidean(K.sites[nbr], X[:, None, :])
    order = np.lexsort((nbr, dist), axis=-1)
    dist = np.take_along_axis(dist, order, axis=-1)
    nbr = np.take_along_axis(nbr, order, axis=-1)

    d = dist[:, 0]
    thresh = d + params.eps * r + tie_tolerance(d)
    near = dist <= thresh[:, None]
    # the tree ordering can differ from exact ordering by ulps; widen before trusting a row
    unsure = np.zeros(n_pts, dtype=bool)
    if m < len(K):
        unsure = dist[:, -1] <= thresh * (1.0 + 1e-9) + 1e-300
    candidate = (r < d) & (near.sum(axis=1) >= 2) & ~unsure

    rows = np.flatnonzero(candidate)
    if rows.size and m >= 2:
        V = K.sites[nbr[rows]] - X[rows, None, :]
        I, J = np.triu_indices(m, k=1)
        nu = np.sqrt(np.sum(V * V, axis=-1))
        cos = np.sum(V[:, I] * V[:, J], axis=-1) / (nu[:, I] * nu[:, J])
        ang = np.arccos(np.clip(cos, -1.0, 1.0))
        valid = near[rows][:, I] & near[rows][:, J]
        theta = np.where(valid, ang, 0.0).max(axis=1)
        out[rows] = theta > tstar

    for i in np.flatnonzero(unsure & (r < d)):
        out[i] = in_G(X[i], r, K, params).in_G
    return out


def G_oracle(K: SiteSet, params: GParams):
    """Batched membership oracle ``(X, r) -> bool array`` for Carleson estimates."""

    def oracle(X, r):
        return in_G_many(X, r, K, params)

    oracle.sites = K
    oracle.params = params
    return oracle


def apex_angle(half_separation: float, height: float) -> float:
    """Angle subtended by two sites ``2 * half_separation`` apart, seen from height ``height`` on their bisector."""
    return 2.0 * math.atan2(half_separation, height)


def bisector_distance(x, K: SiteSet, signed: bool = False) -> float:
    """Distance from ``x`` to the perpendicular bisector of a two-site set.

    With ``signed=True`` the result is positive on the side of the second site.
    """
    if len(K) != 2:
        raise InputError(f"bisector_distance needs exactly two sites, got {len(K)}")
    x = as_point(x, K.dim)
    a, b = K.sites
    normal = b - a
    length = float(np.sqrt(np.sum(normal * normal)))
    if length == 0:
        raise InputError("the two sites coincide")
    s = float(np.dot(x - 0.5 * (a + b), normal)) / length
    return s if signed else abs(s)


@dataclass(frozen=True)
class Consistency:
    membership: GMembership
    fit: Certificate | None
    consistent: bool
    margin: float = VERIFY_MARGIN
    threshold: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "membership": self.membership.to_dict(),
            "fit": None if self.fit is None else self.fit.to_dict(),
            "consistent": self.consistent,
            "margin": self.margin,
            "threshold": self.threshold,
        }


def verify_consistency(
    K: SiteSet,
    ball: BallSpec,
    params: GParams,
    plan: SamplePlan | None = None,
    margin: float = VERIFY_MARGIN,
) -> Consistency:
    """Check that a flagged ball is not ``delta``-coarsely differentiable on the sample.

    The pair is inconsistent only when it is flagged and the sampled minimax
    residual of ``d(., K)`` is at most ``delta * r * (1 - margin)``.
    """
    membership = in_G(ball.center, ball.radius, K, params)
    plan = plan or dense_plan(K.dim)
    cert = coarse_diff_test(distance_function(K), ball, params.delta, plan)
    threshold = params.delta * ball.radius * (1.0 - margin)
    consistent = not (membership.in_G and cert.sampled_residual <= threshold)
    return Consistency(membership, cert, consistent, margin, threshold)
