"""Sampled epsilon-coarse differentiability via minimax affine fitting.

A function ``f`` is epsilon-coarsely differentiable on ``B(x, r)`` when some
affine map stays within ``epsilon * r`` of it on the whole ball.  Here the
ball is replaced by a finite, seeded sample and the best affine map is found
exactly (for that sample) as a small linear program.  Consequently a FAIL
verdict is a sound witness on the sample points, while a PASS only speaks
for the sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from .geometry import BallSpec, InputError, euclidean

__all__ = [
    "STRATEGIES",
    "AffineMap",
    "FitResult",
    "SamplePlan",
    "Certificate",
    "GradientCheck",
    "default_plan",
    "dense_plan",
    "sample_ball",
    "chebyshev_affine_fit",
    "coarse_diff_test",
    "roundoff_allowance",
    "gradient_norm_check",
]

STRATEGIES = ("uniform", "low_discrepancy", "mix")

BOUNDARY_FRACTION = 0.2
GRADIENT_SLACK = 0.05

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class AffineMap:
    """``p -> linear . p + offset``."""

    linear: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.array(self.linear, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(a)) and np.isfinite(self.offset)):
            raise InputError("affine coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "linear", a)
        object.__setattr__(self, "offset", float(self.offset))

    def __call__(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return P @ self.linear + self.offset

    def __eq__(self, other) -> bool:
        if not isinstance(other, AffineMap):
            return NotImplemented
        return self.offset == other.offset and bool(np.array_equal(self.linear, other.linear))

    __hash__ = None

    def to_dict(self) -> dict:
        return {"linear": self.linear.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, d: dict) -> "AffineMap":
        return cls(d["linear"], d["offset"])


@dataclass(frozen=True)
class SamplePlan:
    """How a ball is discretized: strategy name, point count and seed.

    ``mix`` places :data:`BOUNDARY_FRACTION` of the points on the sphere,
    one at the center and the rest uniformly inside.
    """

    strategy: str = "mix"
    n: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown sampling strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"sample count must be a positive integer, got {self.n!r}")

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "n": int(self.n), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d: dict) -> "SamplePlan":
        return cls(d.get("strategy", "mix"), int(d.get("n", 500)), int(d.get("seed", 0)))


def default_plan(k: int, seed: int = 0) -> SamplePlan:
    return SamplePlan("mix", max(500, 50 * k), seed)


def dense_plan(k: int, seed: int = 0) -> SamplePlan:
    """Plan used for verification runs (at least 2000 points)."""
    return SamplePlan("mix", max(2000, 200 * k), seed)


@dataclass(frozen=True)
class FitResult:
    """Minimax affine fit on a finite sample.

    ``samples`` and ``values`` are kept so the residual can be re-derived;
    they are not serialized.
    """

    map: AffineMap
    residual: float
    n_samples: int
    strategy: str | None = None
    seed: int | None = None
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "map": self.map.to_dict(),
            "residual": self.residual,
            "n_samples": self.n_samples,
            "strategy": self.strategy,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Certificate:
    """Outcome of :func:`coarse_diff_test`.

    ``verdict`` is ``"PASS"`` when ``sampled_residual <= eps * r`` up to
    :func:`roundoff_allowance`.  The
    sampled residual never exceeds the true supremum over the ball, so only
    FAIL is rigorous.
    """

    sampled_residual: float
    map: AffineMap
    verdict: str
    eps: float
    ball: BallSpec
    plan: SamplePlan
    semantics: str = "sample-relative"
    fit: FitResult | None = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {
            "sampled_residual": self.sampled_residual,
            "map": self.map.to_dict(),
            "verdict": self.verdict,
            "eps": self.eps,
            "tolerance": self.eps * self.ball.radius,
            "ball": self.ball.to_dict(),
            "plan": self.plan.to_dict(),
            "semantics": self.semantics,
        }


@dataclass(frozen=True)
class GradientCheck:
    norm: float
    bound: float
    ok: bool


def _unit_directions(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    u = rng.standard_normal((n, k))
    nrm = euclidean(u, 0.0)
    while np.any(nrm == 0):  # pragma: no cover - probability zero
        bad = nrm == 0
        u[bad] = rng.standard_normal((int(bad.sum()), k))
        nrm = euclidean(u, 0.0)
    u /= nrm[:, None]
    # rounding can leave a unit vector a hair outside the sphere
    over = euclidean(u, 0.0) > 1.0
    u[over] *= 1.0 - 2.0**-52
    return u


def _uniform_in_unit_ball(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    u = _unit_directions(rng, n, k)
    rad = rng.random(n) ** (1.0 / k)
    return u * rad[:, None]


def _halton_in_unit_ball(seed: int, n: int, k: int) -> np.ndarray:
    engine = qmc.Halton(d=k, scramble=True, seed=seed)
    out: list[np.ndarray] = []
    have = 0
    while have < n:
        batch = 2.0 * engine.random(max(64, 2 * (n - have))) - 1.0
        batch = batch[euclidean(batch, 0.0) <= 1.0]
        out.append(batch)
        have += len(batch)
    return np.concatenate(out)[:n]


def sample_ball(ball: BallSpec, plan: SamplePlan) -> np.ndarray:
    """Deterministic sample of ``plan.n`` points of the closed ball, shape (n, k)."""
    k = ball.dim
    n = int(plan.n)
    if n < k + 2:
        raise InputError(f"a {k}-dimensional fit needs at least {k + 2} samples, got {n}")
    if plan.strategy == "uniform":
        U = _uniform_in_unit_ball(np.random.default_rng(plan.seed), n, k)
    elif plan.strategy == "low_discrepancy":
        U = _halton_in_unit_ball(plan.seed, n, k)
    else:
        rng = np.random.default_rng(plan.seed)
        n_boundary = max(1, int(round(BOUNDARY_FRACTION * n)))
        n_inner = n - n_boundary - 1
        U = np.concatenate(
            [
                np.zeros((1, k)),
                _unit_directions(rng, n_boundary, k),
                _uniform_in_unit_ball(rng, n_inner, k),
            ]
        )
    return ball.center + ball.radius * U


def chebyshev_affine_fit(samples, values, *, strategy: str | None = None, seed: int | None = None) -> FitResult:
    """Best uniform-norm affine approximation of ``values`` on ``samples``.

    Solves ``min t  s.t.  |values_i - (a . p_i + b)| <= t`` with the HiGHS
    dual simplex.  Directions in which the samples are affinely dependent get
    zero slope, which picks the minimum-norm member of the optimal family.
    The reported residual is recomputed from the returned map.
    """
    P = np.asarray(samples, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    v = np.asarray(values, dtype=float).reshape(-1)
    n, k = P.shape
    if len(v) != n:
        raise InputError(f"{n} samples but {len(v)} values")
    if n < k + 2:
        raise InputError(f"a {k}-dimensional fit needs at least {k + 2} samples, got {n}")
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(v))):
        raise InputError("samples and values must be finite")

    # condition the LP: samples to the unit ball, values to [-1, 1]
    c = P.mean(axis=0)
    Q = P - c
    s = float(np.max(euclidean(Q, 0.0))) or 1.0
    Q /= s
    vmid = 0.5 * (v.max() + v.min())
    vs = 0.5 * (v.max() - v.min()) or 1.0
    w = (v - vmid) / vs

    _, sv, Vt = np.linalg.svd(Q, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * max(sv.max(initial=0.0), 1e-300)))
    basis = Vt[:rank].T  # (k, rank)
    Y = Q @ basis

    ones = np.ones((n, 1))
    A_ub = np.block([[Y, ones, -ones], [-Y, -ones, -ones]])
    b_ub = np.concatenate([w, -w])
    cost = np.zeros(rank + 2)
    cost[-1] = 1.0
    bounds = [(None, None)] * (rank + 1) + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs-ds", options=_LP_OPTIONS)
    if res.status != 0:  # pragma: no cover - the LP is always feasible and bounded
        raise RuntimeError(f"minimax LP failed: {res.message}")
    g, b = res.x[:rank], res.x[rank]

    a = (vs / s) * (basis @ g) if rank else np.zeros(k)
    offset = vmid + vs * b - float(a @ c)
    amap = AffineMap(a, offset)
    residual = float(np.max(np.abs(v - amap(P))))
    return FitResult(amap, residual, n, strategy, seed, P, v)


def roundoff_allowance(samples: np.ndarray, values: np.ndarray) -> float:
    """Floating-point noise floor of a fit residual: a few ulps of the data's magnitude."""
    scale = float(np.max(np.abs(values))) + float(np.max(np.abs(samples))) * (1.0 + float(np.ptp(values)))
    return 64.0 * np.finfo(float).eps * scale


def coarse_diff_test(
    f: Callable[[np.ndarray], np.ndarray],
    ball: BallSpec,
    eps: float,
    plan: SamplePlan | None = None,
) -> Certificate:
    """Check sampled ``eps``-coarse differentiability of ``f`` on ``ball``.

    ``f`` maps an (n, k) array of points to n values.
    """
    if not eps >= 0:
        raise InputError(f"eps must be non-negative, got {eps!r}")
    plan = plan or default_plan(ball.dim)
    P = sample_ball(ball, plan)
    vals = np.asarray(f(P), dtype=float).reshape(-1)
    fit = chebyshev_affine_fit(P, vals, strategy=plan.strategy, seed=plan.seed)
    verdict = "PASS" if fit.residual <= eps * ball.radius + roundoff_allowance(P, vals) else "FAIL"
    return Certificate(fit.residual, fit.map, verdict, float(eps), ball, plan, fit=fit)


def gradient_norm_check(fit: FitResult, ball: BallSpec, slack: float = GRADIENT_SLACK) -> GradientCheck:
    """Compare the slope of a fit of a 1-Lipschitz function with ``1 + 2 * residual / r``.

    ``slack`` absorbs the gap between the sampled residual and the residual
    over the whole ball.
    """
    norm = float(np.sqrt(np.sum(fit.map.linear**2)))
    bound = 1.0 + 2.0 * fit.residual / ball.radius + slack
    return GradientCheck(norm, bound, norm <= bound)
