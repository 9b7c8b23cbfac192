"""Monte Carlo Carleson integrals for families of location-scale pairs.

A family ``D`` of pairs ``(x, r)`` is given by a batched membership oracle
``oracle(X, r) -> bool array`` (rows of ``X`` are locations, ``r`` one scale).
For a ball ``B`` of radius ``L`` we estimate

    (1 / |B|) * integral_0^L |D_r intersect B| dr / r

on a log-uniform grid of scales and report the tested family's supremum,
which is a lower bound for the Carleson constant of ``D``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import BallSpec, InputError

__all__ = [
    "LN2",
    "ScaleGrid",
    "SliceMeasure",
    "CarlesonEstimate",
    "ConstantEstimate",
    "pointwise",
    "uniform_in_ball",
    "slice_measure",
    "carleson_integral",
    "estimate_constant",
]

LN2 = math.log(2.0)

Oracle = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class ScaleGrid:
    """Log-uniform scales below ``L``: ``levels`` octaves with ``per_octave`` cells each.

    Cell ``j`` covers ``(L 2^{-j/m}, L 2^{-(j-1)/m}]`` and is represented by its
    log-midpoint, so a set occupying whole octaves integrates exactly.
    """

    L: float
    levels: int = 12
    per_octave: int = 4

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise InputError(f"top scale must be positive and finite, got {self.L!r}")
        if self.levels < 1 or self.per_octave < 1:
            raise InputError("levels and per_octave must be at least 1")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "levels", int(self.levels))
        object.__setattr__(self, "per_octave", int(self.per_octave))

    @property
    def size(self) -> int:
        return self.levels * self.per_octave

    @property
    def radii(self) -> np.ndarray:
        j = np.arange(1, self.size + 1)
        return self.L * 2.0 ** (-(j - 0.5) / self.per_octave)

    @property
    def dlog(self) -> float:
        return LN2 / self.per_octave

    @property
    def r_min(self) -> float:
        """Scales below this are truncated from the integral."""
        return self.L * 2.0 ** (-self.levels)

    def with_top(self, L: float) -> "ScaleGrid":
        return ScaleGrid(L, self.levels, self.per_octave)

    def to_dict(self) -> dict:
        return {"L": self.L, "levels": self.levels, "per_octave": self.per_octave}

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleGrid":
        return cls(d["L"], d.get("levels", 12), d.get("per_octave", 4))


@dataclass(frozen=True)
class SliceMeasure:
    fraction: float
    stderr: float
    n: int


@dataclass(frozen=True)
class CarlesonEstimate:
    """Normalized Carleson integral over one ball.

    ``constant`` is ``sum(slice_fractions) * grid.dlog``; it already carries
    the ``1 / |B|`` normalization.  ``octave_sums`` groups the same sum per
    octave so the decay toward the truncated tail can be inspected.
    """

    ball: BallSpec
    grid: ScaleGrid
    slice_fractions: np.ndarray
    slice_stderrs: np.ndarray
    integral: float
    constant: float
    mc_samples: int
    seed: int
    ball_index: int = 0

    @property
    def octave_sums(self) -> np.ndarray:
        return self.slice_fractions.reshape(self.grid.levels, self.grid.per_octave).sum(axis=1) * self.grid.dlog

    @property
    def truncated_below(self) -> float:
        return self.grid.r_min

    def to_dict(self) -> dict:
        return {
            "ball": self.ball.to_dict(),
            "grid": self.grid.to_dict(),
            "slice_fractions": self.slice_fractions.tolist(),
            "slice_stderrs": self.slice_stderrs.tolist(),
            "integral": self.integral,
            "constant": self.constant,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "ball_index": self.ball_index,
            "truncated_below": self.truncated_below,
            "octave_sums": self.octave_sums.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CarlesonEstimate":
        return cls(
            BallSpec.from_dict(d["ball"]),
            ScaleGrid.from_dict(d["grid"]),
            np.asarray(d["slice_fractions"], dtype=float),
            np.asarray(d["slice_stderrs"], dtype=float),
            d["integral"],
            d["constant"],
            d["mc_samples"],
            d["seed"],
            d.get("ball_index", 0),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CarlesonEstimate):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


@dataclass(frozen=True)
class ConstantEstimate:
    per_ball: list[CarlesonEstimate]
    sup: float
    argsup: int
    lower_bound: bool = field(default=True)

    def to_dict(self) -> dict:
        return {
            "per_ball": [e.to_dict() for e in self.per_ball],
            "sup": self.sup,
            "argsup": self.argsup,
            "lower_bound": self.lower_bound,
            "note": "supremum over the tested balls only; a lower bound on the Carleson constant",
        }


def pointwise(fn: Callable[[np.ndarray, float], bool]) -> Oracle:
    """Lift a scalar predicate ``fn(x, r) -> bool`` to a batched oracle."""

    def oracle(X, r):
        return np.fromiter((bool(fn(x, r)) for x in X), dtype=bool, count=len(X))

    return oracle


def uniform_in_ball(ball: BallSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    k = ball.dim
    u = rng.standard_normal((n, k))
    u /= np.sqrt(np.sum(u * u, axis=1))[:, None]
    rad = rng.random(n) ** (1.0 / k)
    return ball.center + ball.radius * (u * rad[:, None])


def slice_measure(oracle: Oracle, r: float, B: BallSpec, n: int, seed) -> SliceMeasure:
    """Fraction of ``B`` covered by ``D_r``, from ``n`` seeded uniform points.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    if int(n) != n or n < 1:
        raise InputError(f"need at least one Monte Carlo point, got {n!r}")
    n = int(n)
    X = uniform_in_ball(B, n, np.random.default_rng(seed))
    hits = np.asarray(oracle(X, float(r)), dtype=bool).reshape(-1)
    if hits.size != n:
        raise InputError(f"oracle returned {hits.size} answers for {n} points")
    p = float(hits.mean())
    return SliceMeasure(p, math.sqrt(p * (1.0 - p) / n), n)


def carleson_integral(
    oracle: Oracle,
    B: BallSpec,
    grid: ScaleGrid | None = None,
    n: int = 4096,
    seed: int = 0,
    ball_index: int = 0,
) -> CarlesonEstimate:
    """Estimate ``(1/|B|) * integral |D_r cap B| dr/r`` over the scales of ``grid``.

    Slice ``j`` draws its points from the stream ``(seed, ball_index, j)``,
    so estimates do not depend on evaluation order and oracles sharing a
    seed see the same points.
    """
    grid = grid or ScaleGrid(B.radius)
    if not math.isclose(grid.L, B.radius, rel_tol=1e-12):
        raise InputError(f"grid top scale {grid.L} must equal the ball radius {B.radius}")
    fractions = np.empty(grid.size)
    stderrs = np.empty(grid.size)
    for j, r in enumerate(grid.radii):
        s = slice_measure(oracle, r, B, n, [int(seed), int(ball_index), j])
        fractions[j], stderrs[j] = s.fraction, s.stderr
    constant = float(np.sum(fractions) * grid.dlog)
    return CarlesonEstimate(B, grid, fractions, stderrs, constant, constant, int(n), int(seed), int(ball_index))


def estimate_constant(
    oracle: Oracle,
    balls: Sequence[BallSpec],
    levels: int = 12,
    per_octave: int = 4,
    n: int = 4096,
    seed: int = 0,
    workers: int = 1,
) -> ConstantEstimate:
    """Carleson integrals over a family of balls and their supremum."""
    balls = list(balls)
    if not balls:
        raise InputError("need at least one ball")

    def one(i: int) -> CarlesonEstimate:
        b = balls[i]
        return carleson_integral(oracle, b, ScaleGrid(b.radius, levels, per_octave), n, seed, i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_ball = list(pool.map(one, range(len(balls))))
    else:
        per_ball = [one(i) for i in range(len(balls))]
    constants = np.array([e.constant for e in per_ball])
    arg = int(np.argmax(constants))
    return ConstantEstimate(per_ball, float(constants[arg]), arg)
