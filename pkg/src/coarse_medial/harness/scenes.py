"""Deterministic site sets for experiments."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import InputError, SiteSet
from .io import parse_points

__all__ = ["SCENE_KINDS", "generate_scene"]

SCENE_KINDS = ("two_points", "circle_samples", "segment_samples", "random_cloud", "grid", "points", "csv")


def _bbox(params: dict, dim_default: int = 2) -> tuple[np.ndarray, np.ndarray]:
    box = params.get("bbox")
    if box is None:
        dim = int(params.get("dim", dim_default))
        return np.zeros(dim), np.ones(dim)
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi < lo):
        raise InputError(f"bad bbox {box!r}: expected [[lo...], [hi...]] with lo <= hi")
    return lo, hi


def generate_scene(kind: str, params: dict | None = None, seed: int = 0) -> SiteSet:
    """Build a site set.

    Kinds and their parameters (defaults in brackets):

    - ``two_points``: ``separation`` [2], ``dim`` [2]; sites at +-separation/2 on the first axis
    - ``circle_samples``: ``n``, ``radius`` [1], ``center`` [origin]; equal arclength from angle 0
    - ``segment_samples``: ``n``, ``endpoints`` [[[0, 0], [1, 0]]]; equal spacing, both ends included
    - ``random_cloud``: ``n``, ``bbox`` [unit box of ``dim`` [2]]; uniform, seeded
    - ``grid``: ``n`` per side, ``bbox`` [unit box]; cell-corner lattice including the box corners
    - ``points``: ``points`` explicit list of coordinates
    - ``csv``: ``path`` to a point CSV
    """
    p = dict(params or {})
    if kind == "two_points":
        sep = float(p.get("separation", 2.0))
        dim = int(p.get("dim", 2))
        if not sep > 0:
            raise InputError("separation must be positive")
        a = np.zeros(dim)
        a[0] = sep / 2
        return SiteSet([-a, a])
    if kind == "circle_samples":
        n = int(p["n"])
        radius = float(p.get("radius", 1.0))
        center = np.asarray(p.get("center", [0.0, 0.0]), dtype=float)
        t = 2.0 * math.pi * np.arange(n) / n
        pts = np.column_stack([np.cos(t), np.sin(t)])
        # exact values at the quarter turns
        pts[np.isclose(pts, 0.0, atol=1e-15)] = 0.0
        return SiteSet(center + radius * pts)
    if kind == "segment_samples":
        n = int(p["n"])
        a, b = (np.asarray(e, dtype=float) for e in p.get("endpoints", [[0.0, 0.0], [1.0, 0.0]]))
        s = np.linspace(0.0, 1.0, n)[:, None]
        return SiteSet((1.0 - s) * a + s * b)
    if kind == "random_cloud":
        n = int(p["n"])
        lo, hi = _bbox(p)
        rng = np.random.default_rng(seed)
        return SiteSet(lo + (hi - lo) * rng.random((n, lo.size)))
    if kind == "grid":
        n = int(p["n"])
        lo, hi = _bbox(p)
        axes = [np.linspace(l, h, n) for l, h in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return SiteSet(np.column_stack([m.reshape(-1) for m in mesh]))
    if kind == "points":
        return SiteSet(p["points"])
    if kind == "csv":
        return parse_points(p["path"])
    raise InputError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
