"""Experiment configuration and ball families."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..coarse_diff import SamplePlan
from ..detector import GParams
from ..geometry import BallSpec, InputError

__all__ = [
    "THREADS_ENV",
    "Lattice",
    "CarlesonSettings",
    "ExperimentConfig",
    "default_workers",
    "load_config",
    "derive_seed",
]

THREADS_ENV = "COARSE_MEDIAL_THREADS"


def default_workers() -> int:
    """Worker count from ``$COARSE_MEDIAL_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def derive_seed(root: int, *path: int) -> int:
    """Independent 32-bit seed for the stream ``(root, *path)``."""
    return int(np.random.SeedSequence([int(root), *map(int, path)]).generate_state(1)[0])


@dataclass(frozen=True)
class Lattice:
    """Dyadic ball family: radii ``radius * 2**-j`` for ``j < octaves``, centers on a
    grid of step ``spacing * r`` covering ``bbox`` at each radius."""

    bbox: tuple[tuple[float, ...], tuple[float, ...]]
    radius: float
    octaves: int = 3
    spacing: float = 0.25

    def __post_init__(self):
        lo, hi = (tuple(float(v) for v in b) for b in self.bbox)
        if len(lo) != len(hi) or not lo or any(h < l for l, h in zip(lo, hi)):
            raise InputError(f"bad lattice bbox {self.bbox!r}")
        if not (self.radius > 0 and self.octaves >= 1 and self.spacing > 0):
            raise InputError("lattice radius, octaves and spacing must be positive")
        object.__setattr__(self, "bbox", (lo, hi))

    def balls(self) -> list[BallSpec]:
        lo, hi = (np.asarray(b) for b in self.bbox)
        out = []
        for j in range(self.octaves):
            r = self.radius * 2.0**-j
            h = self.spacing * r
            axes = [l + h * np.arange(int(np.floor((u - l) / h + 1e-9)) + 1) for l, u in zip(lo, hi)]
            mesh = np.meshgrid(*axes, indexing="ij")
            centers = np.column_stack([m.reshape(-1) for m in mesh])
            out.extend(BallSpec(c, r) for c in centers)
        return out

    def to_dict(self) -> dict:
        return {"bbox": [list(b) for b in self.bbox], "radius": self.radius, "octaves": self.octaves, "spacing": self.spacing}


@dataclass(frozen=True)
class CarlesonSettings:
    enabled: bool = True
    levels: int = 12
    per_octave: int = 4
    n: int = 4096
    balls: tuple[BallSpec, ...] | None = None
    max_balls: int = 8

    def to_dict(self) -> dict:
        d = asdict(self)
        d["balls"] = None if self.balls is None else [b.to_dict() for b in self.balls]
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    scene: dict
    params: GParams
    balls: tuple[BallSpec, ...] | None = None
    lattice: Lattice | None = None
    sampling: SamplePlan = field(default_factory=lambda: SamplePlan("mix", 2000, 0))
    verify_fraction: float = 0.1
    carleson: CarlesonSettings = field(default_factory=CarlesonSettings)
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if "kind" not in self.scene:
            raise InputError("scene descriptor needs a 'kind'")
        if self.balls is None and self.lattice is None:
            raise InputError("config needs either explicit balls or a lattice")
        if not 0.0 <= self.verify_fraction <= 1.0:
            raise InputError("verify_fraction must lie in [0, 1]")
        if not self.ball_family():
            raise InputError("ball family is empty")
        for key, value in self.outputs.items():
            if value is None:
                continue
            parent = Path(value).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise InputError(f"output {key}: directory {parent} is not writable")

    def ball_family(self) -> list[BallSpec]:
        if self.balls is not None:
            return list(self.balls)
        return self.lattice.balls()

    def to_dict(self) -> dict:
        return {
            "scene": dict(self.scene),
            "params": self.params.to_dict(),
            "balls": None if self.balls is None else [b.to_dict() for b in self.balls],
            "lattice": None if self.lattice is None else self.lattice.to_dict(),
            "sampling": self.sampling.to_dict(),
            "verify_fraction": self.verify_fraction,
            "carleson": self.carleson.to_dict(),
            "seed": self.seed,
            "outputs": dict(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        params = d.get("params", {})
        balls = d.get("balls")
        lattice = d.get("lattice")
        c = dict(d.get("carleson") or {})
        if c.get("balls") is not None:
            c["balls"] = tuple(BallSpec.from_dict(b) for b in c["balls"])
        known = {"enabled", "levels", "per_octave", "n", "balls", "max_balls"}
        unknown = set(c) - known
        if unknown:
            raise InputError(f"unknown carleson settings: {sorted(unknown)}")
        return cls(
            scene=dict(d["scene"]),
            params=GParams(params.get("eps", 0.0), params.get("delta", 0.1)),
            balls=None if balls is None else tuple(BallSpec.from_dict(b) for b in balls),
            lattice=None if lattice is None else Lattice(**lattice),
            sampling=SamplePlan.from_dict({"n": 2000, **(d.get("sampling") or {})}),
            verify_fraction=float(d.get("verify_fraction", 0.1)),
            carleson=CarlesonSettings(**c),
            seed=int(d.get("seed", 0)),
            outputs=dict(d.get("outputs") or {}),
        )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)
