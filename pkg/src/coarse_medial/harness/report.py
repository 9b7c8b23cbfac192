"""Versioned JSON report plus a per-ball CSV summary."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from ..detector import GMembership

__all__ = ["SCHEMA", "SCHEMA_VERSION", "TIMING_FIELDS", "Report"]

SCHEMA = "coarse-medial-report"
SCHEMA_VERSION = 1
TIMING_FIELDS = ("wall_clock_seconds", "created")


@dataclass
class Report:
    config: dict
    scene: dict
    memberships: list[GMembership]
    verifications: list[dict]
    carleson: dict | None
    summary: dict
    tool_version: str
    wall_clock_seconds: float = 0.0
    created: str = ""
    schema_version: int = SCHEMA_VERSION

    @property
    def violations(self) -> int:
        return int(self.summary.get("violations", 0))

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "created": self.created,
            "wall_clock_seconds": self.wall_clock_seconds,
            "config": self.config,
            "scene": self.scene,
            "summary": self.summary,
            "memberships": [m.to_dict() for m in self.memberships],
            "verifications": self.verifications,
            "carleson": self.carleson,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"not a {SCHEMA} document")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {d.get('schema_version')!r}")
        return cls(
            config=d["config"],
            scene=d["scene"],
            memberships=[GMembership.from_dict(m) for m in d["memberships"]],
            verifications=d["verifications"],
            carleson=d["carleson"],
            summary=d["summary"],
            tool_version=d["tool_version"],
            wall_clock_seconds=d["wall_clock_seconds"],
            created=d["created"],
            schema_version=d["schema_version"],
        )

    def to_json(self, *, timing: bool = True) -> str:
        d = self.to_dict()
        if not timing:
            for key in TIMING_FIELDS:
                d.pop(key)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def read(cls, path) -> "Report":
        return cls.from_json(Path(path).read_text())

    def summary_rows(self) -> list[dict]:
        verified = {v["index"]: v for v in self.verifications}
        rows = []
        for i, m in enumerate(self.memberships):
            v = verified.get(i)
            row = {"index": i}
            row.update({f"x{j + 1}": c for j, c in enumerate(m.ball.center.tolist())})
            row.update(
                radius=m.ball.radius,
                d_xK=m.d_xK,
                near_set_size=m.near_set_size,
                theta_max=m.theta_max,
                theta_star=m.theta_star,
                in_G=int(m.in_G),
                sampled_residual="" if v is None else v["sampled_residual"],
                consistent="" if v is None else int(v["consistent"]),
            )
            rows.append(row)
        return rows

    def write_summary_csv(self, path) -> Path:
        path = Path(path)
        rows = self.summary_rows()
        with path.open("w", newline="") as fh:
            if rows:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
                writer.writeheader()
                writer.writerows(rows)
        return path
