"""The detect / verify / Carleson pipeline behind ``run`` and the CLI subcommands."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Callable, Sequence

import numpy as np

from .. import __version__
from ..carleson import estimate_constant
from ..coarse_diff import SamplePlan
from ..detector import G_oracle, GMembership, GParams, in_G, verify_consistency
from ..geometry import BallSpec, InputError, SiteSet
from .config import ExperimentConfig, default_workers, derive_seed
from .report import Report
from .scenes import generate_scene
from .svg import render_svg

__all__ = ["STAGES", "detect_balls", "verify_balls", "carleson_balls", "run_experiment", "write_outputs"]

log = logging.getLogger(__name__)

STAGES = ("detect", "verify", "carleson")


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def detect_balls(K: SiteSet, balls: Sequence[BallSpec], params: GParams, workers: int = 1) -> list[GMembership]:
    return _map(lambda b: in_G(b.center, b.radius, K, params), list(balls), workers)


def verify_balls(
    K: SiteSet,
    memberships: Sequence[GMembership],
    params: GParams,
    plan: SamplePlan,
    fraction: float,
    seed: int,
    workers: int = 1,
) -> list[dict]:
    """Run the consistency check on every flagged ball and on a seeded share of the rest."""
    coin = np.random.default_rng(derive_seed(seed, 1)).random(len(memberships))
    chosen = [i for i, m in enumerate(memberships) if m.in_G or coin[i] < fraction]

    def one(i: int) -> dict:
        ball = memberships[i].ball
        p = SamplePlan(plan.strategy, plan.n, derive_seed(seed, 2, i))
        c = verify_consistency(K, ball, params, p)
        return {
            "index": i,
            "in_G": c.membership.in_G,
            "sampled_residual": c.fit.sampled_residual,
            "threshold": c.threshold,
            "consistent": c.consistent,
            "certificate": c.fit.to_dict(),
        }

    return _map(one, chosen, workers)


def carleson_balls(config: ExperimentConfig, family: Sequence[BallSpec]) -> list[BallSpec]:
    if config.carleson.balls is not None:
        return list(config.carleson.balls)
    n = min(config.carleson.max_balls, len(family))
    picks = np.unique(np.round(np.linspace(0, len(family) - 1, n)).astype(int))
    return [family[i] for i in picks]


def run_experiment(
    config: ExperimentConfig,
    stages: Sequence[str] = STAGES,
    workers: int | None = None,
    K: SiteSet | None = None,
) -> Report:
    """Evaluate the configured pipeline stages and write any configured outputs."""
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise InputError(f"unknown stages {sorted(unknown)}")
    workers = default_workers() if workers is None else max(1, int(workers))
    t0 = time.perf_counter()
    if K is None:
        scene = dict(config.scene)
        kind = scene.pop("kind")
        K = generate_scene(kind, scene, int(scene.pop("seed", config.seed)))
    family = config.ball_family()
    for b in family:
        if b.dim != K.dim:
            raise InputError(f"ball of dimension {b.dim} does not match scene dimension {K.dim}")
    params = config.params

    memberships = detect_balls(K, family, params, workers)
    n_in = sum(m.in_G for m in memberships)
    log.info("%d of %d balls flagged", n_in, len(memberships))

    verifications: list[dict] = []
    if "verify" in stages:
        verifications = verify_balls(
            K, memberships, params, config.sampling, config.verify_fraction, config.seed, workers
        )
    violations = sum(not v["consistent"] for v in verifications)
    if violations:
        log.error("%d consistency violations", violations)

    carleson = None
    if "carleson" in stages and config.carleson.enabled:
        s = config.carleson
        est = estimate_constant(
            G_oracle(K, params), carleson_balls(config, family), s.levels, s.per_octave, s.n, config.seed, workers
        )
        carleson = est.to_dict()

    summary = {
        "n_balls": len(memberships),
        "n_in_G": int(n_in),
        "n_out_G": len(memberships) - int(n_in),
        "n_verified": len(verifications),
        "violations": int(violations),
        "max_constant": None if carleson is None else carleson["sup"],
        "stages": list(stages),
    }
    report = Report(
        config=config.to_dict(),
        scene={"dim": K.dim, "n_sites": len(K), "sites": K.sites.tolist()},
        memberships=memberships,
        verifications=verifications,
        carleson=carleson,
        summary=summary,
        tool_version=__version__,
        wall_clock_seconds=time.perf_counter() - t0,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    write_outputs(report, config.outputs)
    return report


def write_outputs(report: Report, outputs: dict) -> None:
    if outputs.get("report"):
        report.write(outputs["report"])
    if outputs.get("summary_csv"):
        report.write_summary_csv(outputs["summary_csv"])
    if outputs.get("svg"):
        if report.scene["dim"] == 2:
            render_svg(report, outputs["svg"])
        else:
            log.warning("skipping SVG: scene dimension is %d", report.scene["dim"])
