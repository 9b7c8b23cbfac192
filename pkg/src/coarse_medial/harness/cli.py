"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 a consistency violation was
found (a flagged ball whose sampled fit residual is within the margin).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from ..geometry import InputError
from .config import THREADS_ENV, ExperimentConfig, load_config
from .experiment import run_experiment
from .io import write_points
from .report import Report
from .scenes import SCENE_KINDS, generate_scene
from .svg import render_svg

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

STAGES_FOR = {
    "detect": ("detect",),
    "verify": ("detect", "verify"),
    "carleson": ("detect", "carleson"),
    "run": ("detect", "verify", "carleson"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_ball(text: str) -> dict:
    try:
        center, radius = text.rsplit(":", 1)
        return {"center": _floats(center), "radius": float(radius)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x1,...,xk:r', got {text!r}") from None


def _parse_bbox(text: str) -> list[list[float]]:
    try:
        lo, hi = text.split(":")
        return [_floats(lo), _floats(hi)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo1,...,lok:hi1,...,hik', got {text!r}") from None


def _parse_kv(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _scene_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scene")
    g.add_argument("--scene", metavar="KIND", choices=SCENE_KINDS, help=f"scene kind, one of {', '.join(SCENE_KINDS)}")
    g.add_argument(
        "--scene-param",
        metavar="KEY=VALUE",
        type=_parse_kv,
        action="append",
        default=[],
        help="scene parameter; VALUE is read as JSON when possible (e.g. n=100, bbox=[[0,0],[1,1]])",
    )
    g.add_argument("--points", metavar="CSV", help="read the sites from a point CSV (same as --scene csv)")


def _experiment_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON experiment config; explicit flags override its fields")
    _scene_options(p)
    g = p.add_argument_group("parameters")
    g.add_argument("--eps", type=float, help="near-minimizer slack per unit radius (slack = eps * r); >= 0")
    g.add_argument("--delta", type=float, help="coarse differentiability level; needs 2*delta + eps < 1")
    g.add_argument(
        "--seed",
        type=int,
        help="root seed; per-ball fit seeds and per-slice Monte Carlo streams are derived from it, "
        "so a fixed seed reproduces the report exactly",
    )
    g = p.add_argument_group("balls")
    g.add_argument("--ball", type=_parse_ball, action="append", metavar="X1,..,XK:R", help="explicit ball (repeatable)")
    g.add_argument("--lattice-bbox", type=_parse_bbox, metavar="LO:HI", help="lattice center box, e.g. -1,-1:1,1")
    g.add_argument("--lattice-radius", type=float, metavar="R", help="largest lattice radius")
    g.add_argument("--lattice-octaves", type=int, metavar="J", help="radii R, R/2, ..., R/2^(J-1)")
    g.add_argument("--lattice-spacing", type=float, metavar="S", help="center grid step as a fraction of r (default 0.25)")
    g = p.add_argument_group("sampling and Carleson grid")
    g.add_argument("--samples", type=int, metavar="N", help="points per minimax fit (verification plan size)")
    g.add_argument("--strategy", choices=("uniform", "low_discrepancy", "mix"), help="fit sampling strategy")
    g.add_argument("--verify-fraction", type=float, help="share of unflagged balls also verified (flagged: all)")
    g.add_argument(
        "--scales",
        type=int,
        metavar="J",
        help="octaves in the Carleson scale grid; scales below L*2^-J are truncated",
    )
    g.add_argument("--per-octave", type=int, metavar="M", help="log-uniform cells per octave (cell width ln2/M)")
    g.add_argument("--mc-samples", type=int, metavar="N", help="Monte Carlo points per scale slice")
    g.add_argument("--carleson-balls", type=int, metavar="N", help="Carleson balls drawn from the ball family")
    g = p.add_argument_group("outputs")
    g.add_argument("--out", metavar="JSON", help="write the report here")
    g.add_argument("--csv", metavar="CSV", help="write the per-ball summary table here")
    g.add_argument("--svg", metavar="SVG", help="write a figure here (planar scenes only)")
    g.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="coarse-medial",
        description="Detect balls that appear to meet the medial axis of a point set, "
        "check them against minimax affine fits, and estimate Carleson constants.",
        epilog="Exit codes: 0 success, 1 usage error, 2 consistency violation found.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="write a generated site set as CSV")
    _scene_options(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="CSV", required=True)

    for name, text in (
        ("detect", "evaluate membership of each ball"),
        ("verify", "membership plus minimax-fit consistency checks"),
        ("carleson", "membership plus Carleson constant estimates"),
        ("run", "the full pipeline"),
    ):
        _experiment_options(sub.add_parser(name, help=text))

    p = sub.add_parser("render", help="draw a planar report as SVG")
    p.add_argument("--report", metavar="JSON", required=True)
    p.add_argument("--out", metavar="SVG", required=True)
    return parser


def _scene_from_args(args, base: dict | None) -> dict | None:
    params = dict(args.scene_param)
    if args.points:
        return {"kind": "csv", "path": args.points}
    if args.scene:
        return {"kind": args.scene, **params}
    if params:
        if base is None:
            raise UsageError("--scene-param needs --scene")
        return {**base, **params}
    return base


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = load_config(args.config).to_dict()
    scene = _scene_from_args(args, data.get("scene"))
    if scene is None:
        raise UsageError("no scene given (use --scene, --points or --config)")
    data["scene"] = scene

    params = dict(data.get("params") or {})
    if args.eps is not None:
        params["eps"] = args.eps
    if args.delta is not None:
        params["delta"] = args.delta
    data["params"] = params
    if args.seed is not None:
        data["seed"] = args.seed

    if args.ball:
        data["balls"], data["lattice"] = args.ball, None
    lattice_flags = {
        "bbox": args.lattice_bbox,
        "radius": args.lattice_radius,
        "octaves": args.lattice_octaves,
        "spacing": args.lattice_spacing,
    }
    lattice_flags = {k: v for k, v in lattice_flags.items() if v is not None}
    if lattice_flags:
        lattice = {**(data.get("lattice") or {}), **lattice_flags}
        if "bbox" not in lattice or "radius" not in lattice:
            raise UsageError("a lattice needs --lattice-bbox and --lattice-radius")
        data["lattice"] = lattice
        if not args.ball:
            data["balls"] = None
    if data.get("balls") is None and data.get("lattice") is None:
        raise UsageError("no balls given (use --ball, the --lattice-* flags or --config)")

    sampling = dict(data.get("sampling") or {})
    if args.samples is not None:
        sampling["n"] = args.samples
    if args.strategy is not None:
        sampling["strategy"] = args.strategy
    data["sampling"] = sampling
    if args.verify_fraction is not None:
        data["verify_fraction"] = args.verify_fraction

    carleson = dict(data.get("carleson") or {})
    for flag, key in (("scales", "levels"), ("per_octave", "per_octave"), ("mc_samples", "n"), ("carleson_balls", "max_balls")):
        value = getattr(args, flag)
        if value is not None:
            carleson[key] = value
    data["carleson"] = carleson

    outputs = dict(data.get("outputs") or {})
    for flag, key in (("out", "report"), ("csv", "summary_csv"), ("svg", "svg")):
        value = getattr(args, flag)
        if value is not None:
            outputs[key] = value
    data["outputs"] = outputs
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "gen-scene":
            scene = _scene_from_args(args, None)
            if scene is None:
                raise UsageError("no scene given (use --scene or --points)")
            kind = scene.pop("kind")
            K = generate_scene(kind, scene, args.seed)
            write_points(K, args.out)
            print(json.dumps({"n_sites": len(K), "dim": K.dim, "path": args.out}))
            return EXIT_OK
        if args.command == "render":
            render_svg(Report.read(args.report), args.out)
            return EXIT_OK
        config = config_from_args(args)
        report = run_experiment(config, STAGES_FOR[args.command], args.threads)
    except (UsageError, InputError, KeyError, OSError, ValueError) as exc:
        parser.exit(EXIT_USAGE, f"coarse-medial: error: {exc}\n")
    print(json.dumps(report.summary, sort_keys=True))
    return EXIT_VIOLATION if report.violations else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
