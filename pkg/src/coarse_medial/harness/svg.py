"""Static SVG figure of a planar report: sites, tested balls, flagged balls."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..geometry import InputError
from .report import Report

__all__ = ["render_svg"]

_SIZE = 800.0
_PAD = 0.05


def render_svg(report: Report, path) -> Path:
    """Write an SVG 1.1 figure.  Flagged balls carry ``class="in-G"``."""
    if report.scene["dim"] != 2:
        raise InputError(f"SVG rendering supports planar scenes only, got dimension {report.scene['dim']}")
    sites = np.asarray(report.scene["sites"], dtype=float).reshape(-1, 2)
    balls = [m.ball for m in report.memberships]
    lo = sites.min(axis=0)
    hi = sites.max(axis=0)
    for b in balls:
        lo = np.minimum(lo, b.center - b.radius)
        hi = np.maximum(hi, b.center + b.radius)
    span = float(max(hi - lo)) or 1.0
    lo = lo - _PAD * span
    span *= 1.0 + 2.0 * _PAD
    scale = _SIZE / span

    def sx(x):
        return (x - lo[0]) * scale

    def sy(y):  # y axis points up in the figure
        return _SIZE - (y - lo[1]) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_SIZE:g}" height="{_SIZE:g}" '
        f'viewBox="0 0 {_SIZE:g} {_SIZE:g}">',
        "<style>.ball{fill:none;stroke:#9aa;stroke-width:0.5}"
        ".in-G{fill:#e33;fill-opacity:0.15;stroke:#c00;stroke-width:1.5}"
        ".site{fill:#000}.bisector{stroke:#36c;stroke-dasharray:6 4;stroke-width:1}</style>",
    ]
    if len(sites) == 2:
        a, b = sites
        mid = 0.5 * (a + b)
        d = np.array([-(b - a)[1], (b - a)[0]])
        d /= np.sqrt(np.sum(d * d)) or 1.0
        p, q = mid - 2 * span * d, mid + 2 * span * d
        out.append(
            f'<line class="bisector" x1="{sx(p[0]):.3f}" y1="{sy(p[1]):.3f}" x2="{sx(q[0]):.3f}" y2="{sy(q[1]):.3f}"/>'
        )
    out.append('<g id="balls">')
    for m in report.memberships:
        c, r = m.ball.center, m.ball.radius
        cls = "in-G" if m.in_G else "ball"
        out.append(f'<circle class="{cls}" cx="{sx(c[0]):.3f}" cy="{sy(c[1]):.3f}" r="{r * scale:.3f}"/>')
    out.append("</g>")
    out.append('<g id="sites">')
    for s in sites:
        out.append(f'<circle class="site" cx="{sx(s[0]):.3f}" cy="{sy(s[1]):.3f}" r="2.5"/>')
    out.append("</g>")
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
