"""Two sites, one bisector.

Balls centered on the perpendicular bisector of two points see both sites as
nearest, and the angle they subtend decides membership.  Balls off the
bisector see a single nearest site and are never flagged.
"""
import numpy as np

from coarse_medial import GParams, SiteSet, in_G, theta_star
from coarse_medial.detector import apex_angle

K = SiteSet([[-1.0, 0.0], [1.0, 0.0]])
params = GParams(eps=0.0, delta=0.1)
print(f"angle threshold theta* = {theta_star(params):.6f} rad")

for h in (0.25, 0.5, 0.75, 1.0, 2.0):
    m = in_G([0.0, h], 0.5 * h, K, params)
    print(f"center (0, {h:<4}) apex {apex_angle(1.0, h):.4f}  in G: {m.in_G!s:<5} ({m.reason})")

m = in_G(np.array([0.3, 0.5]), 0.2, K, params)
print(f"off-axis center (0.3, 0.5): in G = {m.in_G} ({m.reason})")
