"""Carleson integrals of the bad set, with and without near-minimizer slack.

With eps = 0 and finitely many sites the bad set is a null set and every
estimate is zero.  A positive eps thickens it around the bisector.
"""
from coarse_medial import BallSpec, GParams, SiteSet
from coarse_medial.carleson import estimate_constant
from coarse_medial.detector import G_oracle

K = SiteSet([[-1.0, 0.0], [1.0, 0.0]])
balls = [BallSpec([0.0, 0.0], 2.0 ** j) for j in range(-3, 4)]
for eps in (0.0, 0.05):
    est = estimate_constant(G_oracle(K, GParams(eps, 0.1)), balls, levels=10, per_octave=4, n=2048, seed=1)
    row = "  ".join(f"{e.constant:.4f}" for e in est.per_ball)
    print(f"eps={eps}: per-ball [{row}]  sup {est.sup:.4f}")
