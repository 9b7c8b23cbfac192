"""Cross-check the angle test against the affine fit on a random cloud.

Every flagged ball should be visibly non-affine: its sampled residual must
exceed (1 - margin) * delta * r.
"""
from coarse_medial import GParams
from coarse_medial.coarse_diff import dense_plan
from coarse_medial.detector import verify_consistency
from coarse_medial.harness import Lattice, generate_scene

K = generate_scene("random_cloud", {"n": 30, "dim": 2}, seed=3)
params = GParams(eps=0.05, delta=0.1)
balls = Lattice([[0.1, 0.1], [0.9, 0.9]], 0.1, octaves=2, spacing=1.0).balls()

flagged = worst = 0
violations = 0
for i, ball in enumerate(balls):
    c = verify_consistency(K, ball, params, dense_plan(2, i))
    if c.membership.in_G:
        flagged += 1
        ratio = c.fit.sampled_residual / (params.delta * ball.radius)
        worst = ratio if flagged == 1 else min(worst, ratio)
    violations += not c.consistent
print(f"{len(balls)} balls, {flagged} flagged, {violations} violations")
if flagged:
    print(f"smallest residual / (delta r) among flagged balls: {worst:.3f}")
