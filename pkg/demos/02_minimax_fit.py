"""Best affine fits of a distance function.

Near a single site the distance is almost affine, so the fit residual is a
small fraction of the radius.  Straddling the bisector of two sites the
graph has a ridge and no affine map comes close.
"""
from coarse_medial import BallSpec, SiteSet, coarse_diff_test, distance_function
from coarse_medial.coarse_diff import dense_plan, gradient_norm_check

far = SiteSet([[0.0, 0.0]])
ridge = SiteSet([[-1.0, 0.0], [1.0, 0.0]])

for name, K, ball in (
    ("far from a singleton", far, BallSpec([10.0, 0.0], 1.0)),
    ("across a bisector", ridge, BallSpec([0.0, 1.0], 0.5)),
):
    cert = coarse_diff_test(distance_function(K), ball, eps=0.1, plan=dense_plan(2))
    grad = gradient_norm_check(cert.fit, ball)
    print(f"{name}: residual/r = {cert.sampled_residual / ball.radius:.4f}, verdict {cert.verdict}, "
          f"slope {grad.norm:.3f} (bound {grad.bound:.3f})")
