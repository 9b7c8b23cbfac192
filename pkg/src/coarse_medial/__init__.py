"""Coarse, quantitative detection of the medial axis of finite point sets."""

__version__ = "0.1.0"

from .geometry import (
    BallSpec,
    InputError,
    SiteSet,
    angle_between,
    ball_volume,
    dist_to_set,
    distance_function,
    max_pairwise_angle,
    near_minimizers,
)
from .coarse_diff import (
    AffineMap,
    FitResult,
    SamplePlan,
    chebyshev_affine_fit,
    coarse_diff_test,
    gradient_norm_check,
    sample_ball,
)
from .detector import GMembership, GParams, G_oracle, bisector_distance, in_G, theta_star, verify_consistency
from .carleson import CarlesonEstimate, ScaleGrid, carleson_integral, estimate_constant, slice_measure
