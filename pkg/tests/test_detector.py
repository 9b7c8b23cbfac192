import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_medial.coarse_diff import SamplePlan, dense_plan
from coarse_medial.detector import (
    GMembership,
    GParams,
    apex_angle,
    bisector_distance,
    in_G,
    in_G_many,
    theta_star,
    verify_consistency,
)
from coarse_medial.geometry import BallSpec, InputError, SiteSet, dist_to_set, near_minimizers

from conftest import point_near_axis, random_rotation, random_scene


def theta_star_mp(delta, eps):
    mpmath.mp.dps = 50
    d, e = mpmath.mpf(delta), mpmath.mpf(eps)
    return mpmath.acos(2 * ((1 - (2 * d + e)) / (1 + 2 * d)) ** 2 - 1)


class TestGParams:
    @pytest.mark.parametrize("eps,delta", [(-0.1, 0.1), (0.0, 0.0), (0.5, 0.25), (0.0, 0.5), (math.nan, 0.1)])
    def test_domain(self, eps, delta):
        with pytest.raises(InputError):
            GParams(eps, delta)

    def test_roundtrip(self):
        p = GParams(0.05, 0.2)
        assert GParams.from_dict(p.to_dict()) == p


class TestThetaStar:
    def test_small_parameters(self):
        assert theta_star(GParams(0.0, 1e-9)) < 1e-3

    def test_delta_tenth(self):
        assert abs(theta_star(GParams(0.0, 0.1)) - float(mpmath.acos(mpmath.mpf(-1) / 9))) < 1e-12
        assert abs(theta_star(GParams(0.0, 0.1)) - 1.682137) < 1e-6

    def test_delta_eps_tenth(self):
        oracle = theta_star_mp(0.1, 0.1)
        assert abs(theta_star(GParams(0.1, 0.1)) - float(oracle)) < 1e-12
        # arccos(2 (0.7 / 1.2)^2 - 1) = arccos(-0.3194...)
        assert abs(2 * (0.7 / 1.2) ** 2 - 1 + 0.3194444444444) < 1e-12

    def test_monotone_grid(self):
        deltas = np.linspace(1e-4, 0.4999, 100)
        epss = np.linspace(0.0, 0.9998, 100)
        T = np.full((100, 100), np.nan)
        for i, d in enumerate(deltas):
            for j, e in enumerate(epss):
                if 2 * d + e < 1:
                    T[i, j] = theta_star(GParams(e, d))
        for i in range(100):
            row = T[i][~np.isnan(T[i])]
            assert np.all(np.diff(row) > 0)
        for j in range(100):
            col = T[:, j][~np.isnan(T[:, j])]
            assert np.all(np.diff(col) > 0)
        assert np.nanmin(T) > 0 and np.nanmax(T) <= math.pi


class TestInG:
    def test_midpoint(self, two_points):
        m = in_G([0, 0], 0.5, two_points, GParams(0.0, 0.1))
        assert m.in_G and m.theta_max == math.pi and m.theta_max > 1.682
        assert m.near_set_size == 2
        assert [w.tolist() for w in m.witness] == [[-1, 0], [1, 0]]

    def test_unique_minimizer(self, two_points):
        m = in_G([0.5, 0], 0.25, two_points, GParams(0.0, 0.1))
        assert not m.in_G and m.witness is None and m.near_set_size == 1

    def test_singleton(self):
        m = in_G([0, 0], 0.9, SiteSet([[1, 0]]), GParams(0.0, 0.1))
        assert m.d_xK == 1 and not m.in_G and m.near_set_size == 1

    def test_scale_constraint(self, two_points):
        m = in_G([0, 0], 1.0, two_points, GParams(0.0, 0.1))
        assert not m.in_G and m.reason == "scale constraint"
        assert in_G([0, 0], np.nextafter(1.0, 0), two_points, GParams(0.0, 0.1)).in_G

    def test_dimension_mismatch(self, two_points):
        with pytest.raises(InputError):
            in_G([0, 0, 0], 0.1, two_points, GParams(0.0, 0.1))

    def test_roundtrip(self, two_points):
        m = in_G([0, 0.3], 0.5, two_points, GParams(0.05, 0.1))
        assert GMembership.from_dict(m.to_dict()) == m

    def test_invariant_fields(self, rng):
        for _ in range(300):
            K = random_scene(rng, 2, 5, 40)
            x = point_near_axis(rng, K)
            d, _ = dist_to_set(x, K)
            m = in_G(x, d * rng.uniform(0.01, 1.2), K, GParams(float(rng.choice([0, 0.05, 0.2])), 0.1))
            expected = 0 < m.ball.radius < m.d_xK and m.near_set_size >= 2 and m.theta_max > m.theta_star
            assert m.in_G == expected
            assert (m.witness is not None) == m.in_G

    def test_apex_angle_oracle(self):
        # two sites at +-a on the x axis, x = (0, h) on the bisector
        a = 1.0
        K = SiteSet([[-a, 0], [a, 0]])
        for delta in (0.05, 0.1, 0.2, 0.3):
            p = GParams(0.0, delta)
            for h in np.concatenate([np.linspace(0, 5, 101), np.geomspace(1e-3, 50, 60)]):
                d = math.hypot(a, h)
                for frac in (0.01, 0.5, 0.99):
                    m = in_G([0, h], frac * d, K, p)
                    assert m.in_G == (apex_angle(a, h) > theta_star(p))


class TestInGMany:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_scalar(self, rng, k):
        for trial in range(6):
            K = random_scene(rng, k, 2, 60)
            params = GParams(float(rng.choice([0.0, 0.05, 0.3])), 0.1)
            X = np.array([point_near_axis(rng, K) for _ in range(150)] + list(rng.random((150, k))))
            r = float(rng.uniform(0.001, 0.1))
            batch = in_G_many(X, r, K, params)
            scalar = np.array([in_G(x, r, K, params).in_G for x in X])
            assert np.array_equal(batch, scalar)

    def test_many_ties(self):
        # lattice sites: points at cell centres have four exact ties
        g = np.array([[i, j] for i in range(6) for j in range(6)], dtype=float)
        K = SiteSet(g)
        X = np.array([[i + 0.5, j + 0.5] for i in range(5) for j in range(5)] + [[2.5, 2.0], [0.3, 0.4]])
        p = GParams(0.4, 0.1)
        batch = in_G_many(X, 0.2, K, p)
        assert np.array_equal(batch, [in_G(x, 0.2, K, p).in_G for x in X])
        assert batch[:25].all()


class TestBisector:
    def test_distance(self, two_points):
        assert bisector_distance([0.3, 7], two_points) == pytest.approx(0.3)
        assert bisector_distance([0, -2], two_points) == 0
        assert bisector_distance([-0.3, 7], two_points, signed=True) == pytest.approx(-0.3)

    def test_needs_two_sites(self):
        with pytest.raises(InputError):
            bisector_distance([0, 0], SiteSet([[0, 0], [1, 0], [2, 0]]))

    def test_ties_on_bisector(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 4))
            K = SiteSet(rng.standard_normal((2, k)))
            a, b = K.sites
            nrm = (b - a) / np.linalg.norm(b - a)
            x = rng.standard_normal(k)
            x = x - np.dot(x - 0.5 * (a + b), nrm) * nrm
            assert bisector_distance(x, K) < 1e-12
            assert len(near_minimizers(x, K, 0.0)) == 2
            y = x + 1e-3 * nrm
            assert len(near_minimizers(y, K, 0.0)) == 1


class TestVerifyConsistency:
    def test_two_point(self, two_points):
        res = verify_consistency(two_points, BallSpec([0, 0], 0.5), GParams(0.0, 0.1), dense_plan(2))
        assert res.membership.in_G
        assert res.fit.sampled_residual > 0.05 * 0.95
        assert res.consistent

    def test_singleton_vacuous(self, rng):
        K = SiteSet([[0.0, 0.0]])
        for _ in range(10):
            x = rng.uniform(-2, 2, 2)
            d, _ = dist_to_set(x, K)
            res = verify_consistency(K, BallSpec(x, d * 0.5), GParams(0.0, 0.1), SamplePlan("mix", 500, 1))
            assert not res.membership.in_G and res.consistent

    def test_flags_inconsistency(self, two_points):
        # with a huge margin every flagged ball is reported as a violation
        res = verify_consistency(two_points, BallSpec([0, 0], 0.5), GParams(0.0, 0.1), dense_plan(2), margin=-10)
        assert not res.consistent

    def test_random_batch(self, rng):
        flagged = 0
        for i in range(150):
            k = int(rng.choice([2, 3]))
            K = random_scene(rng, k, 10, 200)
            p = GParams(float(rng.choice([0.0, 0.05])), float(rng.choice([0.05, 0.1, 0.2])))
            x = point_near_axis(rng, K)
            d, _ = dist_to_set(x, K)
            res = verify_consistency(K, BallSpec(x, d * rng.uniform(0.02, 0.999)), p, dense_plan(k, i))
            flagged += res.membership.in_G
            assert res.consistent
        assert flagged > 10


class TestMonotonicity:
    def test_anti_monotone_in_delta(self, rng):
        for _ in range(300):
            K = random_scene(rng, 2, 5, 50)
            x = point_near_axis(rng, K)
            d, _ = dist_to_set(x, K)
            r = d * rng.uniform(0.01, 0.99)
            eps = float(rng.choice([0.0, 0.05, 0.2]))
            d1, d2 = sorted(rng.uniform(0.001, (1 - eps) / 2 - 1e-6, 2))
            if in_G(x, r, K, GParams(eps, d2)).in_G:
                assert in_G(x, r, K, GParams(eps, d1)).in_G

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 20))
    def test_rigid_motion_and_scaling(self, seed, s):
        rng = np.random.default_rng(seed)
        k = int(rng.choice([2, 3]))
        K = random_scene(rng, k, 3, 30)
        x = point_near_axis(rng, K)
        d, _ = dist_to_set(x, K)
        r = d * rng.uniform(0.05, 0.95)
        p = GParams(float(rng.choice([0.0, 0.1])), 0.1)
        base = in_G(x, r, K, p)
        R, t = random_rotation(rng, k), rng.uniform(-5, 5, k)
        moved = in_G(R @ x + t, r, K.transformed(R, t), p)
        scaled = in_G(s * x, s * r, K.transformed(scale=s), p)
        for other in (moved, scaled):
            if abs(base.theta_max - base.theta_star) > 1e-9:
                assert other.in_G == base.in_G
