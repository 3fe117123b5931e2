import numpy as np
import pytest

from kobalt.errors import (
    NotOnBoundary,
    PointOutsideDomain,
    ZeroDirection,
)
from kobalt.geometry import (
    boundary_data,
    boundary_distance,
    convexity_probe,
    cnorm,
    directional_boundary_distance,
    nearest_boundary_point,
    sample_interior,
    same_complex_tangent,
    supporting_hyperplanes,
)
from kobalt.models import ball_domain


def c(*vals):
    return np.array(vals, dtype=complex)


class TestBoundaryDistance:
    def test_disk_center(self, disk):
        assert boundary_distance(disk, c(0)) == pytest.approx(1.0, rel=1e-6)

    def test_ball_radial(self, ball2):
        assert boundary_distance(ball2, c(0.5, 0)) == pytest.approx(0.5, rel=1e-6)

    def test_ellipsoid_against_dense_sampling(self, ellipsoid_m2):
        p = c(0.9, 0)
        # brute-force oracle: by phase symmetry the nearest boundary point to
        # a real point (x0, 0) lies in the real section {x^2 + s^4 = 1}, which
        # we sample densely
        s = np.linspace(0.0, 1.0, 2_000_001)
        x = np.sqrt(np.maximum(1.0 - s ** 4, 0.0))
        brute = float(np.min(np.hypot(x - 0.9, s)))
        val = boundary_distance(ellipsoid_m2, p)
        assert val == pytest.approx(brute, abs=1e-4)

    def test_outside_raises(self, disk):
        with pytest.raises(PointOutsideDomain):
            boundary_distance(disk, c(2.0))


class TestDirectionalDistance:
    def test_slice_is_unit_disk(self, ball2):
        assert directional_boundary_distance(ball2, c(0, 0), c(1, 0)) == \
            pytest.approx(1.0, rel=1e-9)

    def test_offset_slice_radius(self, ball2):
        # the slice {(0.5, zeta)} of the unit ball is a disk of radius sqrt(0.75)
        val = directional_boundary_distance(ball2, c(0.5, 0), c(0, 1))
        root = np.sqrt(1 - 0.25)  # independent 1D root of 0.25 + t^2 = 1
        assert val == pytest.approx(root, rel=1e-9)

    def test_dominates_full_distance(self, ellipsoid_m2):
        rng = np.random.default_rng(3)
        pts = sample_interior(ellipsoid_m2, 100, rng)
        vs = pts[::-1]
        for p, v in zip(pts[:100], vs[:100]):
            if cnorm(v) < 1e-9:
                continue
            dd = directional_boundary_distance(ellipsoid_m2, p, v, n_theta=32)
            assert dd >= boundary_distance(ellipsoid_m2, p) - 1e-7

    def test_zero_direction(self, ball2):
        with pytest.raises(ZeroDirection):
            directional_boundary_distance(ball2, c(0, 0), c(0, 0))

    def test_certified_radius_is_inner(self, ball2):
        raw = directional_boundary_distance(ball2, c(0.2, 0.1), c(1, 1))
        cert = directional_boundary_distance(ball2, c(0.2, 0.1), c(1, 1),
                                             certify_n=4096)
        assert cert <= raw
        assert cert == pytest.approx(raw, rel=1e-5)


class TestBoundaryData:
    def test_sphere_normal(self, ball2):
        bp = boundary_data(ball2, c(1, 0))
        assert np.allclose(bp.normal, c(-1, 0), atol=1e-12)
        assert bp.tangent.offset == pytest.approx(1.0)
        assert bp.tangent.contains(c(1, 0.5))  # {z1 = 1}

    def test_ellipsoid_tangent_at_pole(self, ellipsoid_m2):
        bp = boundary_data(ellipsoid_m2, c(0, 1))
        # gradient points purely along z there; tangent is {z2 = 1}
        assert abs(bp.tangent.offset - 1.0) < 1e-12
        assert bp.tangent.contains(c(0.3, 1.0))
        # finite-difference check of the gradient direction
        h = 1e-6
        g_fd = np.zeros(2, dtype=complex)
        for j, e in enumerate(np.eye(2)):
            re = (ellipsoid_m2.r(c(0, 1) + h * e) - ellipsoid_m2.r(c(0, 1) - h * e)) / (2 * h)
            im = (ellipsoid_m2.r(c(0, 1) + 1j * h * e) - ellipsoid_m2.r(c(0, 1) - 1j * h * e)) / (2 * h)
            g_fd[j] = re + 1j * im
        g = ellipsoid_m2.grad(c(0, 1))
        assert np.allclose(g, g_fd, rtol=1e-5, atol=1e-5)

    def test_flat_face_tangent(self, flat_face_wide):
        bp = boundary_data(flat_face_wide, c(1, 0.3))
        # the z gradient vanishes on the face, so the tangent is {w = 1}
        assert np.allclose(bp.normal, c(-1, 0), atol=1e-12)
        assert bp.tangent.contains(c(1, 0.05))

    def test_not_on_boundary(self, ball2):
        with pytest.raises(NotOnBoundary):
            boundary_data(ball2, c(0.5, 0))


class TestSameComplexTangent:
    def test_reflexive(self, ball2):
        a = boundary_data(ball2, c(1, 0))
        assert same_complex_tangent(a, a)

    def test_distinct_sphere_points(self, ball2):
        a = boundary_data(ball2, c(1, 0))
        b = boundary_data(ball2, c(0, 1))
        assert not same_complex_tangent(a, b)

    def test_shared_face(self, flat_face_wide):
        a = boundary_data(flat_face_wide, c(1, 0.2))
        b = boundary_data(flat_face_wide, c(1, -0.2))
        assert same_complex_tangent(a, b)

    def test_symmetric_on_samples(self, ellipsoid_m2):
        rng = np.random.default_rng(5)
        from kobalt.geometry import ray_to_boundary, sphere_directions

        dirs = sphere_directions(2, 6, rng)
        t = ray_to_boundary(ellipsoid_m2, ellipsoid_m2.anchor, dirs)
        bps = [boundary_data(ellipsoid_m2, ellipsoid_m2.anchor + tt * d, boundary_tol=1e-6)
               for tt, d in zip(t, dirs)]
        for a in bps:
            assert same_complex_tangent(a, a)
            for b in bps:
                assert same_complex_tangent(a, b) == same_complex_tangent(b, a)

    def test_phase_invariance(self, ball2):
        a = boundary_data(ball2, c(1, 0))
        b = boundary_data(ball2, c(np.exp(0.0j), 0))
        assert same_complex_tangent(a, b)


class TestSupportingHyperplanes:
    def test_sphere_tangents(self, ball2):
        planes = supporting_hyperplanes(ball2, 8, seed=1)
        assert len(planes) == 8
        for H in planes:
            assert abs(abs(H.offset) - 1.0) < 1e-9  # tangents of the unit sphere

    def test_disjointness_by_direct_minimization(self, ellipsoid_m2):
        bp = boundary_data(ellipsoid_m2, c(0, 1))
        H = bp.tangent  # the plane {z2 = 1}
        rng = np.random.default_rng(7)
        zs = rng.uniform(-1.2, 1.2, (5000, 1)) + 1j * rng.uniform(-1.2, 1.2, (5000, 1))
        pts = np.concatenate([zs, np.ones((5000, 1))], axis=1)  # points of {z2 = 1}
        assert float(np.min(ellipsoid_m2.r(pts))) >= -1e-8

    def test_returned_planes_avoid_domain(self, ellipsoid_m2):
        planes = supporting_hyperplanes(ellipsoid_m2, 12, seed=3)
        rng = np.random.default_rng(11)
        pts = sample_interior(ellipsoid_m2, 400, rng)
        for H in planes:
            assert float(np.min(H.distance(pts))) > 0.0


class TestConvexityProbe:
    @pytest.mark.parametrize("fixture", ["ball2", "ellipsoid_m2", "flat_face_narrow"])
    def test_midpoint_convexity(self, fixture, request):
        dom = request.getfixturevalue(fixture)
        assert convexity_probe(dom, n_pairs=1000, seed=0) < 1e-9

    def test_normal_matches_finite_differences(self, ellipsoid_m2):
        x = c(0.6, (1 - 0.36) ** 0.25)
        assert abs(ellipsoid_m2.r(x)) < 1e-12
        bp = boundary_data(ellipsoid_m2, x)
        h = 1e-6
        g_fd = np.zeros(2, dtype=complex)
        for j, e in enumerate(np.eye(2)):
            g_fd[j] = ((ellipsoid_m2.r(x + h * e) - ellipsoid_m2.r(x - h * e))
                       + 1j * (ellipsoid_m2.r(x + 1j * h * e) - ellipsoid_m2.r(x - 1j * h * e))) / (2 * h)
        direction = g_fd / cnorm(g_fd)
        assert cnorm(bp.normal + direction) < 1e-5


class TestValidateDomain:
    def test_model_domains_pass(self, ball2, ellipsoid_m2, flat_face_narrow):
        from kobalt.geometry import validate_domain

        for dom in (ball2, ellipsoid_m2, flat_face_narrow):
            report = validate_domain(dom)
            assert report["ok"], report

    def test_nonconvex_oracle_flagged(self):
        from kobalt.geometry import ConvexDomain, validate_domain

        # r = ||z||^4 - ||z|| - 1 is not convex near the origin
        def defining(z):
            n = np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))
            return n ** 4 - n - 1.0

        def gradient(z):
            n = np.sqrt(np.maximum(np.sum(np.abs(z) ** 2, axis=-1), 1e-300))
            return ((4.0 * n ** 2 - 1.0 / n))[..., None] * z

        dom = ConvexDomain(2, defining, gradient, bounding_radius=2.0)
        report = validate_domain(dom)
        assert not report["ok"]
        assert report["convexity_violation"] > 1e-9


class TestNearestBoundaryPoint:
    def test_witness_on_boundary(self, ellipsoid_m2):
        rng = np.random.default_rng(2)
        for p in sample_interior(ellipsoid_m2, 5, rng):
            dist, y = nearest_boundary_point(ellipsoid_m2, p)
            assert abs(ellipsoid_m2.r(y)) < 1e-7
            assert dist == pytest.approx(float(cnorm(y - p)), rel=1e-9)

    def test_ball_center_any_direction(self):
        dom = ball_domain(2, radius=2.0)
        dist, y = nearest_boundary_point(dom, np.zeros(2, dtype=complex))
        assert dist == pytest.approx(2.0, rel=1e-7)
        assert cnorm(y) == pytest.approx(2.0, rel=1e-7)
