import numpy as np
import pytest

from kobalt.errors import EpsTooLarge, SameFace, TooFewPoints
from kobalt.geometry import boundary_data
from kobalt.hyperbolicity import (
    ParamCurve,
    certify_quasi_geodesic,
    four_point_delta,
    normal_curve,
    product_dichotomy_experiment,
    two_face_curve,
    visibility_probe,
)


def c(*vals):
    return np.array(vals, dtype=complex)


class TestNormalCurve:
    def test_start_point(self, disk):
        bp = boundary_data(disk, c(1))
        curve = normal_curve(disk, bp, eps=0.5)
        assert np.allclose(curve(0.0), c(0.5))

    def test_eps_too_large(self, disk):
        bp = boundary_data(disk, c(1))
        with pytest.raises(EpsTooLarge):
            normal_curve(disk, bp, eps=2.5)
        with pytest.raises(EpsTooLarge):
            normal_curve(disk, bp, eps=-1.0)

    def test_disk_radius_parametrization(self, disk):
        # along the radius K(sigma(s), sigma(t)) = |t - s| + O(e^{-2 min})
        bp = boundary_data(disk, c(1))
        curve = normal_curve(disk, bp, eps=1.0)
        for s, t in [(1.0, 3.0), (2.0, 4.5)]:
            zs, zt = complex(curve(s)[0]), complex(curve(t)[0])
            exact = float(np.arctanh(abs((zs - zt) / (1 - zs * np.conj(zt)))))
            assert abs(exact - abs(t - s)) < np.exp(-2 * min(s, t))

    def test_ellipsoid_curve_stays_inside(self, ellipsoid_m2):
        bp = boundary_data(ellipsoid_m2, c(0, 1))
        curve = normal_curve(ellipsoid_m2, bp, eps=0.1, t_max=6.0)
        samples = curve(np.linspace(0, 6, 40))
        assert np.all(ellipsoid_m2.r(samples) < 0)


class TestCertifyQuasiGeodesic:
    def test_disk_radius_passes_log2(self, disk):
        bp = boundary_data(disk, c(1))
        curve = normal_curve(disk, bp, eps=1.0)
        cert = certify_quasi_geodesic(disk, curve, A=1.0, B=np.log(2.0),
                                      grid=np.linspace(0, 5, 8))
        assert cert.all_pass
        assert cert.B_hat <= np.log(2.0)

    def test_euclidean_chord_fails(self, ball2):
        # a chord through the center parametrized by Euclidean length cannot
        # be a (1, 0.1) quasi-geodesic: the metric grows logarithmically
        def eval_fn(t):
            t = np.asarray(t, dtype=float)
            return np.stack([t - 0.9, np.zeros_like(t)], axis=-1).astype(complex)

        curve = ParamCurve(eval_fn, 0.0, 1.8)
        cert = certify_quasi_geodesic(ball2, curve, A=1.0, B=0.1,
                                      grid=np.array([0.0, 0.9, 1.8]))
        assert not cert.all_pass

    def test_single_point_vacuous(self, disk):
        bp = boundary_data(disk, c(1))
        curve = normal_curve(disk, bp, eps=1.0)
        cert = certify_quasi_geodesic(disk, curve, A=1.0, B=0.0, grid=[2.0])
        assert cert.all_pass and cert.pairs == []

    def test_verdicts_monotone_in_constants(self, disk):
        bp = boundary_data(disk, c(1))
        curve = normal_curve(disk, bp, eps=1.0)
        grid = np.linspace(0, 4, 6)
        tight = certify_quasi_geodesic(disk, curve, A=1.0, B=0.2, grid=grid)
        loose = certify_quasi_geodesic(disk, curve, A=2.0, B=0.7, grid=grid)
        for v_tight, v_loose in zip(tight.verdicts, loose.verdicts):
            if v_tight:
                assert v_loose


class TestDichotomy:
    def test_single_level(self, ball2):
        bp = boundary_data(ball2, c(1, 0))
        rep = product_dichotomy_experiment(ball2, bp, bp, c(0, 0), n_steps=0)
        assert rep.lower.shape == (1, 1)
        assert rep.same_point

    def test_ball_same_point_divergence_trend(self, ball2):
        bp = boundary_data(ball2, c(1, 0))
        rep = product_dichotomy_experiment(ball2, bp, bp, c(0, 0), n_steps=6)
        assert np.all(np.diff(rep.diag_lower[3:]) > -1e-6)
        assert rep.diag_lower[6] > rep.diag_lower[3]

    def test_flat_face_two_faces_bounded(self, flat_face_narrow):
        x = boundary_data(flat_face_narrow, c(1, 0.1))
        y = boundary_data(flat_face_narrow, c(-1, 0))
        rep = product_dichotomy_experiment(flat_face_narrow, x, y, c(0, 0.7),
                                           n_steps=6)
        assert not rep.same_point
        assert rep.upper[4:, 4:].max() <= 1.2 * rep.upper[4, 4] + 1e-9


class TestFourPointDelta:
    def test_disk_example(self, disk):
        pts = np.array([[0], [0.9], [0.9j], [-0.9]], dtype=complex)
        rep = four_point_delta(pts, disk)
        assert rep.delta_hat <= 2.0

    def test_all_equal_points(self, disk):
        pts = np.array([[0.2]] * 4, dtype=complex)
        rep = four_point_delta(pts, disk)
        assert rep.delta_hat == pytest.approx(0.0, abs=1e-12)

    def test_collinear_tree_like(self, disk):
        pts = np.array([[0], [0.3], [0.6], [0.9]], dtype=complex)
        rep = four_point_delta(pts, disk)
        assert rep.delta_hat <= rep.interval_slack + 1e-9

    def test_permutation_invariant(self, disk):
        pts = np.array([[0], [0.5], [0.4j], [-0.6]], dtype=complex)
        a = four_point_delta(pts, disk)
        b = four_point_delta(pts[::-1], disk)
        assert a.delta_hat == pytest.approx(b.delta_hat, abs=1e-12)

    def test_too_few(self, disk):
        with pytest.raises(TooFewPoints):
            four_point_delta(np.array([[0], [0.1], [0.2]], dtype=complex), disk)


class TestVisibility:
    def test_ball_antipodal(self, ball2):
        x = boundary_data(ball2, c(1, 0))
        y = boundary_data(ball2, c(-1, 0))
        rep = visibility_probe(ball2, x, y, n_levels=4)
        # witness paths pass near the center: depth at least 0.5 at every level
        assert np.all(rep.penetration_depth >= 0.5)
        assert rep.stable

    def test_same_face_rejected(self, flat_face_narrow):
        x = boundary_data(flat_face_narrow, c(1, 0.1))
        y = boundary_data(flat_face_narrow, c(1, -0.1))
        with pytest.raises(SameFace):
            visibility_probe(flat_face_narrow, x, y, n_levels=2)

    def test_flat_face_depth_stable(self, flat_face_narrow):
        x = boundary_data(flat_face_narrow, c(1, 0.1))
        y = boundary_data(flat_face_narrow, c(-1, 0))
        rep = visibility_probe(flat_face_narrow, x, y, n_levels=4)
        assert rep.stable

    def test_single_level_report(self, ball2):
        x = boundary_data(ball2, c(1, 0))
        y = boundary_data(ball2, c(0, 1))
        rep = visibility_probe(ball2, x, y, n_levels=1)
        assert len(rep.penetration_depth) == 1


class TestTwoFaceCurve:
    def test_continuity_and_membership(self, ellipsoid_m2):
        x = boundary_data(ellipsoid_m2, c(1, 0))
        y = boundary_data(ellipsoid_m2, c(-1, 0))
        curve = two_face_curve(ellipsoid_m2, x, y)
        ts = np.linspace(curve.t_min, curve.t_max, 80)
        pts = curve(ts)
        assert np.all(ellipsoid_m2.r(pts) < 0)
        # continuity across the seams
        for seam in (0.0, curve.bridge_length):
            a = curve(np.array([seam - 1e-9]))[0]
            b = curve(np.array([seam + 1e-9]))[0]
            assert np.max(np.abs(a - b)) < 1e-6
