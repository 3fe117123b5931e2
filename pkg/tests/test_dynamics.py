import numpy as np
import pytest

from kobalt.errors import EscapeDetected, SpecValidationError
from kobalt.geometry import boundary_data, cnorm
from kobalt.hyperbolicity import ParamCurve, two_face_curve
from kobalt.metrics import distance_interval
from kobalt.models import SiegelDomain, WeightedPolynomial
from kobalt.dynamics import (
    SelfMap,
    ball_mobius,
    ball_unitary,
    cayley_conjugate,
    check_automorphism,
    classify,
    compose,
    ellipsoid_rotation,
    hyperbolic_search,
    iterate_orbit,
    limit_set_sample,
    siegel_classify_direct,
    siegel_dilation,
    siegel_translation,
    siegel_unitary,
    translation_check,
    wolff_denjoy,
)


def c(*vals):
    return np.array(vals, dtype=complex)


@pytest.fixture(scope="module")
def siegel_m2(ellipsoid_m2):
    return SiegelDomain(ellipsoid_m2.poly)


@pytest.fixture(scope="module")
def dilation_conjugate(ellipsoid_m2, siegel_m2):
    return cayley_conjugate(ellipsoid_m2, siegel_m2,
                            siegel_dilation(siegel_m2, 0.25))


@pytest.fixture(scope="module")
def translation_conjugate(ellipsoid_m2, siegel_m2):
    return cayley_conjugate(ellipsoid_m2, siegel_m2,
                            siegel_translation(siegel_m2, 1.0))


class TestConstructors:
    def test_roundtrips(self, disk, ball2, ellipsoid_m2, siegel_m2,
                        dilation_conjugate):
        for auto in [
            ball_mobius(disk, [0.5]),
            ball_mobius(ball2, [0.3, 0.2j]),
            ball_unitary(ball2, np.diag([np.exp(1j * 0.7), 1.0])),
            siegel_translation(siegel_m2, 1.5),
            siegel_dilation(siegel_m2, 0.5),
            siegel_unitary(siegel_m2, [0.9]),
            ellipsoid_rotation(ellipsoid_m2, 0.4),
            dilation_conjugate,
        ]:
            ok, err = check_automorphism(auto, n=50, seed=0, tol=1e-10)
            assert ok, (auto.kind_hint, err)

    def test_mobius_disk_formula(self, disk):
        f = ball_mobius(disk, [0.5])
        z = 0.3 + 0.1j
        assert complex(f(c(z))[0]) == pytest.approx((z + 0.5) / (1 + 0.5 * z))

    def test_mobius_parameter_validation(self, disk):
        with pytest.raises(SpecValidationError):
            ball_mobius(disk, [1.0])

    def test_unitary_validation(self, ball2):
        with pytest.raises(SpecValidationError):
            ball_unitary(ball2, [[2.0, 0], [0, 1.0]])

    def test_siegel_unitary_rejects_breaking_phase(self):
        # cross terms are not invariant under independent phase rotations
        p = WeightedPolynomial(2, {
            ((1, 0), (1, 0)): 1.0,
            ((0, 1), (0, 1)): 1.0,
            ((1, 0), (0, 1)): 0.5,
            ((0, 1), (1, 0)): 0.5,
        }, (1, 1))
        s = SiegelDomain(p)
        with pytest.raises(SpecValidationError):
            siegel_unitary(s, [0.3, 0.0])
        siegel_unitary(s, [0.3, 0.3])  # the diagonal rotation is fine


class TestIterateOrbit:
    def test_rotation_circle(self, disk):
        rot = ball_unitary(disk, [[np.exp(1j)]])
        orbit = iterate_orbit(rot, c(0.3), N=100)
        assert np.max(np.abs(np.abs(orbit.points[:, 0]) - 0.3)) < 1e-12

    def test_mobius_monotone_to_one(self, disk):
        f = ball_mobius(disk, [0.5])
        orbit = iterate_orbit(f, c(0), N=50)
        reals = orbit.points[:, 0].real
        assert np.all(np.diff(reals) > 0)
        assert np.all(np.abs(orbit.points[:, 0].imag) < 1e-14)
        assert reals[-1] > 0.999999

    def test_identity_constant(self, ball2):
        ident = ball_unitary(ball2, np.eye(2))
        orbit = iterate_orbit(ident, c(0.2, 0.1), N=10)
        assert np.max(np.abs(orbit.points - c(0.2, 0.1))) == 0.0

    def test_escape_detected(self, disk):
        bad = SelfMap(disk, lambda z: 1.5 * z)
        with pytest.raises(EscapeDetected):
            iterate_orbit(bad, c(0.9), N=5)


class TestWolffDenjoy:
    def test_disk_mobius_converges(self, disk):
        rep = wolff_denjoy(ball_mobius(disk, [0.5]), c(0), N=100)
        assert rep.verdict == "ConvergesToFace"
        assert rep.converged_below_tol
        assert cnorm(rep.limit_boundary_point.point - c(1)) < 1e-6
        k40 = min(40, len(rep.face_distances) - 1)
        assert rep.face_distances[k40] < 1e-6

    def test_face_distance_monotone_after_burn_in(self, disk):
        rep = wolff_denjoy(ball_mobius(disk, [0.5]), c(0), N=60)
        fd = rep.face_distances[5:]
        assert np.all(np.diff(fd) <= 1e-15)

    def test_disk_rotation_bounded(self, disk):
        rep = wolff_denjoy(ball_unitary(disk, [[np.exp(1j * 0.7)]]), c(0.3), N=100)
        assert rep.verdict == "BoundedOrbit"
        assert np.max(np.abs(np.abs(rep.orbit.points[:, 0]) - 0.3)) < 1e-12

    def test_ball_mobius_face(self, ball2):
        rep = wolff_denjoy(ball_mobius(ball2, [0.5, 0]), c(0, 0), N=100)
        assert rep.verdict == "ConvergesToFace"
        assert cnorm(rep.limit_boundary_point.point - c(1, 0)) < 1e-5
        assert np.abs(rep.orbit.points[-1][1]) < 1e-8  # second coordinate dies


class TestClassification:
    def test_dilation_hyperbolic(self, dilation_conjugate):
        cls = classify(dilation_conjugate, c(0, 0), N=200)
        assert cls.verdict == "hyperbolic"
        assert cnorm(cls.attracting.point - c(1, 0)) < 1e-6
        assert cnorm(cls.repelling.point - c(-1, 0)) < 1e-6

    def test_translation_parabolic(self, translation_conjugate):
        cls = classify(translation_conjugate, c(0, 0), N=400)
        assert cls.verdict == "parabolic"
        assert cnorm(cls.attracting.point - c(-1, 0)) < 0.1

    def test_rotation_elliptic(self, ball2):
        rot = ball_unitary(ball2, np.diag([np.exp(1j * 0.9), 1.0]))
        cls = classify(rot, c(0.3, 0.1), N=150)
        assert cls.verdict == "elliptic"

    def test_inverse_swaps_hyperplanes(self, dilation_conjugate):
        cls = classify(dilation_conjugate, c(0, 0), N=200)
        cls_inv = classify(dilation_conjugate.inv(), c(0, 0), N=200)
        assert cls_inv.verdict == "hyperbolic"
        assert cnorm(cls_inv.attracting.point - cls.repelling.point) < 1e-6
        assert cnorm(cls_inv.repelling.point - cls.attracting.point) < 1e-6

    def test_conjugation_invariance(self, siegel_m2, dilation_conjugate,
                                    translation_conjugate):
        p_siegel = c(4j, 0.1)
        assert siegel_classify_direct(
            siegel_m2, siegel_dilation(siegel_m2, 0.25), p_siegel) == "hyperbolic"
        assert siegel_classify_direct(
            siegel_m2, siegel_translation(siegel_m2, 1.0), p_siegel) == "parabolic"
        assert classify(dilation_conjugate, c(0, 0), N=200).verdict == "hyperbolic"
        assert classify(translation_conjugate, c(0, 0), N=400).verdict == "parabolic"

    def test_elliptic_orbit_on_kobayashi_sphere(self, ball2):
        # orbit of a rotation stays on a Kobayashi sphere about the fixed point
        rot = ball_unitary(ball2, np.diag([np.exp(1j * 0.9), np.exp(0.4j)]))
        start = c(0.3, 0.1)
        orbit = iterate_orbit(rot, start, N=40)
        base_iv = distance_interval(ball2, c(0, 0), start, budget="fast")
        for k in range(0, 41, 8):
            iv = distance_interval(ball2, c(0, 0), orbit.points[k], budget="fast")
            slack = iv.width + base_iv.width
            assert abs(iv.midpoint - base_iv.midpoint) <= slack + 1e-9


class TestHyperbolicSearch:
    def test_direct_hit(self, dilation_conjugate):
        res = hyperbolic_search([dilation_conjugate], c(0, 0), N=200)
        assert res.found is dilation_conjugate
        assert res.classification.verdict == "hyperbolic"

    def test_same_face_translations_not_found(self, ellipsoid_m2, siegel_m2):
        plus = cayley_conjugate(ellipsoid_m2, siegel_m2,
                                siegel_translation(siegel_m2, 1.0))
        minus = cayley_conjugate(ellipsoid_m2, siegel_m2,
                                 siegel_translation(siegel_m2, -1.0))
        res = hyperbolic_search([plus, minus], c(0, 0), budget=2, N=250)
        assert res.found is None
        assert all(v != "hyperbolic" for _, v in res.tried)

    def test_distinct_face_parabolics_compose_hyperbolic(
            self, ellipsoid_m2, translation_conjugate):
        u = ellipsoid_rotation(ellipsoid_m2, np.pi)
        other = compose(u, translation_conjugate, u.inv())
        res = hyperbolic_search([translation_conjugate, other], c(0, 0),
                                budget=2, N=250)
        assert res.found is not None
        assert res.classification.verdict == "hyperbolic"


class TestTranslationCheck:
    def test_dilation_shadows_curve(self, ellipsoid_m2, dilation_conjugate):
        x = boundary_data(ellipsoid_m2, c(1, 0))
        y = boundary_data(ellipsoid_m2, c(-1, 0))
        sigma = two_face_curve(ellipsoid_m2, x, y)
        rep = translation_check(dilation_conjugate, sigma, c(0, 0),
                                np.linspace(-4, 4, 9), k_max=40)
        assert np.isfinite(rep.sup_min_upper)
        assert rep.sup_min_upper <= 3.0

    def test_kmax_zero_single_point(self, ellipsoid_m2, dilation_conjugate):
        x = boundary_data(ellipsoid_m2, c(1, 0))
        y = boundary_data(ellipsoid_m2, c(-1, 0))
        sigma = two_face_curve(ellipsoid_m2, x, y)
        rep = translation_check(dilation_conjugate, sigma, c(0, 0),
                                np.array([0.5]), k_max=0)
        from kobalt.metrics import upper_distance

        direct, _, _ = upper_distance(ellipsoid_m2, sigma(np.array([0.5]))[0],
                                      c(0, 0), budget="orbit")
        assert rep.min_upper[0] == pytest.approx(direct, abs=1e-9)
        assert rep.argmin_k[0] == 0

    def test_orbit_interpolation_is_shadowed_exactly(self, ellipsoid_m2,
                                                     dilation_conjugate):
        # the piecewise-linear interpolation of the orbit itself is at
        # distance zero from the orbit at integer times
        pts = [c(0, 0)]
        z = c(0, 0)
        for _ in range(4):
            z = dilation_conjugate(z)
            pts.append(z)
        pts = np.array(pts)

        def eval_fn(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            k = np.clip(np.floor(t).astype(int), 0, len(pts) - 2)
            frac = (t - k)[:, None]
            return (1 - frac) * pts[k] + frac * pts[k + 1]

        sigma = ParamCurve(eval_fn, 0.0, 4.0)
        rep = translation_check(dilation_conjugate, sigma, c(0, 0),
                                np.arange(5.0), k_max=6)
        assert np.max(rep.min_upper) < 1e-9


class TestLimitSets:
    def test_disk_mobius_forward_only(self, disk):
        ls = limit_set_sample([ball_mobius(disk, [0.5])], c(0), N=80,
                              include_inverses=False, include_words=False)
        assert len(ls.points) == 1
        assert cnorm(ls.points[0].point - c(1)) < 1e-3

    def test_disk_mobius_with_inverses(self, disk):
        ls = limit_set_sample([ball_mobius(disk, [0.5])], c(0), N=80)
        got = sorted(round(float(b.point[0].real), 3) for b in ls.points)
        assert got == [-1.0, 1.0]

    def test_rotation_empty(self, ball2):
        rot = ball_unitary(ball2, np.diag([np.exp(1j * 0.5), 1.0]))
        ls = limit_set_sample([rot], c(0.3, 0), N=100)
        assert ls.points == []

    def test_dilation_two_faces(self, dilation_conjugate):
        ls = limit_set_sample([dilation_conjugate], c(0, 0), N=120)
        assert len(ls.points) == 2
        assert len(set(ls.face_tags)) == 2
