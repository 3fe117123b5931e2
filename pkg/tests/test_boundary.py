import numpy as np
import pytest

from kobalt.boundary import (
    INFINITE_TYPE,
    DomainOracle,
    frankel_scaling,
    homogeneous_model,
    line_type,
    local_hausdorff_distance,
    vanishing_order,
)
from kobalt.errors import (
    EmptyIntersection,
    NoConvergence,
    NotVanishing,
    SpecValidationError,
)
from kobalt.geometry import boundary_data
from kobalt.models import SiegelDomain, ball_domain, diagonal_ellipsoid


def c(*vals):
    return np.array(vals, dtype=complex)


class TestVanishingOrder:
    def test_monomial(self):
        assert vanishing_order({(2, 2): 1.0}) == 4

    def test_linear_dominates(self):
        assert vanishing_order({(1, 0): 0.5, (0, 1): 0.5, (1, 1): 1.0}) == 1

    def test_flat_oracle_infinite(self):
        g = lambda z: np.exp(-1.0 / np.maximum(np.abs(z), 1e-300))
        assert vanishing_order(g, cap=20) == INFINITE_TYPE

    def test_oracle_matches_polynomial(self):
        assert vanishing_order(lambda z: np.abs(z) ** 4, cap=20) == 4
        assert vanishing_order(lambda z: np.abs(z) ** 4 + np.abs(z) ** 6, cap=20) == 4
        assert vanishing_order(lambda z: np.real(z) + np.abs(z) ** 2, cap=20) == 1

    def test_not_vanishing(self):
        with pytest.raises(NotVanishing):
            vanishing_order({(0, 0): 1.0, (1, 1): 1.0})
        with pytest.raises(NotVanishing):
            vanishing_order(lambda z: 1.0 + np.abs(z) ** 2, cap=10)

    def test_scaling_invariance(self):
        # order of g(c * zeta) equals the order of g for c != 0
        base = {(2, 1): 1.0, (1, 2): 1.0, (3, 3): 2.0}
        assert vanishing_order(base) == 3
        for scale in (0.5, 2.0, np.exp(0.7j)):
            scaled = {(j, k): coeff * scale ** j * np.conj(scale) ** k
                      for (j, k), coeff in base.items()}
            assert vanishing_order(scaled) == 3
        g = lambda z: np.abs(z) ** 4 + np.abs(z) ** 5
        for scale in (0.5, 2.0):
            assert vanishing_order(lambda z, s=scale: g(s * z), cap=20) == \
                vanishing_order(g, cap=20)

    def test_identically_zero_restriction(self):
        assert vanishing_order({}, cap=10) == INFINITE_TYPE


class TestLineType:
    @pytest.mark.parametrize("m,expect_pole,expect_side", [(2, 4, 2), (3, 6, 2)])
    def test_diagonal_ellipsoids(self, m, expect_pole, expect_side):
        dom = diagonal_ellipsoid([m])
        pole = line_type(dom, boundary_data(dom, c(1, 0)))
        side = line_type(dom, boundary_data(dom, c(0, 1)))
        assert pole.type_value == expect_pole
        assert side.type_value == expect_side
        # the maximizing line at the pole is tangent (z-axis direction)
        assert abs(pole.maximizing_line[1][0]) < 1e-9

    def test_ball_everywhere_two(self, ball2):
        rng = np.random.default_rng(0)
        for _ in range(4):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            v = v / np.sqrt(np.sum(np.abs(v) ** 2))
            res = line_type(ball2, boundary_data(ball2, v))
            assert res.type_value == 2

    def test_unitary_invariance_in_z(self):
        dom = diagonal_ellipsoid([2])
        x = c(1, 0)
        base = line_type(dom, boundary_data(dom, x)).type_value
        # z-block unitaries here are phases; the type must not move
        for phase in (0.3, 1.2, 2.9):
            rotated = diagonal_ellipsoid([2])
            bp = boundary_data(rotated, c(np.exp(1j * phase), 0) * 0 + x)
            assert line_type(rotated, bp, seed=3).type_value == base

    def test_flat_face_infinite(self, flat_face_narrow):
        bp = boundary_data(flat_face_narrow, c(1, 0.1))
        res = line_type(flat_face_narrow, bp, cap=20)
        assert res.type_value == INFINITE_TYPE


class TestHomogeneousModel:
    def test_exact_quartic(self):
        fit = homogeneous_model(lambda x, z: float(np.abs(z[0]) ** 4),
                                deltas=[0.25], t_grid=[1, 0.3, 0.1, 0.03, 0.01])
        assert fit.residuals[-1] < 1e-12
        coeff = fit.coefficients[((2,), (2,))]
        assert coeff == pytest.approx(1.0, abs=1e-10)
        assert fit.homogeneity_defect < 1e-8

    def test_subleading_term_decays_like_sqrt_t(self):
        f = lambda x, z: float(np.abs(z[0]) ** 4 + np.abs(z[0]) ** 6)
        fit = homogeneous_model(f, deltas=[0.25], t_grid=[1, 0.25, 0.0625])
        # each 4x reduction of t halves the residual (t^(1/2) scaling of the
        # subleading term)
        ratios = fit.residuals[1:] / fit.residuals[:-1]
        assert np.allclose(ratios, 0.5, atol=0.05)
        # the fitted leading coefficient approaches 1 at the same rate
        deep = homogeneous_model(f, deltas=[0.25], t_grid=[1, 1e-2, 1e-4])
        assert deep.coefficients[((2,), (2,))] == pytest.approx(1.0, abs=0.01)

    def test_zero_function(self):
        fit = homogeneous_model(lambda x, z: 0.0, deltas=[0.25],
                                t_grid=[1, 0.1, 0.01])
        assert np.all(fit.residuals < 1e-14)
        assert all(abs(v) < 1e-12 for v in fit.coefficients.values())

    def test_no_convergence(self):
        # |z|^2 has weighted degree 1/2 under delta = 1/4: the scaled values
        # blow up like t^{-1/2} and no weighted-degree-one fit can catch up
        with pytest.raises(NoConvergence):
            homogeneous_model(lambda x, z: float(np.abs(z[0]) ** 2),
                              deltas=[0.25], t_grid=[1, 0.1, 0.01])

    def test_bad_deltas(self):
        with pytest.raises(SpecValidationError):
            homogeneous_model(lambda x, z: 0.0, deltas=[0.5], t_grid=[1, 0.1])


class TestFrankelScaling:
    def test_identity_at_time_zero(self, ellipsoid_m2):
        s = SiegelDomain(ellipsoid_m2.poly)
        seq = frankel_scaling(s, times=[0.0])
        assert np.allclose(seq.maps[0], 1.0)
        assert local_hausdorff_distance(seq.domains[0], s, radius=1.0,
                                        n_dirs=32) == 0.0

    def test_siegel_scale_invariance(self, ellipsoid_m2):
        s = SiegelDomain(ellipsoid_m2.poly)
        seq = frankel_scaling(s, times=[1.0, 2.5])
        for dom in seq.domains:
            assert local_hausdorff_distance(dom, s, radius=1.0, n_dirs=48) < 1e-10

    def test_mismatched_deltas_break_invariance(self, ellipsoid_m2):
        s = SiegelDomain(ellipsoid_m2.poly)
        seq = frankel_scaling(s, times=[1.0], deltas=[0.3])
        assert local_hausdorff_distance(seq.domains[0], s, radius=1.0,
                                        n_dirs=48) > 1e-3

    def test_ellipsoid_rescaling_converges(self, ellipsoid_m2):
        s = SiegelDomain(ellipsoid_m2.poly)
        seq = frankel_scaling(ellipsoid_m2, times=[1, 2, 3],
                              base_point=c(1, 0))
        anchor = c(0.5j, 0)
        hs = [local_hausdorff_distance(d, s, radius=1.0, n_dirs=48,
                                       anchor_a=anchor, anchor_b=anchor)
              for d in seq.domains]
        assert np.all(np.diff(hs) < 0)
        assert hs[-1] < 0.01

    def test_requires_admissible_base_point(self, ellipsoid_m2):
        with pytest.raises(SpecValidationError):
            frankel_scaling(ellipsoid_m2, times=[1.0])
        with pytest.raises(SpecValidationError):
            frankel_scaling(ellipsoid_m2, times=[1.0], base_point=c(0.5, 0))


class TestLocalHausdorff:
    def test_equal_sets(self, ball2):
        assert local_hausdorff_distance(ball2, ball2, radius=2.0, n_dirs=48) < 1e-12

    def test_nested_balls(self):
        A = ball_domain(2, radius=1.0)
        B = ball_domain(2, radius=1.1)
        val = local_hausdorff_distance(A, B, radius=2.0, n_dirs=48)
        assert val == pytest.approx(0.1, abs=1e-6)

    def test_translates(self):
        A = ball_domain(2, radius=1.0)
        B = ball_domain(2, radius=1.0, center=[0.05, 0])
        val = local_hausdorff_distance(A, B, radius=2.0, n_dirs=48)
        assert val <= 0.05 + 1e-9

    def test_empty_intersection(self):
        far = DomainOracle(lambda z: np.sum(np.abs(z - 10.0) ** 2, axis=-1) - 1.0,
                           lambda z: 2.0 * (z - 10.0), anchor=[10.0, 10.0],
                           label="far")
        near = ball_domain(2)
        with pytest.raises(EmptyIntersection):
            local_hausdorff_distance(far, near, radius=2.0, n_dirs=16)
