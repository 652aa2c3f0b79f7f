import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrdesign import CovarianceKernel, Design, RegressionBasis
from corrdesign.designs import arcsine_design, two_point_design, uniform_design, DensityDesign
from corrdesign.errors import ConfigError
from corrdesign.moments import cov_matrix
from corrdesign.optimality import (CERTIFIED, NECESSARY_CONSISTENT, REFUTED, Criterion, b_fn, b_fn_dcrit,
                                   c_optimality_check, directional_derivative, g_fn, identity_check,
                                   necessary_condition_check, orthogonality_residual, phi_fn, psi_fn, r_fn,
                                   separating_c, universal_optimality_check)

K, RB = CovarianceKernel, RegressionBasis
X = np.linspace(-1, 1, 41)


class TestCriterion:
    def test_values(self):
        D = np.diag([2.0, 0.5])
        assert Criterion.D().value(D) == pytest.approx(0.0)
        assert Criterion.C([1.0, 1.0]).value(D) == pytest.approx(2.5)

    def test_derivatives(self):
        D = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert np.allclose(Criterion.D().derivative(D), np.linalg.inv(D))
        assert np.allclose(Criterion.C([1.0, 2.0]).derivative(D), [[1, 2], [2, 4]])

    def test_config(self):
        c = Criterion.from_config({"kind": "c", "c": [1, 0, 1]})
        assert c.kind == "C" and Criterion.from_config(c.to_config()) == c
        with pytest.raises(ConfigError):
            Criterion("A")
        with pytest.raises(ConfigError):
            Criterion("C")


class TestSensitivityFunctions:
    def test_phi_at_centre(self, quad_basis, three_point, tri1):
        assert phi_fn(0.0, three_point, quad_basis, tri1) == pytest.approx(3.0, abs=1e-12)

    @pytest.mark.parametrize("kern", [K.exponential(1.0), K.triangular(0.5), K.spherical(1.5)])
    def test_phi_location_is_one(self, kern):
        d = Design([-0.7, 0.1, 0.8], [0.2, 0.5, 0.3])
        assert np.allclose(phi_fn(X, d, RB.monomial(1), kern), 1.0, atol=1e-13)

    @pytest.mark.parametrize("design", [Design([-1.0, 0.0, 1.0]), Design([-1.0, -0.3, 0.4, 1.0], [1, 2, 3, 4]),
                                        arcsine_design()])
    def test_b_forms_agree(self, quad_basis, design):
        kern = K.exponential(0.8)
        assert np.allclose(b_fn(X, design, quad_basis, kern), b_fn_dcrit(X, design, quad_basis, kern), atol=1e-10)

    def test_g_three_point(self, quad_basis, three_point, tri1):
        g = g_fn(X, three_point, quad_basis, tri1)
        assert np.allclose(g[:, :2], 0.0, atol=1e-14)
        assert np.allclose(g[:, 2], (np.abs(X) - X**2) / 3, atol=1e-14)

    def test_g_spherical_two_point(self):
        # f(x) = x, two atoms at +-1, R = 2: g(x) = k(x) - x B/M
        kern = K.spherical(2.0)
        d = two_point_design()
        rho = lambda t: np.where(t < 2, 1 - 1.5 * t / 2 + 0.5 * (t / 2) ** 3, 0.0)
        basis = RB.monomial(1, powers=(1,))
        k = 0.5 * (rho(np.abs(X - 1)) - rho(np.abs(X + 1)))
        assert np.allclose(g_fn(X, d, basis, kern)[:, 0], k - X * 0.5 * (1 - rho(2.0)), atol=1e-14)

    def test_r_forms(self, quad_basis, three_point, tri1):
        ax = np.abs(X)
        assert np.allclose(r_fn(X, three_point, quad_basis, tri1, Criterion.C([1, 0, 1])),
                           0.75 * ax**3 * (1 - ax), atol=1e-13)
        assert np.allclose(r_fn(X, three_point, quad_basis, tri1, Criterion.C([0, 1, 0])), 0.0, atol=1e-13)
        assert np.allclose(r_fn(X, three_point, quad_basis, tri1, Criterion.C([1, 0, 0])),
                           -3 * ax * (1 - ax) * (1 - X**2), atol=1e-13)

    @pytest.mark.parametrize("crit", [Criterion.D(), Criterion.C([1, 0, 1]), Criterion.C([0.3, -1, 2])])
    def test_r_is_b_minus_phi(self, quad_basis, crit):
        d = Design([-1.0, -0.2, 0.5, 1.0], [0.3, 0.2, 0.2, 0.3])
        kern = K.gaussian(1.0)
        r = r_fn(X, d, quad_basis, kern, crit)
        assert np.allclose(r, b_fn(X, d, quad_basis, kern, crit) - phi_fn(X, d, quad_basis, kern, crit), atol=1e-12)

    def test_psi_scalar(self, quad_basis, three_point, tri1):
        assert psi_fn(0.0, three_point, quad_basis, tri1) == pytest.approx(1.0)


class TestIdentities:
    @pytest.mark.parametrize("design", [Design([-1.0, 0.0, 1.0]), Design([-0.9, -0.1, 0.3, 1.0], [4, 1, 2, 3]),
                                        arcsine_design(), uniform_design()])
    @pytest.mark.parametrize("kern", [K.exponential(1.0), K.triangular(0.4), K.smoothed_log_kernel(0.1)])
    def test_orthogonality(self, quad_basis, design, kern):
        assert orthogonality_residual(cov_matrix(design, quad_basis, kern)) <= 1e-10

    def test_integral_values(self, quad_basis, three_point, tri1):
        res = identity_check(three_point, quad_basis, tri1)
        assert res.value == pytest.approx(3.0) and res.phi_vs_b < 1e-12 and res.phi_vs_trace < 1e-12
        res = identity_check(three_point, quad_basis, tri1, Criterion.C([1, 0, 1]))
        assert res.value == pytest.approx(0.5) and res.phi_vs_b < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_d_value_is_m(self, m):
        res = identity_check(arcsine_design(), RB.monomial(m), K.exponential(1.5))
        assert res.value == pytest.approx(m) and res.phi_vs_b < 1e-10 * m and res.phi_vs_trace < 1e-10 * m


def _grid_weights(w0, w1, a):
    return (1 - a) * w0 + a * w1


class TestDirectionalDerivative:
    @given(st.integers(0, 10_000), st.sampled_from(["D", "C"]))
    def test_matches_finite_difference(self, seed, kind):
        rng = np.random.default_rng(seed)
        grid = np.linspace(-1, 1, 9)
        w0 = rng.uniform(0.2, 1.0, grid.size)
        w1 = rng.uniform(0.0, 1.0, grid.size)
        w0, w1 = w0 / w0.sum(), w1 / w1.sum()
        basis, kern = RB.monomial(3), K.exponential(1.0)
        crit = Criterion.D() if kind == "D" else Criterion.C(rng.normal(size=3))
        val = lambda a: crit.value(cov_matrix(Design(grid, _grid_weights(w0, w1, a)), basis, kern).D)
        h = 1e-5
        fd = (val(h) - val(-h)) / (2 * h)
        dd = directional_derivative(Design(grid, w0), Design(grid, w1), basis, kern, crit)
        assert dd == pytest.approx(fd, rel=1e-5, abs=1e-8 * max(1.0, abs(val(0.0))))

    def test_towards_self_is_zero(self, quad_basis, three_point, tri1):
        assert abs(directional_derivative(three_point, three_point, quad_basis, tri1)) < 1e-12

    def test_density_direction(self, quad_basis):
        kern = K.exponential(1.0)
        nu = uniform_design()
        assert isinstance(nu, DensityDesign)
        dd = directional_derivative(arcsine_design(), nu, quad_basis, kern)
        assert np.isfinite(dd)


class TestSeparatingC:
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_sign(self, a, b):
        a, b = np.array(a), np.array(b)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if min(na, nb) < 1e-3 or np.linalg.norm(np.cross(a / na, b / nb)) < 1e-3:
            return
        c = separating_c(a, b)
        assert (c @ a) * (b @ c) < 0


class TestChecks:
    def test_universal_when_k_vanishes(self):
        kern = K.periodic_cos_mix((0.6, 0.4), (1, 3), (2, 1))
        rep = universal_optimality_check(uniform_design(0.0, 1.0), RB.cosine([2, 5]), kern)
        assert rep.status == CERTIFIED

    def test_necessary_passes_location_constant(self):
        rep = necessary_condition_check(Design([0.0]), RB.monomial(1), K.constant(1.0))
        assert rep.passed and rep.status == "PASS"

    def test_necessary_fails_three_point_triangular(self, quad_basis, three_point, tri1):
        rep = necessary_condition_check(three_point, quad_basis, tri1)
        assert not rep.passed and rep.max_violation > 0.1

    def test_necessary_log_arcsine(self, quad_basis):
        rep = necessary_condition_check(arcsine_design(), quad_basis, K.logarithmic())
        assert rep.passed and rep.max_violation < 1e-10

    def test_c_check(self, quad_basis, three_point, tri1):
        assert c_optimality_check(three_point, quad_basis, tri1, [1, 0, 1]).passed
        rep = c_optimality_check(three_point, quad_basis, tri1, [1, 0, 0])
        assert not rep.passed
        assert rep.verdict["r_nonnegative"]["value"] == pytest.approx(-0.605, abs=2e-3)

    @pytest.mark.parametrize("design,basis,kern,status", [
        (arcsine_design(), RB.monomial(3), K.logarithmic(), CERTIFIED),
        (arcsine_design(), RB.chebyshev(5), K.logarithmic(), CERTIFIED),
        (two_point_design(), RB.monomial(2), K.triangular(0.25), CERTIFIED),
        (Design([-1.0, 0.0, 1.0]), RB.monomial(3), K.triangular(1.0), REFUTED),
        (arcsine_design(), RB.monomial(3), K.exponential(1.0), REFUTED),
    ])
    def test_universal(self, design, basis, kern, status):
        rep = universal_optimality_check(design, basis, kern)
        assert rep.status == status
        assert rep.passed == (status != REFUTED)

    def test_universal_cosine_periodic(self):
        kern = K.periodic_cos_mix((0.6, 0.4), (1, 3), (1, 2))
        rep = universal_optimality_check(uniform_design(0.0, 1.0), RB.cosine([1, 3, 4]), kern)
        assert rep.status == CERTIFIED and np.abs(rep.g).max() < 1e-10

    def test_necessary_consistent_verdict(self):
        # location model at 0 under K = (1 + x^2)(1 + y^2): g = x^2 >= 0, zero on the support
        t = np.linspace(-1, 1, 201)
        kern = K.tabulated(t, np.outer(1 + t**2, 1 + t**2))
        rep = universal_optimality_check(Design([0.0]), RB.monomial(1), kern)
        assert rep.status == NECESSARY_CONSISTENT and rep.passed
        assert np.allclose(rep.gamma, rep.grid**2, atol=1e-4)

    def test_report_serialization(self, quad_basis, three_point, tri1):
        rep = universal_optimality_check(three_point, quad_basis, tri1)
        js = rep.to_json()
        assert js["status"] == REFUTED and len(js["grid"]) == len(js["phi"])
        assert rep.to_csv().splitlines()[0] == "x,phi,b,psi,r"
