import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrdesign import CovarianceKernel, Design, RegressionBasis
from corrdesign.designs import arcsine_design, quantile_design, two_point_design, uniform_design
from corrdesign.errors import ConfigError, NearSingularError, NumericalError, SingularDiagonalError
from corrdesign.moments import (b_matrix, cov_matrix, exact_lse_cov, info_matrix, resolve_kernel, smoothing_width,
                                sym_inverse, wlse_misspec_cov)

K, RB = CovarianceKernel, RegressionBasis
SIX = [-1.0, -2 / 3, -1 / 3, 1 / 3, 2 / 3, 1.0]


class TestInfoMatrix:
    def test_quadratic_three_point(self, quad_basis, three_point):
        M = info_matrix(three_point, quad_basis)
        assert np.allclose(M, [[1, 0, 2 / 3], [0, 2 / 3, 0], [2 / 3, 0, 2 / 3]], atol=1e-15)

    def test_location(self):
        assert info_matrix(Design([0.1, 0.4], [0.3, 0.7]), RB.monomial(1)).tolist() == [[1.0]]

    def test_linear_two_point(self):
        assert np.allclose(info_matrix(two_point_design(), RB.monomial(2)), np.eye(2))

    def test_density_design(self):
        M = info_matrix(arcsine_design(), RB.monomial(3))
        assert np.allclose(M, [[1, 0, 0.5], [0, 0.5, 0], [0.5, 0, 3 / 8]], atol=1e-14)


class TestCovMatrix:
    def test_quadratic_triangular(self, quad_basis, three_point, tri1):
        ms = cov_matrix(three_point, quad_basis, tri1)
        assert np.allclose(ms.D, [[1, 0, -1], [0, 0.5, 0], [-1, 0, 1.5]], atol=1e-12)
        assert np.allclose(ms.Lambda, np.eye(3) / 3, atol=1e-12)

    def test_location_constant_kernel(self):
        ms = cov_matrix(Design([-0.5, 0.2, 0.9], [0.2, 0.3, 0.5]), RB.monomial(1), K.constant(1.0))
        assert ms.D == pytest.approx(np.array([[1.0]]))
        assert ms.B == pytest.approx(np.array([[1.0]]))

    @pytest.mark.parametrize("lam", [0.1, 0.25, 0.5])
    def test_linear_triangular_two_point(self, lam):
        ms = cov_matrix(two_point_design(), RB.monomial(2), K.triangular(lam))
        # rho(0) = 1, rho(2) = 1 - 2 lam
        assert np.allclose(ms.B, np.diag([1 - lam, lam]), atol=1e-15)
        assert np.allclose(ms.D, ms.B)
        assert np.allclose(ms.Lambda, np.diag([1 - lam, lam]))

    def test_lambda_identity(self):
        rng = np.random.default_rng(0)
        d = Design(rng.uniform(-1, 1, 12), rng.random(12))
        ms = cov_matrix(d, RB.monomial(4), K.exponential(0.8))
        scale = np.abs(ms.B).max()
        assert np.abs(ms.B - ms.Lambda @ ms.M).max() <= 1e-10 * scale
        assert np.abs(ms.B - ms.M @ ms.Lambda.T).max() <= 1e-10 * scale
        assert np.linalg.eigvalsh(ms.D)[0] >= -1e-10 * np.trace(ms.D)

    def test_singular_M(self):
        with pytest.raises(NearSingularError) as err:
            cov_matrix(Design([-1.0, 1.0]), RB.monomial(3), K.exponential(1.0))
        assert "condition number" in str(err.value)

    def test_non_psd_kernel(self):
        kern = K.tabulated([-1.0, 1.0], [[-1.0, -1.0], [-1.0, -1.0]])
        with pytest.raises(NumericalError):
            cov_matrix(Design([-1.0, 0.0, 1.0]), RB.monomial(1), kern)

    def test_kernel_blind_to_basis(self):
        # no spectral mass at these frequencies: D = 0 up to round-off, not an error
        ms = cov_matrix(uniform_design(0.0, 1.0), RB.cosine([2, 5]), K.periodic_cos_mix((0.6, 0.4), (1, 3), (2, 1)))
        assert np.abs(ms.D).max() < 1e-12

    @given(st.floats(0.1, 10.0))
    def test_scale_equivariance(self, s):
        d = Design([-1.0, -0.2, 0.4, 1.0], [0.1, 0.4, 0.3, 0.2])
        ms = cov_matrix(d, RB.monomial(2), K.gaussian(1.5))
        ms_s = cov_matrix(d, RB.monomial(2), K.gaussian(1.5).with_scale(s))
        assert np.allclose(ms_s.B, s * ms.B, rtol=1e-13, atol=0)
        assert np.allclose(ms_s.D, s * ms.D, rtol=1e-13, atol=0)


class TestBMatrix:
    def test_transpose_identity(self):
        rng = np.random.default_rng(4)
        basis, kern = RB.monomial(3), K.spherical(1.2)
        for _ in range(10):
            xi = Design(rng.uniform(-1, 1, 7), rng.random(7))
            nu = Design(rng.uniform(-1, 1, 5), rng.random(5))
            assert np.allclose(b_matrix(xi, nu, basis, kern), b_matrix(nu, xi, basis, kern).T, atol=1e-12, rtol=0)

    def test_matches_cov_matrix(self, quad_basis, three_point, tri1):
        assert np.allclose(b_matrix(three_point, three_point, quad_basis, tri1),
                           cov_matrix(three_point, quad_basis, tri1).B)

    def test_density_against_fine_discretization(self):
        basis, kern = RB.monomial(2), K.exponential(1.0)
        dd = arcsine_design()
        B = b_matrix(dd, dd, basis, kern)
        Bq = cov_matrix(quantile_design(dd, 4001), basis, kern).B
        assert np.allclose(B, Bq, atol=2e-3)


class TestSingularPolicies:
    def test_error_policy(self):
        with pytest.raises(SingularDiagonalError):
            cov_matrix(Design([-1.0, 0.0, 1.0]), RB.monomial(2), K.logarithmic(), policy="error")

    def test_unknown_policy(self):
        with pytest.raises(ConfigError):
            cov_matrix(Design([-1.0, 0.0, 1.0]), RB.monomial(2), K.logarithmic(), policy="bogus")

    def test_smooth_policy_width(self):
        d = Design([-1.0, 0.0, 0.5, 1.0])
        assert smoothing_width(d.support) == 0.25
        kern = resolve_kernel(K.logarithmic(), "smooth", d.support)
        assert kern.params["delta"] == 0.25
        ms = cov_matrix(d, RB.monomial(2), K.logarithmic())
        assert np.all(np.isfinite(ms.D))

    def test_cell_policy_diagonal(self):
        d = Design([-1.0, 0.0, 1.0])
        ms = cov_matrix(d, RB.monomial(1), K.logarithmic(), policy="cell")
        # cell widths 1, 1, 1: mean of -ln (u - v)^2 over a unit cell is 3
        off = -np.log(1.0) * 4 / 9 - np.log(4.0) * 2 / 9
        assert ms.B[0, 0] == pytest.approx(3.0 / 3 + off)

    def test_regular_kernel_ignores_policy(self, quad_basis, three_point, tri1):
        for policy in ("smooth", "cell", "error"):
            assert np.allclose(cov_matrix(three_point, quad_basis, tri1, policy=policy).D,
                               [[1, 0, -1], [0, 0.5, 0], [-1, 0, 1.5]])


class TestExactCovariances:
    def test_ols_variance(self):
        v = exact_lse_cov(SIX, RB.monomial(1), K.gaussian(2.0))
        assert v[0, 0] == pytest.approx(0.433, abs=1e-3)

    def test_wlse_variances(self):
        mis = wlse_misspec_cov(SIX, RB.monomial(1), K.gaussian(1.0), K.gaussian(2.0))
        ok = wlse_misspec_cov(SIX, RB.monomial(1), K.gaussian(2.0), K.gaussian(2.0))
        assert mis[0, 0] == pytest.approx(0.528, abs=1e-3)
        assert ok[0, 0] == pytest.approx(0.382, abs=1e-3)
        assert ok[0, 0] <= exact_lse_cov(SIX, RB.monomial(1), K.gaussian(2.0))[0, 0] <= mis[0, 0]

    @pytest.mark.parametrize("kern", [K.exponential(0.7), K.spherical(1.5), K.brownian_min()])
    def test_equals_equal_weight_design(self, kern):
        x = np.array([0.05, 0.2, 0.35, 0.6, 0.8, 1.0]) if kern.family.value == "brownian_min" else np.array(SIX)
        basis = RB.monomial(3, domain=(0.0, 1.0)) if kern.family.value == "brownian_min" else RB.monomial(3)
        V = exact_lse_cov(x, basis, kern)
        D = cov_matrix(Design(x), basis, kern).D
        assert np.allclose(V, D, rtol=1e-12, atol=1e-14 * np.abs(D).max())

    def test_single_point(self):
        assert exact_lse_cov([0.3], RB.monomial(1), K.exponential(1.0))[0, 0] == pytest.approx(1.0)

    def test_rank_deficient(self):
        with pytest.raises(NearSingularError):
            exact_lse_cov([0.0, 0.5], RB.monomial(3), K.exponential(1.0))

    def test_singular_kernel_refused(self):
        with pytest.raises(ConfigError):
            exact_lse_cov(SIX, RB.monomial(1), K.logarithmic())

    def test_sandwich_collapses(self):
        x = np.array(SIX)
        X = RB.monomial(2)(x)
        S = K.exponential(1.0)(x[:, None], x[None, :])
        expected = np.linalg.inv(X.T @ np.linalg.solve(S, X))
        assert np.allclose(wlse_misspec_cov(x, RB.monomial(2), K.exponential(1.0), K.exponential(1.0)), expected)


def test_sym_inverse_condition():
    with pytest.raises(NearSingularError):
        sym_inverse(np.diag([1.0, 1e-13]))
    inv, cond = sym_inverse(np.diag([2.0, 0.5]))
    assert np.allclose(inv, np.diag([0.5, 2.0])) and cond == pytest.approx(4.0)
