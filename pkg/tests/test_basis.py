import math

import numpy as np
import pytest
from scipy import integrate

from corrdesign.basis import RegressionBasis, change_of_basis, eval_basis, gegenbauer
from corrdesign.errors import ConfigError, DomainError, IncompatibleBasisError

RB = RegressionBasis


class TestEval:
    def test_monomial(self):
        assert eval_basis(RB.monomial(3), -1.0).tolist() == [1.0, -1.0, 1.0]

    def test_cosine(self):
        assert np.allclose(eval_basis(RB.cosine([1, 2]), 0.0), [1.0, math.sqrt(2.0)])

    def test_chebyshev(self):
        assert np.allclose(eval_basis(RB.chebyshev(3), 0.5), [1.0, 0.5, -0.5])

    def test_monomial_powers(self):
        assert np.allclose(RB.monomial(2, powers=(1, 3))(0.5), [0.5, 0.125])

    def test_vector_shape(self):
        assert RB.monomial(4)(np.linspace(-1, 1, 7)).shape == (7, 4)
        assert RB.monomial(4)(0.2).shape == (4,)

    def test_gegenbauer_matches_scipy(self):
        from scipy.special import eval_gegenbauer
        x = np.linspace(-1, 1, 9)
        F = RB.gegenbauer(4, 0.25)(x)
        for n in range(4):
            assert np.allclose(F[:, n], eval_gegenbauer(n, 0.25, x), atol=1e-14)

    def test_tabulated_interpolates(self):
        b = RB.tabulated([0.0, 1.0, 2.0], [[1.0, 0.0], [1.0, 1.0], [1.0, 4.0]])
        assert np.allclose(b(1.5), [1.0, 2.5])

    @pytest.mark.parametrize("x", [-1.5, 1.01, np.nan])
    def test_domain_error(self, x):
        with pytest.raises(DomainError):
            RB.monomial(2)(x)

    def test_cosine_domain(self):
        with pytest.raises(DomainError):
            RB.cosine([1, 2])(-0.5)


class TestInvariants:
    @pytest.mark.parametrize("basis", [RB.monomial(4), RB.chebyshev(5), RB.gegenbauer(3, 0.25), RB.cosine([1, 3, 4])])
    def test_nonvanishing_and_independent(self, basis):
        a, b = basis.domain
        x, w = np.polynomial.legendre.leggauss(64)
        x = a + (b - a) * (x + 1) / 2
        F = basis(x)
        assert np.all(np.linalg.norm(F, axis=1) > 0)
        G = (w[:, None] * F).T @ F
        assert np.linalg.eigvalsh(G)[0] > 1e-10

    def test_monomial_without_constant_vanishes_at_zero(self):
        b = RB.monomial(1, powers=(1,))
        assert not b.admissible(0.0)[0] and b.admissible(0.5)[0]

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_gegenbauer_orthogonality(self, alpha):
        lam = alpha / 2
        weight = lambda x: (1 - x * x) ** ((alpha - 1) / 2)
        for i in range(4):
            for j in range(i):
                val, _ = integrate.quad(lambda x: gegenbauer(3, lam, x)[i] * gegenbauer(3, lam, x)[j] * weight(x),
                                        -1, 1, epsabs=1e-12, limit=200)
                assert abs(val) < 1e-8

    @pytest.mark.parametrize("kwargs", [
        dict(family="monomial", m=0),
        dict(family="gegenbauer", m=2),
        dict(family="cosine", m=2, indices=(2, 2)),
        dict(family="monomial", m=2, domain=(1.0, 1.0)),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            RB(**kwargs)

    @pytest.mark.parametrize("basis", [RB.monomial(3), RB.chebyshev(2), RB.gegenbauer(3, 0.5), RB.cosine([2, 5]),
                                       RB.monomial(2, powers=(1, 2))])
    def test_config_roundtrip(self, basis):
        back = RB.from_config(basis.to_config())
        x = np.linspace(*basis.domain, 5)
        assert np.array_equal(back(x), basis(x))


class TestChangeOfBasis:
    def test_identity_for_linear(self):
        assert np.allclose(change_of_basis(RB.monomial(2), RB.chebyshev(2)), np.eye(2))

    def test_quadratic_row(self):
        L = change_of_basis(RB.monomial(3), RB.chebyshev(3))
        assert np.allclose(L[2], [0.5, 0.0, 0.5], atol=1e-14)

    def test_inverse(self):
        L = change_of_basis(RB.monomial(3), RB.chebyshev(3))
        Li = change_of_basis(RB.chebyshev(3), RB.monomial(3))
        assert np.allclose(L @ Li, np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("src,dst", [(RB.monomial(4), RB.gegenbauer(4, 0.3)), (RB.gegenbauer(3, 0.7), RB.chebyshev(3))])
    def test_reconstructs(self, src, dst):
        L = change_of_basis(src, dst)
        x = np.linspace(-1, 1, src.m + 1)
        assert np.allclose(src(x), dst(x) @ L.T, atol=1e-12)

    def test_incompatible(self):
        with pytest.raises(IncompatibleBasisError):
            change_of_basis(RB.monomial(2), RB.monomial(3))
        with pytest.raises(IncompatibleBasisError):
            change_of_basis(RB.monomial(2, powers=(0, 2)), RB.chebyshev(2))
        with pytest.raises(IncompatibleBasisError):
            change_of_basis(RB.cosine([1, 2]), RB.monomial(2))
