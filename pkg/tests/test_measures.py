import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bcrb import measures as M
from bcrb.errors import AbsoluteContinuityError, DomainError, IntegrationDomainError

HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)


class TestBoxAndQuadrature:
    def test_rejects_degenerate_box(self):
        with pytest.raises(DomainError):
            M.Box.interval(1.0, 1.0)

    def test_breaks_outside_box_are_dropped(self):
        b = M.Box.interval(0.0, 1.0, breaks=(-1.0, 0.5, 2.0))
        assert b.breaks == ((0.5,),)

    def test_min_nodes_guard(self):
        with pytest.raises(DomainError):
            M.QuadratureSpec(4)

    def test_node_budget_guard(self):
        box = M.product_box(*[M.Box.interval(0, 1)] * 3)
        with pytest.raises(DomainError):
            M.QuadratureSpec(256).rule(box)

    def test_default_nodes(self):
        assert M.default_nodes(1) == 257
        assert M.default_nodes(2) == 129

    @pytest.mark.parametrize("scheme", ["gauss-legendre", "trapezoid"])
    def test_integrates_polynomial(self, scheme):
        pts, w = M.QuadratureSpec(513, scheme).rule(M.Box.interval(0.0, 2.0, breaks=(0.7,)))
        np.testing.assert_allclose(w @ pts[:, 0] ** 2, 8 / 3, rtol=1e-5)

    def test_2d_rule_shape(self):
        box = M.product_box(M.Box.interval(0, 1), M.Box.interval(-1, 1))
        pts, w = M.QuadratureSpec(16).rule(box)
        assert pts.shape == (256, 2)
        np.testing.assert_allclose(w.sum(), 2.0, rtol=1e-12)


class TestConstructors:
    @pytest.mark.parametrize("d", [
        M.standard_gaussian(), M.gaussian(2.0, 3.0), M.laplace(1.0), M.laplace(0.5, 1.0),
        M.uniform(0, 1), M.exponential(2.0), M.quartic(), M.standard_gaussian(2),
        M.product(M.laplace(1.0), M.uniform(-1, 1)),
    ], ids=lambda d: d.name)
    def test_normalized(self, d):
        assert abs(M.total_mass(d) - 1) < 1e-6

    def test_hard_faces_give_minus_inf(self):
        d = M.uniform(0, 1)
        assert np.isneginf(d.log_density(np.array([[-0.1], [1.1]]))).all()

    def test_from_potential_matches_closed_form(self):
        d = M.from_potential(lambda x: 0.5 * x[..., 0] ** 2, M.Box.interval(-8, 8))
        np.testing.assert_allclose(d.density(np.array([[0.3]])), M.standard_gaussian().density(np.array([[0.3]])),
                                   rtol=1e-10)

    def test_fd_score_matches_analytic(self):
        d = M.from_potential(lambda x: x[..., 0] ** 4, M.Box.interval(-3.5, 3.5))
        x = np.array([[-1.2], [0.4], [2.0]])
        np.testing.assert_allclose(d.score_at(x)[:, 0], -4 * x[:, 0] ** 3, rtol=1e-6)


class TestVariance:
    def test_standard_gaussian(self):
        assert abs(M.variance(M.standard_gaussian()) - 1.0) < 1e-6

    def test_uniform(self):
        assert abs(M.variance(M.uniform(0, 1)) - 1 / 12) < 1e-6

    def test_trace_convention_3d(self):
        assert abs(M.variance(M.standard_gaussian(3), M.QuadratureSpec(48)) - 3.0) < 1e-6

    def test_equals_covariance_trace(self):
        d = M.product(M.laplace(1.0), M.gaussian(1.0, 2.0))
        q = M.QuadratureSpec(96)
        np.testing.assert_allclose(M.variance(d, q), np.trace(M.covariance(d, q)), rtol=1e-10)

    def test_infimum_attained_at_barycenter(self):
        d = M.exponential(1.0)
        c = M.barycenter(d)
        v = M.variance(d)
        for eps in (-0.1, 0.05, 0.2):
            assert M.second_moment_about(d, c + eps, None) > v

    def test_truncated_box_raises(self):
        q = M.QuadratureSpec(box=M.Box.interval(-1, 1))
        with pytest.raises(IntegrationDomainError):
            M.variance(M.standard_gaussian(), q)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-50, 50))
    def test_translation_invariance(self, c):
        d = M.laplace(0.7)
        assert abs(M.variance(M.shifted(d, c)) - M.variance(d)) < 1e-8


class TestFisherJ:
    def test_gaussian(self):
        assert abs(M.fisher_information_J(M.gaussian(0, 2.0)) - 0.5) < 1e-4

    def test_uniform_is_infinite(self):
        assert M.fisher_information_J(M.uniform(0, 1)) == math.inf

    def test_laplace(self):
        assert abs(M.fisher_information_J(M.laplace(1.0)) - 1.0) < 1e-3

    def test_quartic_against_gamma_closed_form(self):
        # E[16 x^6] under exp(-x^4)/Z is 16 Gamma(7/4) / Gamma(1/4)
        expected = 16 * math.gamma(1.75) / math.gamma(0.25)
        np.testing.assert_allclose(M.fisher_information_J(M.quartic()), expected, rtol=1e-8)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.2, 5.0))
    def test_scaling(self, s):
        d = M.quartic()
        np.testing.assert_allclose(M.fisher_information_J(M.scaled(d, s)),
                                   M.fisher_information_J(d) / s ** 2, rtol=1e-4)


class TestEntropy:
    def test_gaussian(self):
        assert abs(M.differential_entropy(M.standard_gaussian()) - HALF_LOG_2PIE) < 1e-5

    def test_uniform(self):
        assert abs(M.differential_entropy(M.uniform(0, 1))) < 1e-6

    def test_product_additivity(self):
        assert abs(M.differential_entropy(M.standard_gaussian(2)) - 2 * HALF_LOG_2PIE) < 1e-4

    def test_laplace_closed_form(self):
        assert abs(M.differential_entropy(M.laplace(1.0)) - (1 + math.log(2))) < 1e-8


class TestRelativeEntropy:
    def test_identity(self):
        g = M.standard_gaussian()
        assert abs(M.relative_entropy(g, g)) < 1e-8

    def test_shift(self):
        assert abs(M.relative_entropy(M.gaussian(1.0, 1.0), M.standard_gaussian()) - 0.5) < 1e-5

    def test_scale(self):
        expected = 0.5 * (0.5 - 1 - math.log(0.5))
        assert abs(M.relative_entropy(M.gaussian(0, 0.5), M.standard_gaussian()) - expected) < 1e-5

    def test_absolute_continuity_violation(self):
        with pytest.raises(AbsoluteContinuityError):
            M.relative_entropy(M.standard_gaussian(), M.uniform(0, 1))

    @pytest.mark.parametrize("nu,mu", [
        (M.laplace(1.0), M.standard_gaussian()),
        (M.uniform(-1, 2), M.gaussian(0, 3.0)),
        (M.quartic(), M.laplace(0.5)),
        (M.exponential(1.0), M.standard_gaussian()),
    ])
    def test_nonnegative(self, nu, mu):
        assert M.relative_entropy(nu, mu) >= -1e-8

    def test_against_adaptive_quadrature(self):
        nu, mu = M.laplace(1.0), M.standard_gaussian()
        f = lambda x: 0.5 * math.exp(-abs(x)) * (-abs(x) + math.log(0.5) + 0.5 * x * x + 0.5 * math.log(2 * math.pi))
        ref = integrate.quad(f, -40, 0)[0] + integrate.quad(f, 0, 40)[0]
        np.testing.assert_allclose(M.relative_entropy(nu, mu), ref, atol=1e-7)  # tail truncation at 24 scale lengths


class TestRelativeFisher:
    def test_identity(self):
        g = M.standard_gaussian()
        assert abs(M.relative_fisher_information(g, g)) < 1e-8

    def test_shift(self):
        assert abs(M.relative_fisher_information(M.gaussian(1.0, 1.0), M.standard_gaussian()) - 1.0) < 1e-4

    def test_hard_face_not_shared(self):
        assert M.relative_fisher_information(M.uniform(0, 1), M.standard_gaussian()) == math.inf

    def test_shared_hard_face_is_finite(self):
        val = M.relative_fisher_information(M.exponential(2.0), M.exponential(1.0))
        assert abs(val - 1.0) < 1e-6


class TestLSI:
    def test_translated_gaussian_saturates(self):
        res = M.lsi_check(M.ReferenceMeasure.gaussian_standard(), M.gaussian(1.0, 1.0))
        assert abs(res.lhs - 0.5) < 1e-6 and abs(res.rhs - 0.5) < 1e-6 and res.satisfied

    def test_identity(self):
        res = M.lsi_check(M.ReferenceMeasure.gaussian_standard(), M.standard_gaussian())
        assert abs(res.lhs) < 1e-10 and abs(res.rhs) < 1e-10 and res.satisfied

    def test_narrower_gaussian(self):
        res = M.lsi_check(M.ReferenceMeasure.gaussian_standard(), M.gaussian(0, 0.5))
        np.testing.assert_allclose([res.lhs, res.rhs], [0.0966, 0.25], atol=1e-4)
        assert res.satisfied

    @pytest.mark.parametrize("K", [0.5, 1.0, 4.0])
    @pytest.mark.parametrize("nu", [M.laplace(1.0), M.quartic(), M.gaussian(0.3, 0.7)],
                             ids=lambda d: d.name)
    def test_bakry_emery_pairs(self, K, nu):
        mu = M.ReferenceMeasure.bakry_emery(M.gaussian(0.0, 1 / K), K)
        assert M.lsi_check(mu, nu).satisfied


class TestReferenceMeasure:
    def test_gaussian_standard_constant(self):
        with pytest.raises(DomainError):
            M.ReferenceMeasure(M.standard_gaussian(), 2.0, "gaussian-standard", 1.0)

    def test_bakry_emery_constant(self):
        mu = M.ReferenceMeasure.bakry_emery(M.gaussian(0, 0.25), 4.0)
        assert mu.lsi_constant * mu.curvature == 1.0
        with pytest.raises(DomainError):
            M.ReferenceMeasure(mu.density, 1.0, "bakry-emery", 4.0)

    def test_unknown_provenance(self):
        with pytest.raises(DomainError):
            M.ReferenceMeasure(M.standard_gaussian(), 1.0, "folklore")


class TestPriors:
    @pytest.mark.parametrize("prior", [
        M.gaussian_prior(2.0, 3.0), M.laplace_prior(), M.uniform_prior(), M.exponential_prior(),
        M.quartic_prior(),
    ], ids=lambda p: p.family)
    def test_check_prior(self, prior):
        chk = M.check_prior(prior)
        assert chk.ok, chk
        assert chk.kp <= 1 + 1e-9

    def test_gaussian_brascamp_lieb_equality(self):
        p = M.gaussian_prior(0.0, 2.5)
        assert abs(p.K * p.P - 1) < 1e-8

    def test_quartic_moments(self):
        p = M.quartic_prior()
        np.testing.assert_allclose(p.variance, math.gamma(0.75) / math.gamma(0.25), rtol=1e-8)

    def test_nonconvex_potential_flagged(self):
        d = M.from_potential(lambda x: (x[..., 0] ** 2 - 1) ** 2, M.Box.interval(-3, 3))
        prior = M.LogConcavePrior.from_density(d, 0.0)
        assert not M.check_prior(prior).convex

    def test_product_prior_dimension(self):
        p = M.iid_product_prior(M.laplace_prior(), 2, M.QuadratureSpec(64))
        assert p.dim == 2
        np.testing.assert_allclose(p.variance, 4.0, rtol=1e-6)
