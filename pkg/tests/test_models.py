import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bcrb import measures as M
from bcrb import models as Mo
from bcrb.errors import DomainError


class TestFisherInformation:
    @pytest.mark.parametrize("theta", [-3.0, 0.0, 1.7])
    def test_gaussian_location(self, theta):
        assert abs(Mo.model_fisher_information(Mo.make_gaussian_location(1.0), [theta]) - 1.0) < 1e-5

    def test_five_repeats(self):
        m = Mo.make_gaussian_location(1.0, 1, 5)
        assert abs(Mo.model_fisher_information(m, [0.3], M.QuadratureSpec(25)) - 5.0) < 1e-4

    def test_bernoulli_half(self):
        assert abs(Mo.model_fisher_information(Mo.make_bernoulli_mean(), [0.5]) - 4.0) < 1e-8

    @pytest.mark.parametrize("theta", [0.1, 0.3, 0.9])
    def test_bernoulli_closed_form(self, theta):
        got = Mo.model_fisher_information(Mo.make_bernoulli_mean(), [theta])
        np.testing.assert_allclose(got, 1 / (theta * (1 - theta)), rtol=1e-10)

    def test_three_repeats(self):
        m = Mo.make_gaussian_location(1.0, 1, 3)
        assert abs(Mo.model_fisher_information(m, [0.0], M.QuadratureSpec(48)) - 3.0) < 1e-4

    def test_sequence_trace(self):
        m = Mo.make_gaussian_location(4.0, 2, 1)
        assert abs(Mo.model_fisher_information(m, [0.2, -0.4], M.QuadratureSpec(64)) - 0.5) < 1e-6

    def test_location_family_matches_noise_J(self):
        m = Mo.make_laplace_location(1.0)
        np.testing.assert_allclose(Mo.model_fisher_information(m, [0.4]),
                                   M.fisher_information_J(M.laplace(1.0)), rtol=1e-4)

    def test_bernoulli_repeat_additivity(self):
        one = Mo.model_fisher_information(Mo.make_bernoulli_mean(1), [0.3])
        four = Mo.model_fisher_information(Mo.make_bernoulli_mean(4), [0.3])
        np.testing.assert_allclose(four, 4 * one, rtol=1e-4)

    def test_constant_channel(self):
        assert Mo.model_fisher_information(Mo.make_constant_channel(), [1.0]) == pytest.approx(0.0, abs=1e-12)

    def test_finite_difference_fallback(self):
        base = Mo.make_gaussian_location(2.0)
        m = Mo.ParametricModel(1, base.obs_space, base.density, None, "fd-gaussian")
        np.testing.assert_allclose(Mo.model_fisher_information(m, [0.5]), 0.5, rtol=1e-5)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.25, 4.0))
    def test_reparameterization_scaling(self, s):
        m = Mo.make_gaussian_location(1.0)
        got = Mo.model_fisher_information(Mo.rescale_parameter(m, s), [0.3 * s])
        np.testing.assert_allclose(got, 1.0 / s ** 2, rtol=1e-6)


class TestAverageFisher:
    def test_constant_information(self):
        fa = Mo.average_fisher_information(Mo.make_gaussian_location(1.0), M.laplace_prior())
        assert abs(fa.J - 1.0) < 1e-4

    def test_noise_variance_four(self):
        fa = Mo.average_fisher_information(Mo.make_gaussian_location(4.0), M.gaussian_prior())
        assert abs(fa.J - 0.25) < 1e-4

    def test_bernoulli_uniform_interior(self):
        fa = Mo.average_fisher_information(Mo.make_bernoulli_mean(), M.uniform_prior(0.3, 0.7))
        oracle = integrate.quad(lambda t: 1 / (t * (1 - t)), 0.3, 0.7)[0] / 0.4
        np.testing.assert_allclose(fa.J, oracle, rtol=1e-8)
        np.testing.assert_allclose(oracle, 5 * math.log(7 / 3), rtol=1e-12)

    def test_divides_by_dimension(self):
        q = M.QuadratureSpec(32)
        fa = Mo.average_fisher_information(Mo.make_gaussian_location(1.0, 2),
                                           M.gaussian_prior(0, 1, 2, q), q)
        np.testing.assert_allclose([fa.J, fa.total], [1.0, 2.0], rtol=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            Mo.average_fisher_information(Mo.make_gaussian_location(1.0, 2), M.gaussian_prior())


class TestRegularity:
    def test_gaussian_passes(self):
        rep = Mo.regularity_check(Mo.make_gaussian_location(1.0), M.gaussian_prior())
        assert rep.passed and rep.max_norm < 1e-5

    def test_bernoulli_passes(self):
        assert Mo.regularity_check(Mo.make_bernoulli_mean(), M.uniform_prior(0.2, 0.8)).passed

    def test_half_gaussian_negative_control(self):
        rep = Mo.regularity_check(Mo.make_half_gaussian_location(), M.gaussian_prior())
        assert not rep.passed
        np.testing.assert_allclose(rep.max_norm, math.sqrt(2 / math.pi), rtol=1e-3)


class TestModelInvariants:
    @pytest.mark.parametrize("m", [
        Mo.make_gaussian_location(0.5), Mo.make_laplace_location(2.0), Mo.make_bernoulli_mean(3),
    ], ids=lambda m: m.label)
    @pytest.mark.parametrize("theta", [0.25, 0.5, 0.8])
    def test_normalized(self, m, theta):
        pts, w = m.obs_rule([theta], [theta])
        f = m.density(pts, np.array([[theta]]))
        assert np.all(f >= 0)
        assert abs(w @ f - 1) < 1e-6

    def test_registry(self):
        assert {"gaussian-location", "gaussian-sequence", "bernoulli-mean", "laplace-location"} \
            <= set(Mo.MODEL_REGISTRY)
        m = Mo.make_model("gaussian-location", noise_variance=2.0, repeats=2)
        assert m.params["noise_variance"] == 2.0 and m.params["repeats"] == 2

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            Mo.make_model("poisson")

    def test_prior_outside_domain(self):
        with pytest.raises(DomainError):
            Mo.make_bernoulli_mean().check_prior_support(M.gaussian_prior())
