import math

import numpy as np
import pytest
from scipy import integrate

from bcrb import measures as M
from bcrb import models as Mo
from bcrb import oracles as O
from bcrb.errors import CapabilityError, DomainError

TWO_PI_E = 2 * math.pi * math.e


@pytest.fixture(scope="module")
def gauss_pair():
    return M.gaussian_prior(), Mo.make_gaussian_location(1.0)


class TestJointGrid:
    def test_mass(self, gauss_pair):
        g = O.build_joint_grid(*gauss_pair)
        assert abs(g.total_mass - 1) < 1e-5
        assert np.all(g.joint >= 0)

    def test_dimension_guard(self):
        q = M.QuadratureSpec(32)
        with pytest.raises(CapabilityError):
            O.build_joint_grid(M.gaussian_prior(0, 1, 3, q), Mo.make_gaussian_location(1.0, 3), q)

    def test_repeat_guard(self):
        with pytest.raises(CapabilityError):
            O.mutual_information(M.gaussian_prior(), Mo.make_gaussian_location(1.0, 1, 3))

    def test_narrow_likelihood_refines_observation_grid(self):
        prior = M.laplace_prior(1.0)
        mi = O.mutual_information(prior, Mo.make_gaussian_location(0.02))
        assert 0 < mi < 0.5 * math.log1p(2 / 0.02)


class TestMutualInformation:
    def test_constant_channel(self):
        assert abs(O.mutual_information(M.gaussian_prior(), Mo.make_constant_channel())) < 1e-6

    def test_gaussian(self, gauss_pair):
        assert abs(O.mutual_information(*gauss_pair) - 0.5 * math.log(2)) < 1e-4

    @pytest.mark.parametrize("noise,mi,mmse", [
        # frozen from the grid oracle; the Monte Carlo test below re-derives both independently
        (1.0, 0.040020, 0.076915),
        (0.01, 1.064286, 0.0081936),
    ])
    def test_uniform_prior_frozen(self, noise, mi, mmse):
        ov = O.joint_oracles(M.uniform_prior(), Mo.make_gaussian_location(noise))
        np.testing.assert_allclose([ov.mutual_information, ov.mmse], [mi, mmse], rtol=1e-4)

    @pytest.mark.parametrize("noise", [1.0, 0.01])
    def test_uniform_prior_monte_carlo(self, noise):
        ov = O.joint_oracles(M.uniform_prior(), Mo.make_gaussian_location(noise))
        mc_mi, mc_mse = O.mc_uniform_gaussian(0.0, 1.0, noise, n_samples=2 * 10**6, seed=11)
        assert mc_mi.agrees(ov.mutual_information)
        assert mc_mse.agrees(ov.mmse)

    def test_data_processing(self):
        prior = M.laplace_prior()
        first = O.mutual_information(prior, Mo.make_gaussian_location(1.0))
        cascaded = O.mutual_information(prior, Mo.make_gaussian_location(1.0 + 0.5))
        assert cascaded <= first + 1e-5

    def test_two_dimensional_product(self):
        q = M.QuadratureSpec(48)
        mi = O.mutual_information(M.gaussian_prior(0, 1, 2, q), Mo.make_gaussian_location(1.0, 2), q)
        assert abs(mi - math.log(2)) < 1e-4

    def test_discrete_observations(self):
        mi = O.mutual_information(M.uniform_prior(0.2, 0.8), Mo.make_bernoulli_mean())
        # h(X) - E h(X | theta) with P(X=1) = 1/2
        ent = lambda t: -(t * math.log(t) + (1 - t) * math.log(1 - t))
        oracle = math.log(2) - integrate.quad(ent, 0.2, 0.8)[0] / 0.6
        np.testing.assert_allclose(mi, oracle, rtol=1e-8)


class TestConditionalEntropy:
    def test_constant_channel(self):
        prior = M.gaussian_prior()
        h = O.conditional_entropy(prior, Mo.make_constant_channel())
        assert abs(h - M.differential_entropy(prior.base)) < 1e-6

    def test_gaussian(self, gauss_pair):
        assert abs(O.conditional_entropy(*gauss_pair) - 0.5 * math.log(TWO_PI_E * 0.5)) < 1e-4

    def test_wide_gaussian_prior(self):
        h = O.conditional_entropy(M.gaussian_prior(0, 4.0), Mo.make_gaussian_location(1.0))
        assert abs(h - 0.5 * math.log(TWO_PI_E * 0.8)) < 1e-4


class TestPosteriorMeanMSE:
    def test_gaussian(self, gauss_pair):
        assert abs(O.posterior_mean_mse(*gauss_pair) - 0.5) < 1e-4

    def test_constant_channel(self):
        assert abs(O.posterior_mean_mse(M.gaussian_prior(), Mo.make_constant_channel()) - 1.0) < 1e-4

    @pytest.mark.parametrize("prior", [M.laplace_prior(), M.exponential_prior(), M.quartic_prior()],
                             ids=lambda p: p.family)
    def test_below_prior_variance(self, prior):
        assert O.posterior_mean_mse(prior, Mo.make_gaussian_location(0.5)) <= prior.variance + 1e-6


class TestMonteCarlo:
    def test_seeded_reproducible(self):
        a = O.mc_uniform_gaussian(0, 1, 0.5, n_samples=10**5, seed=3)
        b = O.mc_uniform_gaussian(0, 1, 0.5, n_samples=10**5, seed=3)
        c = O.mc_uniform_gaussian(0, 1, 0.5, n_samples=10**5, seed=4)
        assert (a[0].value, a[1].value) == (b[0].value, b[1].value)
        assert a[0].value != c[0].value

    def test_rejects_bad_interval(self):
        with pytest.raises(DomainError):
            O.mc_uniform_gaussian(1, 0, 1.0)


def _laplace_pair_entropy(b):
    """h(X1 + X2) by nested adaptive quadrature of the convolution integral."""
    lap = lambda x: math.exp(-abs(x) / b) / (2 * b)

    def conv(s):
        f = lambda x: lap(x) * lap(s - x)
        pts = sorted({0.0, s})
        return integrate.quad(f, -60 * b, 60 * b, points=pts, limit=200)[0]

    def integrand(s):
        p = conv(s)
        return -p * math.log(p) if p > 0 else 0.0

    return 2 * integrate.quad(integrand, 0, 60 * b, limit=200)[0]


class TestSumEntropy:
    def test_gaussian_k4(self):
        res = O.iid_sum_entropy(M.standard_gaussian(), 4)
        assert abs(res.entropy - 0.5 * math.log(TWO_PI_E * 4)) < 1e-3

    @pytest.mark.parametrize("d", [M.laplace(1.0), M.uniform(0, 1), M.quartic()], ids=lambda d: d.name)
    def test_k1_is_entropy(self, d):
        assert abs(O.iid_sum_entropy(d, 1).entropy - M.differential_entropy(d)) < 1e-6

    def test_laplace_pair_against_double_integral(self):
        b = 1 / math.sqrt(2)
        res = O.iid_sum_entropy(M.laplace(b), 2)
        assert abs(res.entropy - _laplace_pair_entropy(b)) < 1e-3

    def test_uniform_pair_triangle(self):
        # triangle density on [0, 2] has entropy 1/2
        assert abs(O.iid_sum_entropy(M.uniform(0, 1), 2).entropy - 0.5) < 1e-3

    @pytest.mark.parametrize("d", [M.laplace(1 / math.sqrt(2)), M.exponential(1.0)], ids=lambda d: d.name)
    def test_monotone_in_k(self, d):
        hs = [O.iid_sum_entropy(d, k).entropy for k in range(1, 6)]
        assert all(b >= a - 1e-4 for a, b in zip(hs, hs[1:]))

    def test_rejects_large_k(self):
        with pytest.raises(DomainError):
            O.iid_sum_entropy(M.standard_gaussian(), 17)

    def test_rejects_2d(self):
        with pytest.raises(DomainError):
            O.iid_sum_entropy(M.standard_gaussian(2), 2)
