"""Brute-force ground truth for the quantities the bounds constrain.

Everything here is computed directly from the joint law of (theta, X) on a
quadrature grid, or by Monte Carlo with closed-form marginals, and never from
the bounds themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import special
from scipy.signal import fftconvolve

from .errors import CapabilityError, DomainError
from .measures import (
    DEFAULT_QUAD,
    TINY,
    DensityOnRn,
    LogConcavePrior,
    QuadratureSpec,
    differential_entropy,
)
from .models import DiscreteObs, ParametricModel

MAX_ORACLE_DIM = 2
MAX_JOINT_ENTRIES = 2 * 10**7
JOINT_MASS_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class JointDensityGrid:
    """f(x; theta) on a (theta-node x x-node) grid.

    ``theta_weights`` already include the prior density, so
    ``theta_weights[i] * likelihood[i, j] * x_weights[j]`` is the mass of cell
    (i, j).
    """

    theta_nodes: np.ndarray
    theta_weights: np.ndarray
    x_nodes: np.ndarray
    x_weights: np.ndarray
    likelihood: np.ndarray
    marginal: np.ndarray

    @property
    def joint(self) -> np.ndarray:
        return self.theta_weights[:, None] * self.likelihood

    @property
    def total_mass(self) -> float:
        return float(self.theta_weights @ self.likelihood @ self.x_weights)


def build_joint_grid(prior: LogConcavePrior, m: ParametricModel,
                     q: Optional[QuadratureSpec] = None) -> JointDensityGrid:
    """Joint grid on prior nodes x observation nodes.

    Observation nodes are doubled until the joint mass is 1 within
    ``JOINT_MASS_TOL`` (narrow likelihoods need a finer x grid than the prior).
    """
    if prior.dim > MAX_ORACLE_DIM or m.obs_space.dim > MAX_ORACLE_DIM:
        raise CapabilityError(
            f"brute-force oracles are limited to theta and X of dimension <= {MAX_ORACLE_DIM}"
        )
    m.check_prior_support(prior)
    q = q or DEFAULT_QUAD
    box = prior.base.support
    t_pts, t_w = QuadratureSpec(q.nodes_per_axis, q.scheme).rule(box)
    t_w = t_w * prior.base.density(t_pts)
    x_nodes = q.nodes_for(m.obs_space.dim)
    while True:
        xq = QuadratureSpec(x_nodes, q.scheme)
        x_pts, x_w = m.obs_rule(np.array(box.lo), np.array(box.hi), xq)
        if len(t_pts) * len(x_pts) > MAX_JOINT_ENTRIES:
            raise CapabilityError(
                f"joint grid of {len(t_pts)} x {len(x_pts)} nodes exceeds the desk-scale guard; "
                "lower nodes_per_axis"
            )
        lik = m.density(x_pts[None, :, :], t_pts[:, None, :])
        grid = JointDensityGrid(t_pts, t_w, x_pts, x_w, lik, t_w @ lik)
        mass = grid.total_mass
        if abs(mass - 1.0) <= JOINT_MASS_TOL:
            return grid
        if isinstance(m.obs_space, DiscreteObs):
            break
        x_nodes *= 2
        if len(t_pts) * len(x_pts) * 2 ** m.obs_space.dim > MAX_JOINT_ENTRIES:
            break
    raise DomainError(f"joint grid mass {mass:.8f} is not 1 within {JOINT_MASS_TOL:g}")


def _mi_from_grid(g: JointDensityGrid) -> float:
    live = (g.likelihood > TINY) & (g.marginal[None, :] > TINY)
    ratio = np.where(live, g.likelihood, 1.0) / np.where(live, g.marginal[None, :], 1.0)
    integrand = np.where(live, g.likelihood * np.log(ratio), 0.0)
    return float(g.theta_weights @ integrand @ g.x_weights)


def _mmse_from_grid(g: JointDensityGrid) -> float:
    safe = np.where(g.marginal > TINY, g.marginal, 1.0)
    post_mean = (g.joint.T @ g.theta_nodes) / safe[:, None]          # (Nx, n)
    sq = np.sum((g.theta_nodes[:, None, :] - post_mean[None, :, :]) ** 2, axis=-1)
    return float(np.sum(g.joint * sq * g.x_weights[None, :]))


def mutual_information(prior: LogConcavePrior, m: ParametricModel,
                       q: Optional[QuadratureSpec] = None) -> float:
    """I(theta; X) by double quadrature of f log(f / f_marginal)."""
    return _mi_from_grid(build_joint_grid(prior, m, q))


def conditional_entropy(prior: LogConcavePrior, m: ParametricModel,
                        q: Optional[QuadratureSpec] = None) -> float:
    """h(theta | X) = h(theta) - I(theta; X)."""
    return differential_entropy(prior.base, q) - mutual_information(prior, m, q)


def posterior_mean_mse(prior: LogConcavePrior, m: ParametricModel,
                       q: Optional[QuadratureSpec] = None) -> float:
    """E|theta - E[theta | X]|^2, the Bayes risk of the posterior mean."""
    return _mmse_from_grid(build_joint_grid(prior, m, q))


class OracleValues(NamedTuple):
    mutual_information: float
    prior_entropy: float
    conditional_entropy: float
    mmse: float


def joint_oracles(prior: LogConcavePrior, m: ParametricModel,
                  q: Optional[QuadratureSpec] = None) -> OracleValues:
    """All grid oracles from a single joint grid."""
    g = build_joint_grid(prior, m, q)
    mi = _mi_from_grid(g)
    h = differential_entropy(prior.base, q)
    return OracleValues(mi, h, h - mi, _mmse_from_grid(g))


# ---------------------------------------------------------------------------
# Monte Carlo cross-check: uniform prior, Gaussian channel
# ---------------------------------------------------------------------------


class MonteCarloEstimate(NamedTuple):
    value: float
    std_error: float
    n_samples: int
    seed: int

    def agrees(self, other: float, n_se: float = 3.0) -> bool:
        return abs(self.value - other) <= n_se * self.std_error


def _log_normal_mass(lo, hi):
    """log(Phi(hi) - Phi(lo)) for lo < hi, stable in both tails."""
    flip = lo > 0
    a = np.where(flip, -hi, lo)
    b = np.where(flip, -lo, hi)
    lb = special.log_ndtr(b)
    return lb + np.log1p(-np.exp(special.log_ndtr(a) - lb))


def mc_uniform_gaussian(a: float, b: float, sigma2: float, n_samples: int = 10**7,
                        seed: int = 0, chunk: int = 10**6):
    """MI and MMSE for theta ~ U[a, b], X = theta + N(0, sigma2), by Monte Carlo.

    Uses the closed-form mixture marginal and truncated-normal posterior mean,
    so it shares nothing with the grid oracles.  Returns ``(mi, mmse)``.
    """
    if not a < b or sigma2 <= 0:
        raise DomainError("need a < b and sigma2 > 0")
    rng = np.random.default_rng(seed)
    s = math.sqrt(sigma2)
    log_len = math.log(b - a)
    sums = np.zeros(2)
    sqs = np.zeros(2)
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        theta = rng.uniform(a, b, size)
        x = theta + s * rng.standard_normal(size)
        log_lik = -0.5 * ((x - theta) / s) ** 2 - 0.5 * math.log(2 * math.pi * sigma2)
        lo, hi = (a - x) / s, (b - x) / s
        log_z = _log_normal_mass(lo, hi)
        log_marg = log_z - log_len
        mi_term = log_lik - log_marg
        log_phi_lo = -0.5 * lo * lo - 0.5 * math.log(2 * math.pi)
        log_phi_hi = -0.5 * hi * hi - 0.5 * math.log(2 * math.pi)
        post_mean = x + s * (np.exp(log_phi_lo - log_z) - np.exp(log_phi_hi - log_z))
        se_term = (theta - post_mean) ** 2
        for i, t in enumerate((mi_term, se_term)):
            sums[i] += t.sum()
            sqs[i] += (t * t).sum()
        done += size
    mean = sums / n_samples
    var = np.maximum(sqs / n_samples - mean ** 2, 0.0)
    se = np.sqrt(var / n_samples)
    return (MonteCarloEstimate(float(mean[0]), float(se[0]), n_samples, seed),
            MonteCarloEstimate(float(mean[1]), float(se[1]), n_samples, seed))


# ---------------------------------------------------------------------------
# Entropy of i.i.d. sums by FFT convolution
# ---------------------------------------------------------------------------


class SumEntropy(NamedTuple):
    entropy: float
    step: float
    refinements: int
    last_change: float


def _sum_entropy_on_grid(d: DensityOnRn, k: int, h: float, max_points: int) -> float:
    lo, hi = d.support.lo[0], d.support.hi[0]
    i0, i1 = math.floor(lo / h), math.ceil(hi / h)
    if (i1 - i0 + 1) * k > max_points:
        raise DomainError(f"convolution grid for k={k} needs more than {max_points} points")
    x = np.arange(i0, i1 + 1) * h
    p = d.density(x)
    # trapezoid end weights where the density jumps at a hard face
    if d.support.hard_lo[0] and abs(x[0] - lo) < 1e-12 * max(1.0, abs(lo)):
        p[0] *= 0.5
    if d.support.hard_hi[0] and abs(x[-1] - hi) < 1e-12 * max(1.0, abs(hi)):
        p[-1] *= 0.5
    s = p.copy()
    for _ in range(k - 1):
        s = np.clip(fftconvolve(s, p) * h, 0.0, None)
    live = s > TINY
    return float(-h * np.sum(s[live] * np.log(s[live])))


def iid_sum_entropy(d: DensityOnRn, k: int, resolution: int = 8192, tol: float = 1e-4,
                    max_refinements: int = 5, max_points: int = 2**24) -> SumEntropy:
    """h(X_1 + ... + X_k) for X_i i.i.d. with density d (1-D only).

    Starts from ``resolution`` grid cells across the support and halves the
    spacing until two successive values differ by less than ``tol``.
    """
    if d.dim != 1:
        raise DomainError("iid_sum_entropy is one-dimensional")
    if not 1 <= k <= 16:
        raise DomainError("k must be in 1..16")
    if k == 1:
        return SumEntropy(differential_entropy(d), 0.0, 0, 0.0)
    h = (d.support.hi[0] - d.support.lo[0]) / resolution
    prev = _sum_entropy_on_grid(d, k, h, max_points)
    change = math.inf
    for r in range(1, max_refinements + 1):
        h /= 2
        cur = _sum_entropy_on_grid(d, k, h, max_points)
        change = abs(cur - prev)
        prev = cur
        if change < tol:
            return SumEntropy(cur, h, r, change)
    raise DomainError(f"sum entropy did not settle to {tol:g} (last change {change:.2e})")
