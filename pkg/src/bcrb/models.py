"""Dominated parametric families f(x; theta) and their Fisher information."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import DomainError, ModelEvaluationError
from .measures import (
    DEFAULT_QUAD,
    GAUSSIAN_HALF_WIDTH,
    TINY,
    Box,
    LogConcavePrior,
    QuadratureSpec,
    standard_gaussian,
)

REGULARITY_TOL = 1e-5


@dataclass(frozen=True)
class ContinuousObs:
    """Observations in R^d with Lebesgue dominating measure.

    ``box_for(theta_lo, theta_hi)`` returns an integration box that captures
    the observation mass for every theta in the given parameter box.
    """

    dim: int
    box_for: Callable[[np.ndarray, np.ndarray], Box]


@dataclass(frozen=True)
class DiscreteObs:
    """Finitely many observation points with counting measure."""

    points: np.ndarray

    @property
    def dim(self) -> int:
        return self.points.shape[1]


ObsSpace = Union[ContinuousObs, DiscreteObs]


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """The family f(x; theta).

    ``density(x, theta)`` and ``theta_gradient(x, theta)`` broadcast over
    leading axes: ``x`` is ``(..., d)``, ``theta`` is ``(..., n)``.
    ``theta_domain`` is the open parameter set when it is not all of R^n.
    """

    theta_dim: int
    obs_space: ObsSpace
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    theta_gradient: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    label: str = "model"
    params: dict = field(default_factory=dict)
    theta_domain: Optional[Box] = None

    def gradient(self, x, theta) -> np.ndarray:
        """grad_theta f, by central differences with step 1e-6 (1 + |theta|) if needed."""
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.theta_gradient is not None:
            return self.theta_gradient(x, theta)
        shape = np.broadcast_shapes(x.shape[:-1], theta.shape[:-1]) + (self.theta_dim,)
        out = np.empty(shape)
        for i in range(self.theta_dim):
            h = 1e-6 * (1.0 + np.abs(theta[..., i]))
            up = theta.copy()
            dn = theta.copy()
            up[..., i] += h
            dn[..., i] -= h
            out[..., i] = (self.density(x, up) - self.density(x, dn)) / (2 * h)
        return out

    def obs_rule(self, theta_lo, theta_hi, q: Optional[QuadratureSpec] = None):
        """Nodes and weights of the dominating measure over the relevant region."""
        if isinstance(self.obs_space, DiscreteObs):
            pts = self.obs_space.points
            return pts, np.ones(len(pts))
        q = q or DEFAULT_QUAD
        box = self.obs_space.box_for(np.atleast_1d(theta_lo), np.atleast_1d(theta_hi))
        return QuadratureSpec(q.nodes_per_axis, q.scheme).rule(box)

    def check_prior_support(self, prior: LogConcavePrior) -> None:
        if prior.dim != self.theta_dim:
            raise DomainError(
                f"prior dimension {prior.dim} does not match model {self.label} ({self.theta_dim})"
            )
        dom = self.theta_domain
        if dom is None:
            return
        box = prior.base.support
        if any(a < lo for a, lo in zip(box.lo, dom.lo)) or any(b > hi for b, hi in zip(box.hi, dom.hi)):
            raise DomainError(f"prior support {box.lo}..{box.hi} leaves the domain of {self.label}")


# ---------------------------------------------------------------------------
# Fisher information and regularity
# ---------------------------------------------------------------------------


def model_fisher_information(m: ParametricModel, theta, q: Optional[QuadratureSpec] = None) -> float:
    """Trace-form Fisher information int |grad_theta f|^2 / f dlambda."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (m.theta_dim,):
        raise DomainError(f"theta must have shape ({m.theta_dim},)")
    pts, w = m.obs_rule(theta, theta, q)
    f = m.density(pts, theta[None, :])
    live = f > TINY
    if m.theta_gradient is None and isinstance(m.obs_space, ContinuousObs):
        if np.sum(w[~live]) > 0:
            raise ModelEvaluationError(
                f"{m.label}: density underflows on part of the observation box and no "
                "analytic theta-gradient is available"
            )
    g = m.gradient(pts, theta[None, :])
    g2 = np.sum(g * g, axis=-1)
    return float(np.sum(w[live] * g2[live] / f[live]))


class FisherAverage(NamedTuple):
    J: float            # (1/n) int I(theta) dpi
    total: float        # int I(theta) dpi


def _prior_rule(prior: LogConcavePrior, q: Optional[QuadratureSpec]):
    q = q or DEFAULT_QUAD
    pts, w = QuadratureSpec(q.nodes_per_axis, q.scheme).rule(prior.base.support)
    return pts, w * prior.base.density(pts)


def average_fisher_information(m: ParametricModel, prior: LogConcavePrior,
                               q: Optional[QuadratureSpec] = None) -> FisherAverage:
    m.check_prior_support(prior)
    pts, pw = _prior_rule(prior, q)
    keep = pw > 0
    total = sum(
        wi * model_fisher_information(m, th, q) for th, wi in zip(pts[keep], pw[keep])
    )
    return FisherAverage(float(total) / prior.dim, float(total))


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of the grid check of int grad_theta f dlambda = 0."""

    max_norm: float
    worst_theta: tuple
    n_points: int
    passed: bool
    note: str = "grid-based check of an a.e. condition: sound on the grid, not a proof"


def regularity_check(m: ParametricModel, prior: LogConcavePrior,
                     q: Optional[QuadratureSpec] = None, max_points: int = 129) -> RegularityReport:
    m.check_prior_support(prior)
    pts, pw = _prior_rule(prior, q)
    keep = pw > 1e-8 * pw.max()
    thetas = pts[keep]
    if len(thetas) > max_points:
        thetas = thetas[np.linspace(0, len(thetas) - 1, max_points).round().astype(int)]
    worst, worst_theta = 0.0, thetas[0]
    for th in thetas:
        x, w = m.obs_rule(th, th, q)
        flux = w @ m.gradient(x, th[None, :]).reshape(len(x), m.theta_dim)
        norm = float(np.linalg.norm(flux))
        if norm > worst:
            worst, worst_theta = norm, th
    return RegularityReport(worst, tuple(float(t) for t in worst_theta), len(thetas),
                            worst < REGULARITY_TOL)


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def _gaussian_box(sigma: float, n: int, m_repeats: int):
    def box_for(lo, hi):
        lo = np.broadcast_to(lo, (n,))
        hi = np.broadcast_to(hi, (n,))
        half = GAUSSIAN_HALF_WIDTH * sigma
        return Box(np.tile(lo - half, m_repeats), np.tile(hi + half, m_repeats))
    return box_for


def make_gaussian_location(sigma2: float = 1.0, n: int = 1, m_repeats: int = 1) -> ParametricModel:
    """X_r = theta + Z_r, Z_r ~ N(0, sigma2 I_n), r = 1..m_repeats."""
    if sigma2 <= 0:
        raise DomainError("sigma2 must be positive")
    if n < 1 or m_repeats < 1:
        raise DomainError("n and m_repeats must be positive")
    s2 = float(sigma2)
    log_norm = -0.5 * n * m_repeats * math.log(2 * math.pi * s2)

    def _resid(x, theta):
        x = np.asarray(x, dtype=float)
        xr = x.reshape(x.shape[:-1] + (m_repeats, n))
        return xr - np.asarray(theta, dtype=float)[..., None, :]

    def density(x, theta):
        r = _resid(x, theta)
        return np.exp(log_norm - 0.5 * np.sum(r * r, axis=(-1, -2)) / s2)

    def theta_gradient(x, theta):
        r = _resid(x, theta)
        return density(x, theta)[..., None] * np.sum(r, axis=-2) / s2

    label = "gaussian-location" if n == 1 else "gaussian-sequence"
    return ParametricModel(
        n, ContinuousObs(n * m_repeats, _gaussian_box(math.sqrt(s2), n, m_repeats)),
        density, theta_gradient, label,
        {"noise_variance": s2, "n": n, "repeats": m_repeats},
    )


def make_gaussian_sequence(sigma2: float = 1.0, n: int = 2) -> ParametricModel:
    return make_gaussian_location(sigma2, n, 1)


def make_laplace_location(scale: float = 1.0, m_repeats: int = 1) -> ParametricModel:
    """X_r = theta + Laplace(scale); Fisher information m / scale^2."""
    if scale <= 0:
        raise DomainError("scale must be positive")
    b = float(scale)
    width = 30.0 * b

    def box_for(lo, hi):
        # kink at x = theta becomes a panel break when theta is pinned
        brk = (float(lo[0]),) if lo[0] == hi[0] else ()
        return Box(np.full(m_repeats, lo[0] - width), np.full(m_repeats, hi[0] + width),
                   breaks=(brk,) * m_repeats)

    def density(x, theta):
        r = np.asarray(x, dtype=float) - np.asarray(theta, dtype=float)[..., :1]
        return np.exp(-m_repeats * math.log(2 * b) - np.sum(np.abs(r), axis=-1) / b)

    def theta_gradient(x, theta):
        r = np.asarray(x, dtype=float) - np.asarray(theta, dtype=float)[..., :1]
        return (density(x, theta) * np.sum(np.sign(r), axis=-1) / b)[..., None]

    return ParametricModel(1, ContinuousObs(m_repeats, box_for), density, theta_gradient,
                           "laplace-location", {"scale": b, "repeats": m_repeats})


def make_bernoulli_mean(m_repeats: int = 1) -> ParametricModel:
    """m i.i.d. Bernoulli(theta) draws, theta in (0, 1)."""
    if not 1 <= m_repeats <= 16:
        raise DomainError("m_repeats must be in 1..16")
    pts = np.array(list(itertools.product((0.0, 1.0), repeat=m_repeats)))

    def density(x, theta):
        x = np.asarray(x, dtype=float)
        t = np.asarray(theta, dtype=float)[..., :1]
        return np.prod(np.where(x > 0.5, t, 1.0 - t), axis=-1)

    def theta_gradient(x, theta):
        x = np.asarray(x, dtype=float)
        t = np.asarray(theta, dtype=float)[..., :1]
        score = np.sum((x - t) / (t * (1 - t)), axis=-1)
        return (density(x, theta) * score)[..., None]

    return ParametricModel(1, DiscreteObs(pts), density, theta_gradient, "bernoulli-mean",
                           {"repeats": m_repeats}, Box.interval(0.0, 1.0))


def make_constant_channel(n: int = 1) -> ParametricModel:
    """X ~ N(0, 1) whatever theta is: zero information."""
    noise = standard_gaussian(1)

    def density(x, theta):
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], np.shape(theta)[:-1])
        return np.broadcast_to(noise.density(x.reshape(-1, 1)).reshape(x.shape[:-1]), shape)

    def theta_gradient(x, theta):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(theta)[:-1])
        return np.zeros(shape + (n,))

    return ParametricModel(n, ContinuousObs(1, lambda lo, hi: noise.support), density,
                           theta_gradient, "constant", {"n": n})


def make_half_gaussian_location() -> ParametricModel:
    """f(x; theta) = 2 phi(x - theta) on x >= theta.

    The support moves with theta, so differentiating under the integral
    fails: int grad_theta f dx = sqrt(2/pi) != 0.  Kept as a negative control
    for the regularity check.
    """
    c = math.sqrt(2 / math.pi)

    def density(x, theta):
        r = np.asarray(x, dtype=float)[..., 0] - np.asarray(theta, dtype=float)[..., 0]
        return np.where(r >= 0, c * np.exp(-0.5 * r * r), 0.0)

    def theta_gradient(x, theta):
        r = np.asarray(x, dtype=float)[..., 0] - np.asarray(theta, dtype=float)[..., 0]
        return (density(x, theta) * r)[..., None]

    def box_for(lo, hi):
        return Box((lo[0],), (hi[0] + 2 * GAUSSIAN_HALF_WIDTH,), hard_lo=(True,))

    return ParametricModel(1, ContinuousObs(1, box_for), density, theta_gradient,
                           "half-gaussian-location", {})


def rescale_parameter(m: ParametricModel, s: float) -> ParametricModel:
    """Reparameterize by eta = s * theta: g(x; eta) = f(x; eta / s)."""
    if s <= 0:
        raise DomainError("scale must be positive")

    def density(x, eta):
        return m.density(x, np.asarray(eta, dtype=float) / s)

    def theta_gradient(x, eta):
        return m.gradient(x, np.asarray(eta, dtype=float) / s) / s

    obs = m.obs_space
    if isinstance(obs, ContinuousObs):
        obs = ContinuousObs(obs.dim, lambda lo, hi: m.obs_space.box_for(lo / s, hi / s))
    domain = m.theta_domain.scaled(s) if m.theta_domain is not None else None
    return ParametricModel(m.theta_dim, obs, density, theta_gradient,
                           f"{m.label}*{s:g}", dict(m.params, theta_scale=s), domain)


MODEL_REGISTRY: dict = {
    "gaussian-location": lambda noise_variance=1.0, repeats=1, dim=1:
        make_gaussian_location(noise_variance, dim, repeats),
    "gaussian-sequence": lambda noise_variance=1.0, dim=2, repeats=1:
        make_gaussian_location(noise_variance, dim, repeats),
    "bernoulli-mean": lambda repeats=1: make_bernoulli_mean(repeats),
    "laplace-location": lambda scale=1.0, repeats=1: make_laplace_location(scale, repeats),
    "constant": lambda dim=1: make_constant_channel(dim),
    "half-gaussian-location": lambda: make_half_gaussian_location(),
}


def make_model(label: str, **params) -> ParametricModel:
    try:
        factory = MODEL_REGISTRY[label]
    except KeyError:
        raise DomainError(f"unknown model {label!r}; known: {sorted(MODEL_REGISTRY)}") from None
    return factory(**params)
