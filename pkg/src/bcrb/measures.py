"""Densities on R^n and the information functionals defined on them.

All integrals are computed by tensor-product quadrature over an axis-aligned
box.  Unbounded densities are truncated to a box holding all but ~1e-10 of
their mass; faces where the density jumps to zero are flagged as *hard* and
drive the infinite-Fisher-information convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import AbsoluteContinuityError, DomainError, IntegrationDomainError

ArrayFn = Callable[[np.ndarray], np.ndarray]

MASS_TOL = 1e-6
MAX_NODES = 10**7
TINY = 1e-300

# Half-width (in standard deviations) of the truncation box for Gaussians.
GAUSSIAN_HALF_WIDTH = 7.0
# exp(-24) ~ 3.8e-11 of mass beyond 24 scale lengths for exponential tails.
EXP_TAIL_WIDTH = 24.0


# ---------------------------------------------------------------------------
# Boxes and quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with per-face hard-boundary flags.

    ``breaks`` lists interior points per axis where the integrand has a kink;
    the quadrature splits panels there.
    """

    lo: tuple
    hi: tuple
    hard_lo: tuple = None
    hard_hi: tuple = None
    breaks: tuple = None

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise DomainError("box bounds have mismatched dimensions")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise DomainError(f"degenerate box {lo} x {hi}")
        n = len(lo)
        hard_lo = (False,) * n if self.hard_lo is None else tuple(bool(v) for v in self.hard_lo)
        hard_hi = (False,) * n if self.hard_hi is None else tuple(bool(v) for v in self.hard_hi)
        breaks = ((),) * n if self.breaks is None else tuple(
            tuple(sorted(float(b) for b in axis if a < b < c))
            for axis, a, c in zip(self.breaks, lo, hi)
        )
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "hard_lo", hard_lo)
        object.__setattr__(self, "hard_hi", hard_hi)
        object.__setattr__(self, "breaks", breaks)

    @classmethod
    def interval(cls, lo, hi, hard_lo=False, hard_hi=False, breaks=()):
        return cls((lo,), (hi,), (hard_lo,), (hard_hi,), (tuple(breaks),))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def has_hard_face(self) -> bool:
        return any(self.hard_lo) or any(self.hard_hi)

    def hard_faces(self) -> set:
        faces = set()
        for i in range(self.dim):
            if self.hard_lo[i]:
                faces.add((i, "lo", self.lo[i]))
            if self.hard_hi[i]:
                faces.add((i, "hi", self.hi[i]))
        return faces

    def shifted(self, c) -> "Box":
        c = np.broadcast_to(np.asarray(c, dtype=float), (self.dim,))
        return Box(
            np.add(self.lo, c), np.add(self.hi, c), self.hard_lo, self.hard_hi,
            tuple(tuple(b + ci for b in axis) for axis, ci in zip(self.breaks, c)),
        )

    def scaled(self, s: float) -> "Box":
        if s <= 0:
            raise DomainError("scale must be positive")
        return Box(
            np.multiply(self.lo, s), np.multiply(self.hi, s), self.hard_lo, self.hard_hi,
            tuple(tuple(b * s for b in axis) for axis in self.breaks),
        )


def product_box(*boxes: Box) -> Box:
    return Box(
        sum((b.lo for b in boxes), ()),
        sum((b.hi for b in boxes), ()),
        sum((b.hard_lo for b in boxes), ()),
        sum((b.hard_hi for b in boxes), ()),
        sum((b.breaks for b in boxes), ()),
    )


def default_nodes(dim: int) -> int:
    """257 nodes per axis in 1-D, 129 in 2-D, then capped by the node budget."""
    if dim == 1:
        return 257
    if dim == 2:
        return 129
    return max(8, min(64, int(math.floor(MAX_NODES ** (1.0 / dim)))))


@lru_cache(maxsize=64)
def _reference_rule(n: int, scheme: str):
    if scheme == "gauss-legendre":
        return leggauss(n)
    t = np.linspace(-1.0, 1.0, n)
    w = np.full(n, 2.0 / (n - 1))
    w[[0, -1]] *= 0.5
    return t, w


def _axis_rule(lo: float, hi: float, n: int, scheme: str, breaks: tuple):
    t, w = _reference_rule(n, scheme)
    edges = (lo,) + breaks + (hi,)
    xs = [0.5 * (b - a) * t + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])]
    ws = [0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor quadrature settings; ``box`` overrides the density's support."""

    nodes_per_axis: Optional[int] = None
    scheme: str = "gauss-legendre"
    box: Optional[Box] = None

    def __post_init__(self):
        if self.scheme not in ("gauss-legendre", "trapezoid"):
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if self.nodes_per_axis is not None and self.nodes_per_axis < 8:
            raise DomainError("nodes_per_axis must be at least 8")

    def nodes_for(self, dim: int) -> int:
        return self.nodes_per_axis or default_nodes(dim)

    def rule(self, box: Box):
        """Return ``(points, weights)`` with points shaped ``(N, dim)``."""
        n = self.nodes_for(box.dim)
        axes = [
            _axis_rule(box.lo[i], box.hi[i], n, self.scheme, box.breaks[i])
            for i in range(box.dim)
        ]
        total = int(np.prod([len(a[0]) for a in axes]))
        if total > MAX_NODES:
            raise DomainError(f"quadrature needs {total} nodes, above the {MAX_NODES} guard")
        if box.dim == 1:
            return axes[0][0][:, None], axes[0][1]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return pts, w


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityOnRn:
    """A probability density on R^n.

    ``log_density`` and ``score`` are vectorized over the leading axis of an
    ``(N, dim)`` array.  ``score`` is the gradient of the log-density; the
    gradient of the density itself is ``density * score``.  When ``score`` is
    omitted it is approximated by central differences.
    """

    dim: int
    log_density: ArrayFn
    support: Box
    score: Optional[ArrayFn] = None
    name: str = "density"

    def __post_init__(self):
        if self.dim < 1 or self.support.dim != self.dim:
            raise DomainError("support box dimension does not match density dimension")

    def density(self, x) -> np.ndarray:
        return np.exp(self.log_density(_as_points(x, self.dim)))

    def score_at(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        if self.score is not None:
            return self.score(x)
        return _fd_score(self.log_density, x, self.support)

    def gradient(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        return self.density(x)[:, None] * self.score_at(x)


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and dim == 1:
        x = x[:, None]
    elif x.ndim == 1:
        x = x[None, :]
    return x


def _fd_score(log_density: ArrayFn, x: np.ndarray, support: Box) -> np.ndarray:
    """Central differences of log-density, step 1e-5 * (1 + |x|).

    Near a hard face the stencil turns one-sided so it never leaves the support.
    """
    out = np.empty_like(x)
    base = None
    for i in range(x.shape[1]):
        h = 1e-5 * (1.0 + np.abs(x[:, i]))
        fwd = x.copy()
        bwd = x.copy()
        fwd[:, i] += h
        bwd[:, i] -= h
        lo_blocked = support.hard_lo[i] & (bwd[:, i] < support.lo[i])
        hi_blocked = support.hard_hi[i] & (fwd[:, i] > support.hi[i])
        if lo_blocked.any() or hi_blocked.any():
            if base is None:
                base = log_density(x)
            bwd[lo_blocked] = x[lo_blocked]
            fwd[hi_blocked] = x[hi_blocked]
        lf = log_density(fwd)
        lb = log_density(bwd)
        span = np.where(lo_blocked | hi_blocked, h, 2 * h)
        out[:, i] = (lf - lb) / span
    return out


class _Integrator:
    """Quadrature nodes, weights and density values for one density/box pair."""

    def __init__(self, d: DensityOnRn, q: Optional[QuadratureSpec], check_mass=True):
        q = q or DEFAULT_QUAD
        box = q.box or d.support
        if box.dim != d.dim:
            raise DomainError("quadrature box dimension does not match density")
        self.box = box
        self.points, self.weights = q.rule(box)
        self.log_p = d.log_density(self.points)
        self.p = np.exp(self.log_p)
        self.mass = float(np.sum(self.weights * self.p))
        if check_mass and abs(self.mass - 1.0) > MASS_TOL:
            raise IntegrationDomainError(
                f"{d.name}: quadrature box holds mass {self.mass:.9f}, "
                f"off by more than {MASS_TOL:g}"
            )

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * self.p * values))


# ---------------------------------------------------------------------------
# Information functionals
# ---------------------------------------------------------------------------


def total_mass(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> float:
    return _Integrator(d, q, check_mass=False).mass


def barycenter(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> np.ndarray:
    it = _Integrator(d, q)
    return (it.weights * it.p) @ it.points / it.mass


def second_moment_about(d: DensityOnRn, c, q: Optional[QuadratureSpec] = None) -> float:
    """Integral of |x - c|^2 against d."""
    it = _Integrator(d, q)
    c = np.broadcast_to(np.asarray(c, dtype=float), (d.dim,))
    return it.integrate(np.sum((it.points - c) ** 2, axis=1)) / it.mass


def covariance(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> np.ndarray:
    it = _Integrator(d, q)
    wp = it.weights * it.p / it.mass
    mean = wp @ it.points
    centered = it.points - mean
    return (centered * wp[:, None]).T @ centered


def variance(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> float:
    """inf_c E|x - c|^2, i.e. the trace of the covariance matrix."""
    it = _Integrator(d, q)
    wp = it.weights * it.p / it.mass
    mean = wp @ it.points
    return float(wp @ np.sum((it.points - mean) ** 2, axis=1))


def fisher_information_J(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> float:
    """Integral of |grad rho|^2 / rho; +inf when rho jumps at a hard face."""
    it = _Integrator(d, q)
    if d.support.has_hard_face:
        return math.inf
    s = d.score_at(it.points)
    return it.integrate(np.sum(s * s, axis=1))


def differential_entropy(d: DensityOnRn, q: Optional[QuadratureSpec] = None) -> float:
    """-int rho log rho, in nats."""
    it = _Integrator(d, q)
    logp = np.where(it.p > TINY, it.log_p, 0.0)
    return -it.integrate(logp)


def _check_continuity(nu: DensityOnRn, mu: DensityOnRn, it: _Integrator) -> np.ndarray:
    if nu.dim != mu.dim:
        raise DomainError("nu and mu live in different dimensions")
    for i in range(nu.dim):
        if mu.support.hard_lo[i] and it.box.lo[i] < mu.support.lo[i] - 1e-12:
            if np.any(it.p[it.points[:, i] < mu.support.lo[i]] > TINY):
                raise AbsoluteContinuityError(f"{nu.name} has mass below a hard face of {mu.name}")
        if mu.support.hard_hi[i] and it.box.hi[i] > mu.support.hi[i] + 1e-12:
            if np.any(it.p[it.points[:, i] > mu.support.hi[i]] > TINY):
                raise AbsoluteContinuityError(f"{nu.name} has mass above a hard face of {mu.name}")
    log_mu = mu.log_density(it.points)
    if np.any((it.p > TINY) & ~np.isfinite(log_mu)):
        raise AbsoluteContinuityError(f"{nu.name} is not absolutely continuous w.r.t. {mu.name}")
    return log_mu


def relative_entropy(nu: DensityOnRn, mu: DensityOnRn, q: Optional[QuadratureSpec] = None) -> float:
    """D_mu(nu) = int h log h dmu with h = dnu/dmu."""
    it = _Integrator(nu, q)
    log_mu = _check_continuity(nu, mu, it)
    live = it.p > TINY
    log_h = np.where(live, it.log_p - np.where(live, log_mu, 0.0), 0.0)
    return it.integrate(log_h)


def relative_fisher_information(
    nu: DensityOnRn, mu: DensityOnRn, q: Optional[QuadratureSpec] = None
) -> float:
    """I_mu(nu) = int |grad h|^2 / h dmu; +inf if h is not weakly differentiable.

    h jumps (and so fails to be weakly differentiable) exactly when nu has a
    hard face that mu does not share.
    """
    it = _Integrator(nu, q)
    _check_continuity(nu, mu, it)
    if nu.support.hard_faces() - mu.support.hard_faces():
        return math.inf
    diff = nu.score_at(it.points) - mu.score_at(it.points)
    return it.integrate(np.sum(diff * diff, axis=1))


# ---------------------------------------------------------------------------
# Log-concave priors and reference measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LogConcavePrior:
    """A density e^{-V} with certified Hess V >= K * I and cached moments."""

    base: DensityOnRn
    K: float
    barycenter: np.ndarray
    variance: float
    fisher_J: float
    family: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_density(cls, base: DensityOnRn, K: float, q: Optional[QuadratureSpec] = None,
                     family: str = "custom", params: Optional[dict] = None):
        if K < 0:
            raise DomainError("K must be nonnegative")
        return cls(
            base=base,
            K=float(K),
            barycenter=barycenter(base, q),
            variance=variance(base, q),
            fisher_J=fisher_information_J(base, q),
            family=family,
            params=dict(params or {}),
        )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def P(self) -> float:
        return self.variance / self.dim

    def potential(self, x) -> np.ndarray:
        """V = -log rho (+inf outside hard faces)."""
        return -self.base.log_density(_as_points(x, self.dim))


class PriorCheck(NamedTuple):
    convex: bool
    worst_midpoint_gap: float
    kp: float
    brascamp_lieb: bool
    barycenter_minimal: bool
    normalized: bool

    @property
    def ok(self) -> bool:
        return self.convex and self.brascamp_lieb and self.barycenter_minimal and self.normalized


def check_prior(prior: LogConcavePrior, q: Optional[QuadratureSpec] = None,
                n_segments: int = 200, seed: int = 0) -> PriorCheck:
    """Midpoint convexity of V, K*P <= 1 and minimality of the barycenter."""
    rng = np.random.default_rng(seed)
    box = prior.base.support
    lo, hi = np.array(box.lo), np.array(box.hi)
    # Sample inside the bulk: V is astronomically large but still convex in the far tails.
    inner_lo = np.maximum(lo, prior.barycenter - 6 * math.sqrt(prior.P))
    inner_hi = np.minimum(hi, prior.barycenter + 6 * math.sqrt(prior.P))
    a = rng.uniform(inner_lo, inner_hi, size=(n_segments, prior.dim))
    b = rng.uniform(inner_lo, inner_hi, size=(n_segments, prior.dim))
    va, vb, vm = prior.potential(a), prior.potential(b), prior.potential(0.5 * (a + b))
    gap = vm - 0.5 * (va + vb)
    scale = 1.0 + np.abs(va) + np.abs(vb)
    worst = float(np.max(gap / scale))
    kp = prior.K * prior.P
    base_var = prior.variance
    perturbed = prior.barycenter + rng.normal(scale=0.1 * math.sqrt(prior.P), size=(16, prior.dim))
    minimal = all(second_moment_about(prior.base, c, q) >= base_var - 1e-10 for c in perturbed)
    mass = total_mass(prior.base, q)
    return PriorCheck(
        convex=worst <= 1e-9,
        worst_midpoint_gap=worst,
        kp=kp,
        brascamp_lieb=kp <= 1 + 1e-9,
        barycenter_minimal=minimal,
        normalized=abs(mass - 1) <= MASS_TOL,
    )


PROVENANCES = ("gaussian-standard", "bakry-emery", "user-asserted")


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """A measure mu together with a constant C for which mu satisfies LSI(C)."""

    density: DensityOnRn
    lsi_constant: float
    provenance: str
    curvature: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")
        if not self.lsi_constant > 0:
            raise DomainError("LSI constant must be positive")
        if self.provenance == "gaussian-standard" and self.lsi_constant != 1.0:
            raise DomainError("the standard Gaussian has LSI constant exactly 1")
        if self.provenance == "bakry-emery":
            if self.curvature is None or not self.curvature > 0:
                raise DomainError("bakry-emery provenance needs a certified K > 0")
            if abs(self.lsi_constant * self.curvature - 1.0) > 1e-12:
                raise DomainError("bakry-emery constant must equal 1/K")

    @classmethod
    def gaussian_standard(cls, dim: int = 1):
        return cls(standard_gaussian(dim), 1.0, "gaussian-standard", 1.0, "gaussian-standard")

    @classmethod
    def bakry_emery(cls, density: DensityOnRn, K: float, label: str = ""):
        return cls(density, 1.0 / K, "bakry-emery", float(K), label or f"bakry-emery(K={K:g})")

    @classmethod
    def user_asserted(cls, density: DensityOnRn, C: float, label: str = ""):
        return cls(density, float(C), "user-asserted", None, label or f"user(C={C:g})")


class LSICheck(NamedTuple):
    lhs: float
    rhs: float
    satisfied: bool


def lsi_check(mu: ReferenceMeasure, nu: DensityOnRn, q: Optional[QuadratureSpec] = None,
              tol: float = 1e-6) -> LSICheck:
    """D_mu(nu) <= (C/2) I_mu(nu)."""
    lhs = relative_entropy(nu, mu.density, q)
    rhs = 0.5 * mu.lsi_constant * relative_fisher_information(nu, mu.density, q)
    return LSICheck(lhs, rhs, bool(lhs <= rhs + tol))


# ---------------------------------------------------------------------------
# Concrete densities
# ---------------------------------------------------------------------------


def gaussian(mean=0.0, variance=1.0, dim: Optional[int] = None) -> DensityOnRn:
    """N(mean, diag(variance)); scalars broadcast to ``dim`` coordinates."""
    mean_a = np.atleast_1d(np.asarray(mean, dtype=float))
    var_a = np.atleast_1d(np.asarray(variance, dtype=float))
    n = dim or max(mean_a.size, var_a.size)
    mean_a = np.broadcast_to(mean_a, (n,)).copy()
    var_a = np.broadcast_to(var_a, (n,)).copy()
    if np.any(var_a <= 0):
        raise DomainError("variance must be positive")
    half = GAUSSIAN_HALF_WIDTH * np.sqrt(var_a)
    log_norm = -0.5 * np.sum(np.log(2 * np.pi * var_a))

    def log_density(x):
        return log_norm - 0.5 * np.sum((x - mean_a) ** 2 / var_a, axis=1)

    def score(x):
        return -(x - mean_a) / var_a

    label = f"N({_fmt(mean_a)}, {_fmt(var_a)})"
    return DensityOnRn(n, log_density, Box(mean_a - half, mean_a + half), score, label)


def standard_gaussian(dim: int = 1) -> DensityOnRn:
    return gaussian(0.0, 1.0, dim)


def laplace(scale: float = 1.0, loc: float = 0.0) -> DensityOnRn:
    """(1/2b) exp(-|x - loc|/b); the kink at ``loc`` is a quadrature break."""
    if scale <= 0:
        raise DomainError("scale must be positive")
    b = float(scale)
    half = EXP_TAIL_WIDTH * b

    def log_density(x):
        return -math.log(2 * b) - np.abs(x[:, 0] - loc) / b

    def score(x):
        return (-np.sign(x[:, 0] - loc) / b)[:, None]

    return DensityOnRn(1, log_density, Box.interval(loc - half, loc + half, breaks=(loc,)),
                       score, f"Laplace({b:g})")


def uniform(a: float = 0.0, b: float = 1.0) -> DensityOnRn:
    if not a < b:
        raise DomainError("uniform needs a < b")
    log_len = math.log(b - a)

    def log_density(x):
        inside = (x[:, 0] >= a) & (x[:, 0] <= b)
        return np.where(inside, -log_len, -np.inf)

    def score(x):
        return np.zeros_like(x)

    return DensityOnRn(1, log_density, Box.interval(a, b, True, True), score, f"U[{a:g},{b:g}]")


def exponential(rate: float = 1.0) -> DensityOnRn:
    if rate <= 0:
        raise DomainError("rate must be positive")
    lam = float(rate)

    def log_density(x):
        return np.where(x[:, 0] >= 0, math.log(lam) - lam * x[:, 0], -np.inf)

    def score(x):
        return np.full_like(x, -lam)

    return DensityOnRn(1, log_density, Box.interval(0.0, EXP_TAIL_WIDTH / lam, hard_lo=True),
                       score, f"Exp({lam:g})")


QUARTIC_LOG_Z = math.log(2 * math.gamma(1.25))


def quartic() -> DensityOnRn:
    """exp(-x^4) / Z with Z = 2 Gamma(5/4)."""

    def log_density(x):
        return -x[:, 0] ** 4 - QUARTIC_LOG_Z

    def score(x):
        return -4 * x ** 3

    # exp(-3.5^4) ~ 1e-65: the box holds every representable bit of mass.
    return DensityOnRn(1, log_density, Box.interval(-3.5, 3.5), score, "quartic")


def product(*parts: DensityOnRn) -> DensityOnRn:
    """Density of independent coordinates."""
    dims = [p.dim for p in parts]
    cuts = np.cumsum([0] + dims)

    def log_density(x):
        return sum(p.log_density(x[:, cuts[i]:cuts[i + 1]]) for i, p in enumerate(parts))

    def score(x):
        return np.concatenate(
            [p.score_at(x[:, cuts[i]:cuts[i + 1]]) for i, p in enumerate(parts)], axis=1
        )

    return DensityOnRn(int(cuts[-1]), log_density, product_box(*(p.support for p in parts)),
                       score, " x ".join(p.name for p in parts))


def shifted(d: DensityOnRn, c) -> DensityOnRn:
    """Law of X + c."""
    c = np.broadcast_to(np.asarray(c, dtype=float), (d.dim,)).copy()
    return DensityOnRn(
        d.dim,
        lambda x: d.log_density(x - c),
        d.support.shifted(c),
        lambda x: d.score_at(x - c),
        f"{d.name}+{_fmt(c)}",
    )


def scaled(d: DensityOnRn, s: float) -> DensityOnRn:
    """Law of s * X, density s^{-n} d(x/s)."""
    if s <= 0:
        raise DomainError("scale must be positive")
    shift = d.dim * math.log(s)
    return DensityOnRn(
        d.dim,
        lambda x: d.log_density(x / s) - shift,
        d.support.scaled(s),
        lambda x: d.score_at(x / s) / s,
        f"{s:g}*{d.name}",
    )


def from_potential(potential: ArrayFn, support: Box, q: Optional[QuadratureSpec] = None,
                   name: str = "custom", score: Optional[ArrayFn] = None) -> DensityOnRn:
    """Normalize exp(-potential) numerically over ``support``."""
    q = q or DEFAULT_QUAD
    pts, w = q.rule(support)
    v = potential(pts)
    vmin = float(np.min(v))
    z = float(np.sum(w * np.exp(-(v - vmin))))
    if not z > 0 or not np.isfinite(z):
        raise DomainError("potential is not normalizable on the given box")
    log_z = math.log(z) - vmin

    def log_density(x):
        inside = np.all((x >= np.array(support.lo)) | ~np.array(support.hard_lo), axis=1)
        inside &= np.all((x <= np.array(support.hi)) | ~np.array(support.hard_hi), axis=1)
        return np.where(inside, -potential(x) - log_z, -np.inf)

    return DensityOnRn(support.dim, log_density, support, score, name)


def _fmt(a) -> str:
    a = np.atleast_1d(a)
    return f"{a[0]:g}" if a.size == 1 else "(" + ",".join(f"{v:g}" for v in a) + ")"


# ---------------------------------------------------------------------------
# Prior constructors
# ---------------------------------------------------------------------------


def gaussian_prior(mean=0.0, variance=1.0, dim: Optional[int] = None,
                   q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    d = gaussian(mean, variance, dim)
    K = 1.0 / float(np.max(np.atleast_1d(variance)))
    return LogConcavePrior.from_density(d, K, q, "gaussian",
                                        {"mean": mean, "variance": variance, "dim": d.dim})


def laplace_prior(scale: float = 1.0, loc: float = 0.0,
                  q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    return LogConcavePrior.from_density(laplace(scale, loc), 0.0, q, "laplace",
                                        {"scale": scale, "loc": loc})


def uniform_prior(a: float = 0.0, b: float = 1.0,
                  q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    return LogConcavePrior.from_density(uniform(a, b), 0.0, q, "uniform", {"a": a, "b": b})


def exponential_prior(rate: float = 1.0, q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    return LogConcavePrior.from_density(exponential(rate), 0.0, q, "exponential", {"rate": rate})


def quartic_prior(q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    return LogConcavePrior.from_density(quartic(), 0.0, q, "quartic")


def product_prior(*parts: LogConcavePrior, q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    d = product(*(p.base for p in parts))
    return LogConcavePrior.from_density(d, min(p.K for p in parts), q, "product",
                                        {"parts": [p.family for p in parts]})


def iid_product_prior(part: LogConcavePrior, n: int,
                      q: Optional[QuadratureSpec] = None) -> LogConcavePrior:
    return product_prior(*([part] * n), q=q)
