"""Gaussian tilting of a log-concave density about its own barycenter.

For a density rho and delta > 0 the tilt map is

    T(m) = int x e^{-delta |x - m|^2 / 2} rho(x) dx / int e^{-delta |x - m|^2 / 2} rho(x) dx,

whose unique fixed point m_delta centers the tilted measure
mu_delta = rho e^{-delta |x - m_delta|^2 / 2} / C_delta.  Its derivative is
delta times the tilted covariance, so delta * lambda_max(Cov) certifies
contraction.  Integrals are evaluated in log space on a window of half-width
``WINDOW_SIGMAS / sqrt(delta)`` around m, clipped to rho's support.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ContractionViolation, DomainError, IterationError
from .measures import (
    DEFAULT_QUAD,
    TINY,
    Box,
    DensityOnRn,
    LogConcavePrior,
    QuadratureSpec,
    ReferenceMeasure,
    barycenter,
    relative_entropy,
    relative_fisher_information,
    second_moment_about,
    variance,
)

WINDOW_SIGMAS = 12.0
LOG_TINY = math.log(TINY)

Rho = Union[LogConcavePrior, DensityOnRn]


def _density(rho: Rho) -> DensityOnRn:
    return rho.base if isinstance(rho, LogConcavePrior) else rho


def _window(d: DensityOnRn, delta: float, m: np.ndarray) -> Box:
    s = d.support
    hw = WINDOW_SIGMAS / math.sqrt(delta)
    lo = np.maximum(s.lo, m - hw)
    hi = np.minimum(s.hi, m + hw)
    if np.any(lo >= hi):
        return s
    return Box(lo, hi, breaks=s.breaks)


@dataclass(frozen=True)
class _Tilted:
    log_C: float
    mean: np.ndarray
    cov: np.ndarray


def _tilted(d: DensityOnRn, delta: float, m, q: Optional[QuadratureSpec], cov=False) -> _Tilted:
    m = np.broadcast_to(np.asarray(m, dtype=float), (d.dim,))
    q = q or DEFAULT_QUAD
    pts, w = QuadratureSpec(q.nodes_per_axis, q.scheme).rule(_window(d, delta, m))
    with np.errstate(divide="ignore"):
        logf = np.log(w) + d.log_density(pts) - 0.5 * delta * np.sum((pts - m) ** 2, axis=1)
    top = float(np.max(logf))
    if not top > LOG_TINY:
        raise DomainError(f"tilted mass underflows at m = {m}: m is too far from the support")
    p = np.exp(logf - top)
    z = p.sum()
    mean = p @ pts / z
    c = None
    if cov:
        centered = pts - mean
        c = (centered * (p / z)[:, None]).T @ centered
    return _Tilted(top + math.log(z), mean, c)


def tilt_map(rho: Rho, delta: float, m, q: Optional[QuadratureSpec] = None) -> np.ndarray:
    """Barycenter of rho reweighted by exp(-delta |x - m|^2 / 2)."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    return _tilted(_density(rho), delta, m, q).mean


def contraction_certificate(rho: Rho, delta: float, m, q: Optional[QuadratureSpec] = None) -> float:
    """Operator norm of the tilt map's Jacobian at m: delta * largest tilted variance."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    t = _tilted(_density(rho), delta, m, q, cov=True)
    return float(delta * np.linalg.eigvalsh(t.cov)[-1])


def log_normalizer(rho: Rho, delta: float, m, q: Optional[QuadratureSpec] = None) -> float:
    """log of int exp(-delta |x - m|^2 / 2) rho(x) dx."""
    if delta == 0:
        return 0.0
    return _tilted(_density(rho), delta, m, q).log_C


@dataclass
class TiltedFixedPointResult:
    delta: float
    m_delta: np.ndarray
    iterations: int
    residual: float
    lambda_delta: float
    C_delta: float
    g_delta: float
    converged: bool
    trace: list = field(default_factory=list, repr=False)
    observed_rate: float = 0.0
    lambda_path: float = 0.0

    def contraction_rate_ok(self, slack: float = 1e-12) -> bool:
        """Error after k steps <= lambda^k / (1 - lambda) * first-step displacement."""
        if len(self.trace) < 2:
            return True
        lam = self.lambda_path
        first = float(np.linalg.norm(self.trace[1] - self.trace[0]))
        for k, x in enumerate(self.trace):
            err = float(np.linalg.norm(x - self.m_delta))
            if err > lam ** k / (1 - lam) * first + slack:
                return False
        return True


def _observed_rate(trace: list, floor: float = 1e-13) -> float:
    steps = [float(np.linalg.norm(b - a)) for a, b in zip(trace[:-1], trace[1:])]
    ratios = [s1 / s0 for s0, s1 in zip(steps[:-1], steps[1:]) if s0 > floor and s1 > floor]
    if not ratios:
        return 0.0
    tail = ratios[-min(len(ratios), 10):]
    return float(np.exp(np.mean(np.log(tail))))


def solve_m_delta(rho: Rho, delta: float, q: Optional[QuadratureSpec] = None,
                  tol: float = 1e-10, max_iter: int = 10_000) -> TiltedFixedPointResult:
    """Iterate the tilt map from the barycenter until successive steps fall below tol."""
    d = _density(rho)
    x = np.array(rho.barycenter if isinstance(rho, LogConcavePrior) else barycenter(d, q), dtype=float)
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    if delta == 0:
        return TiltedFixedPointResult(0.0, x, 0, 0.0, 0.0, 1.0, 0.0, True, [x.copy()])
    trace = [x.copy()]
    converged = False
    for it in range(1, max_iter + 1):
        nxt = _tilted(d, delta, x, q).mean
        step = float(np.linalg.norm(nxt - x))
        trace.append(nxt.copy())
        done = step < tol * (1 + float(np.linalg.norm(x)))
        x = nxt
        if done:
            converged = True
            break
    if not converged:
        raise IterationError(f"tilt iteration did not converge in {max_iter} steps", trace)
    t = _tilted(d, delta, x, q, cov=True)
    residual = float(np.linalg.norm(t.mean - x))
    lam = float(delta * np.linalg.eigvalsh(t.cov)[-1])
    if not lam < 1:
        raise ContractionViolation(
            f"contraction certificate {lam:.6f} >= 1 at delta = {delta}: rho is not log-concave", trace
        )
    sample = trace[:: max(1, len(trace) // 50)]
    lam_path = max([lam] + [contraction_certificate(d, delta, y, q) for y in sample])
    return TiltedFixedPointResult(
        delta=float(delta), m_delta=x, iterations=it, residual=residual, lambda_delta=lam,
        C_delta=math.exp(t.log_C), g_delta=-t.log_C, converged=True, trace=trace,
        observed_rate=_observed_rate(trace), lambda_path=lam_path,
    )


def g_of_delta(rho: Rho, delta: float, q: Optional[QuadratureSpec] = None) -> float:
    """-log of the normalizer of the tilted measure centered at m_delta."""
    if delta == 0:
        return 0.0
    return solve_m_delta(rho, delta, q).g_delta


def g_bound(delta: float, var_rho: float, n: int = 1) -> float:
    """delta Var/2 below delta = n/Var, (n/2)(1 + log(delta Var/n)) above."""
    if delta < 0 or not var_rho > 0:
        raise DomainError("need delta >= 0 and Var > 0")
    if delta < n / var_rho:
        return 0.5 * delta * var_rho
    return 0.5 * n * (1 + math.log(delta * var_rho / n))


def tilted_density(rho: Rho, delta: float, q: Optional[QuadratureSpec] = None,
                   fixed_point: Optional[TiltedFixedPointResult] = None) -> DensityOnRn:
    """mu_delta as a density on rho's support."""
    d = _density(rho)
    fp = fixed_point or solve_m_delta(rho, delta, q)
    m, log_c = fp.m_delta, -fp.g_delta

    def log_density(x):
        return d.log_density(x) - 0.5 * delta * np.sum((x - m) ** 2, axis=-1) - log_c

    def score(x):
        return d.score_at(x) - delta * (x - m)

    return DensityOnRn(d.dim, log_density, d.support, score, name=f"{d.name}~tilt({delta:g})")


def tilted_reference(prior: LogConcavePrior, delta: float,
                     q: Optional[QuadratureSpec] = None) -> ReferenceMeasure:
    """mu_delta is (K + delta)-strongly log-concave, hence LSI(1 / (K + delta))."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    mu = tilted_density(prior, delta, q)
    return ReferenceMeasure.bakry_emery(mu, prior.K + delta, label=f"tilted(delta={delta:g})")


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass
class ArgmaxReport:
    delta: float
    m_delta: np.ndarray
    grid_argmax: np.ndarray
    cell: float
    within_cell: bool
    rays_monotone: bool
    worst_ray_increase: float

    @property
    def passed(self) -> bool:
        return self.within_cell and self.rays_monotone


def _directions(n: int, count: int = 8) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    ang = 2 * math.pi * np.arange(count) / count
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def verify_argmax(rho: Rho, delta: float, q: Optional[QuadratureSpec] = None,
                  points_per_axis: int = 41, slack: float = 1e-10,
                  fixed_point: Optional[TiltedFixedPointResult] = None) -> ArgmaxReport:
    """Scan m -> int exp(-delta |x - m|^2 / 2) rho dx around m_delta."""
    d = _density(rho)
    if d.dim > 2:
        raise DomainError("argmax scan is limited to n <= 2")
    fp = fixed_point or solve_m_delta(rho, delta, q)
    md = fp.m_delta
    radius = 3 / math.sqrt(delta)
    offs = np.linspace(-radius, radius, points_per_axis)
    cell = float(offs[1] - offs[0])
    if d.dim == 1:
        cands = md[None, :] + offs[:, None]
    else:
        gx, gy = np.meshgrid(offs, offs, indexing="ij")
        cands = md[None, :] + np.stack([gx.ravel(), gy.ravel()], axis=1)
    vals = np.array([_safe_log_c(d, delta, c, q) for c in cands])
    best = cands[int(np.argmax(vals))]
    within = bool(np.all(np.abs(best - md) <= cell + 1e-12))

    f0 = math.exp(fp.g_delta * -1)
    worst = -math.inf
    radii = offs[offs > 0]
    for u in _directions(d.dim):
        prev = f0
        for r in radii:
            cur = math.exp(_safe_log_c(d, delta, md + r * u, q))
            worst = max(worst, cur - prev)
            prev = cur
    return ArgmaxReport(float(delta), md, best, cell, within, bool(worst <= slack), float(worst))


def _safe_log_c(d, delta, m, q) -> float:
    try:
        return _tilted(d, delta, m, q).log_C
    except DomainError:
        return -math.inf


@dataclass
class ContinuityReport:
    deltas: np.ndarray
    m: np.ndarray
    max_jump: float
    refined_max_jump: float
    refinement_ratio: float
    shrinks: bool
    envelope_ok: bool
    log_envelope: np.ndarray
    note: str = ("finitely many delta values are sampled; the local Lipschitz constant "
                 "of delta -> m_delta is not estimated")

    @property
    def passed(self) -> bool:
        return self.shrinks and self.envelope_ok


def _max_jump(ms: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(np.diff(ms, axis=0), axis=1)))


def continuity_probe(rho: Rho, deltas: Sequence[float], q: Optional[QuadratureSpec] = None,
                     min_ratio: float = 1.5, floor: float = 1e-12) -> ContinuityReport:
    """Solve m_delta on a grid and on its midpoint refinement, compare the largest jumps."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size < 10 or np.any(np.diff(deltas) <= 0) or np.any(deltas <= 0):
        raise DomainError("need at least 10 increasing positive delta values")
    if deltas[-1] / deltas[0] < 10:
        raise DomainError("delta grid must span at least one decade")
    d = _density(rho)
    mids = np.sqrt(deltas[:-1] * deltas[1:])
    fine = np.sort(np.concatenate([deltas, mids]))
    sols = {float(x): solve_m_delta(rho, x, q).m_delta for x in fine}
    coarse_m = np.array([sols[float(x)] for x in deltas])
    fine_m = np.array([sols[float(x)] for x in fine])
    j1, j2 = _max_jump(coarse_m), _max_jump(fine_m)
    ratio = j1 / j2 if j2 > 0 else math.inf
    shrinks = j1 < floor or ratio >= min_ratio

    m2 = second_moment_about(d, 0.0, q)
    m1 = float(_abs_moment(d, q))
    log_env = 0.5 * deltas * m2 + (math.log(m1) if m1 > 0 else -math.inf)
    norms = np.linalg.norm(coarse_m, axis=1)
    with np.errstate(divide="ignore"):
        env_ok = bool(np.all(np.log(norms) <= log_env + 1e-12))
    return ContinuityReport(deltas, coarse_m, j1, j2, ratio, bool(shrinks), env_ok, log_env)


def _abs_moment(d: DensityOnRn, q) -> float:
    q = q or DEFAULT_QUAD
    pts, w = q.rule(d.support)
    p = w * d.density(pts)
    return float(p @ np.linalg.norm(pts, axis=1) / p.sum())


@dataclass
class GInequalityRow:
    delta: float
    m_delta: np.ndarray
    C_delta: float
    g: float
    g_bound: float
    lambda_delta: float
    identity_residual: float
    bound_ok: bool
    identity_ok: bool


@dataclass
class GInequalityReport:
    rows: list
    monotone: bool
    variance: float

    @property
    def passed(self) -> bool:
        return self.monotone and all(r.bound_ok and r.identity_ok for r in self.rows)


def identity_residual(rho: Rho, delta: float, q: Optional[QuadratureSpec] = None,
                      fixed_point: Optional[TiltedFixedPointResult] = None) -> float:
    """D_{mu_delta}(rho) - I_{mu_delta}(rho) / (2 delta) - log C_delta, by separate quadratures."""
    d = _density(rho)
    fp = fixed_point or solve_m_delta(rho, delta, q)
    mu = tilted_density(rho, delta, q, fp)
    D = relative_entropy(d, mu, q)
    I = relative_fisher_information(d, mu, q)
    return D - I / (2 * delta) - math.log(fp.C_delta)


def verify_g_inequality(rho: Rho, deltas: Sequence[float], q: Optional[QuadratureSpec] = None,
                        tol: float = 1e-6) -> GInequalityReport:
    d = _density(rho)
    var = rho.variance if isinstance(rho, LogConcavePrior) else variance(d, q)
    rows = []
    for delta in deltas:
        fp = solve_m_delta(rho, delta, q)
        gb = g_bound(delta, var, d.dim)
        res = identity_residual(rho, delta, q, fp) if delta > 0 else 0.0
        rows.append(GInequalityRow(float(delta), fp.m_delta, fp.C_delta, fp.g_delta, gb,
                                   fp.lambda_delta, res, fp.g_delta <= gb + tol, abs(res) <= tol))
    gs = [r.g for r in sorted(rows, key=lambda r: r.delta)]
    monotone = all(b >= a - tol for a, b in zip(gs[:-1], gs[1:]))
    return GInequalityReport(rows, monotone, float(var))


def g_sweep_csv(rho: Rho, deltas: Sequence[float], q: Optional[QuadratureSpec] = None) -> str:
    """CSV with columns delta, m_0.., C_delta, g, g_bound, lambda."""
    d = _density(rho)
    var = rho.variance if isinstance(rho, LogConcavePrior) else variance(d, q)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta"] + [f"m_{i}" for i in range(d.dim)] + ["C_delta", "g", "g_bound", "lambda"])
    for delta in deltas:
        fp = solve_m_delta(rho, delta, q)
        w.writerow([repr(float(delta))] + [repr(float(v)) for v in fp.m_delta]
                   + [repr(float(v)) for v in (fp.C_delta, fp.g_delta, g_bound(delta, var, d.dim),
                                               fp.lambda_delta)])
    return buf.getvalue()
