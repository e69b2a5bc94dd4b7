"""Closed-form Bayesian Cramer-Rao-type bounds and the scenario report.

Notation used throughout: ``n`` is the parameter dimension, ``P = Var(pi)/n``,
``J = (1/n) int I(theta) dpi(theta)`` and ``K`` the strong log-concavity
constant of the prior.  Bounds that degenerate (infinite prior Fisher
information, unmet preconditions) come back flagged instead of raising.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, InvariantViolation
from .measures import (
    DensityOnRn,
    LogConcavePrior,
    QuadratureSpec,
    ReferenceMeasure,
    differential_entropy,
    fisher_information_J,
    lsi_check,
    relative_entropy,
    relative_fisher_information,
    variance,
)
from .models import (
    FisherAverage,
    ParametricModel,
    average_fisher_information,
    model_fisher_information,
    regularity_check,
)
from .oracles import iid_sum_entropy, joint_oracles, mc_uniform_gaussian

TWO_PI_E = 2 * math.pi * math.e
LOGCONCAVE_CONSTANT = 4 * math.exp(-2)      # 4 / e^2 ~ 0.5413
BL_TOL = 1e-9


# ---------------------------------------------------------------------------
# Scalar building blocks
# ---------------------------------------------------------------------------


def phi(x: float) -> float:
    """x on [0, 1), 1 + log x beyond."""
    if x < 0:
        raise DomainError(f"phi is defined on x >= 0, got {x}")
    return x if x < 1 else 1.0 + math.log(x)


def psi(a: float, b: float) -> float:
    """Value of the optimized bound per dimension as a function of a = KP, b = JP."""
    if not (-BL_TOL <= a <= 1 + BL_TOL) or b < 0:
        raise DomainError(f"psi needs 0 <= a <= 1 and b >= 0, got a={a}, b={b}")
    a = min(max(a, 0.0), 1.0)
    c = a * a + b
    if b < 2 * a + 1:
        return math.sqrt(c) - a
    r = c + math.sqrt(max(c * c - 4 * a * c, 0.0))
    return 0.5 * (1 - a + 2 * c / r + math.log(r / 2 - a))


def main_proof_rhs(delta: float, K: float, P: float, J: float, n: int = 1) -> float:
    """Upper bound on I(pi; P_theta) for a given tilt delta before optimizing over it."""
    if delta < 0 or P <= 0:
        raise DomainError("need delta >= 0 and P > 0")
    if delta == 0:
        if K > 0:
            return n * J / (2 * K)
        return 0.0 if J == 0 else math.inf
    base = -K * delta * n * P / (2 * (K + delta)) + n * J / (2 * (K + delta))
    if delta < 1 / P:
        return base + 0.5 * delta * n * P
    return base + 0.5 * n * (1 + math.log(delta * P))


def main_proof_rhs_grid(deltas, K: float, P: float, J: float, n: int = 1) -> np.ndarray:
    """``main_proof_rhs`` over an array of positive deltas."""
    d = np.asarray(deltas, dtype=float)
    if np.any(d <= 0) or P <= 0:
        raise DomainError("need delta > 0 and P > 0")
    base = -K * d * n * P / (2 * (K + d)) + n * J / (2 * (K + d))
    tail = np.where(d < 1 / P, 0.5 * d * n * P, 0.5 * n * (1 + np.log(np.maximum(d * P, 1.0))))
    return base + tail


class DeltaChoice(NamedTuple):
    delta: float
    branch: str       # "small" (delta < 1/P) or "large" (delta >= 1/P)


def delta_star(K: float, P: float, J: float) -> DeltaChoice:
    """Minimizing tilt for ``main_proof_rhs``."""
    if P <= 0 or K < 0 or J < 0:
        raise DomainError("need P > 0, K >= 0, J >= 0")
    if J * P < 1 + 2 * K * P:
        d = math.sqrt(K * K + J / P) - K
        choice = DeltaChoice(d, "small")
        if not d * P < 1 + 1e-12:
            raise InvariantViolation(f"small-branch delta {d} is not below 1/P")
    else:
        c = K * K * P + J
        d = 0.5 * ((c - 2 * K) + math.sqrt(max(c * c - 4 * K * c, 0.0)))
        choice = DeltaChoice(d, "large")
        if not d * P >= 1 - 1e-12:
            raise InvariantViolation(f"large-branch delta {d} is below 1/P")
    return choice


def theorem2_bound(K: float, P: float, J: float, n: int = 1, form: str = "phi") -> float:
    """I(pi; P_theta) <= n phi(sqrt((KP)^2 + JP) - KP), or the sharper n psi(KP, JP)."""
    if P <= 0:
        raise DomainError("P must be positive")
    kp, jp = K * P, J * P
    if kp > 1 + BL_TOL:
        raise InvariantViolation(f"K*P = {kp} exceeds 1: prior is inconsistent with Brascamp-Lieb")
    if form == "phi":
        return n * phi(max(math.sqrt(kp * kp + jp) - kp, 0.0))
    if form == "psi":
        return n * psi(kp, jp)
    raise DomainError(f"unknown form {form!r}")


def gaussian_sequence_sharp(snr: float, n: int = 1) -> float:
    if snr < 0:
        raise DomainError("snr must be nonnegative")
    return 0.5 * n * math.log1p(snr)


# ---------------------------------------------------------------------------
# Bounds assembled from a prior and a model
# ---------------------------------------------------------------------------


class BoundValue(NamedTuple):
    value: float
    degenerate: bool = False
    note: str = ""


def _fisher(m, prior, q, fisher: Optional[FisherAverage]) -> FisherAverage:
    return fisher if fisher is not None else average_fisher_information(m, prior, q)


class Theorem1Result(NamedTuple):
    value: float          # (C/2)(I_mu(pi) + int I dpi) - D_mu(pi), an upper bound on MI
    relative_entropy: float
    relative_fisher: float
    fisher_total: float
    lsi_constant: float
    degenerate: bool


def theorem1_rhs(mu: ReferenceMeasure, prior: LogConcavePrior, m: ParametricModel,
                 q: Optional[QuadratureSpec] = None,
                 fisher: Optional[FisherAverage] = None) -> Theorem1Result:
    """Upper bound on I(pi; P_theta) from a reference measure satisfying LSI(C)."""
    fa = _fisher(m, prior, q, fisher)
    d = relative_entropy(prior.base, mu.density, q)
    i_rel = relative_fisher_information(prior.base, mu.density, q)
    C = mu.lsi_constant
    if math.isinf(i_rel):
        return Theorem1Result(math.inf, d, i_rel, fa.total, C, True)
    return Theorem1Result(0.5 * C * (i_rel + fa.total) - d, d, i_rel, fa.total, C, False)


def efroimovich_bound(prior: LogConcavePrior, m: ParametricModel,
                      q: Optional[QuadratureSpec] = None, multidim: bool = True,
                      fisher: Optional[FisherAverage] = None) -> BoundValue:
    """Lower bound on (1/2 pi e) exp((2/n) h(theta | X)).

    n / (J(pi) + int I dpi) in general; the one-dimensional form is the case n = 1.
    """
    n = prior.dim
    if not multidim and n != 1:
        raise DomainError("the one-dimensional form needs n = 1")
    if math.isinf(prior.fisher_J):
        return BoundValue(0.0, True, "degenerate: J(pi) = +inf")
    fa = _fisher(m, prior, q, fisher)
    denom = prior.fisher_J + fa.total
    return BoundValue(n / denom if denom > 0 else math.inf)


def van_trees_bound(prior: LogConcavePrior, m: ParametricModel,
                    q: Optional[QuadratureSpec] = None,
                    fisher: Optional[FisherAverage] = None) -> BoundValue:
    """Lower bound on E|theta - estimator|^2: n^2 / (J(pi) + int I dpi)."""
    n = prior.dim
    if math.isinf(prior.fisher_J):
        return BoundValue(0.0, True, "degenerate: J(pi) = +inf")
    fa = _fisher(m, prior, q, fisher)
    denom = prior.fisher_J + fa.total
    return BoundValue(n * n / denom if denom > 0 else math.inf)


class LogConcave1D(NamedTuple):
    bound: float              # lower bound on exp(2 h(theta | X))
    precondition_met: bool    # Var(pi) >= 1 / E I
    mse_corollary: float      # (4/e^2) / E I, reported only
    mse_via_entropy: float    # bound / (2 pi e): implied lower bound on the MSE
    constant: float


def logconcave_1d_bound(prior: LogConcavePrior, m: ParametricModel,
                        q: Optional[QuadratureSpec] = None,
                        fisher: Optional[FisherAverage] = None) -> LogConcave1D:
    """exp(2 h(theta|X)) >= 4 / (e^2 E I), valid when Var(pi) >= 1 / E I."""
    if prior.dim != 1:
        raise DomainError("the log-concave corollary is one-dimensional")
    fa = _fisher(m, prior, q, fisher)
    ei = fa.total
    if ei <= 0:
        return LogConcave1D(0.0, False, 0.0, 0.0, LOGCONCAVE_CONSTANT)
    bound = LOGCONCAVE_CONSTANT / ei
    return LogConcave1D(bound, prior.variance >= (1 - 1e-6) / ei, bound, bound / TWO_PI_E,
                        LOGCONCAVE_CONSTANT)


def classical_crb(m: ParametricModel, theta, q: Optional[QuadratureSpec] = None) -> BoundValue:
    """1 / I(theta) for unbiased estimators of a scalar parameter."""
    if m.theta_dim != 1:
        raise DomainError("the classical bound is stated for n = 1")
    info = model_fisher_information(m, theta, q)
    if info <= 0:
        return BoundValue(math.inf, True, "I(theta) = 0")
    return BoundValue(1.0 / info)


def reverse_epi_rhs(mu: DensityOnRn, k: int, q: Optional[QuadratureSpec] = None,
                    var_tol: float = 1e-4) -> BoundValue:
    """(k e^2 J(mu) / n) exp((2/n) h(S_1)) for mu normalized to Var(mu) = n."""
    n = mu.dim
    v = variance(mu, q)
    if abs(v - n) > var_tol:
        raise DomainError(f"reverse EPI needs Var(mu) = n; got {v}")
    j = fisher_information_J(mu, q)
    if math.isinf(j):
        return BoundValue(math.inf, True, "degenerate: J(mu) = +inf")
    h1 = differential_entropy(mu, q)
    return BoundValue(k * math.e ** 2 * j / n * math.exp(2 * h1 / n))


@dataclass
class ReverseEPISweep:
    rows: list                    # dicts: k, h_sk, lhs, rhs, holds
    threshold: Optional[int]      # smallest k from which the inequality holds for every larger tested k
    first_hold: Optional[int]     # smallest k at which it holds at all
    persists: bool
    tol: float


def reverse_epi_sweep(mu: DensityOnRn, ks: Sequence[int], q: Optional[QuadratureSpec] = None,
                      tol: float = 1e-3) -> ReverseEPISweep:
    """Compare exp((2/n) h(S_k)) against the reverse-EPI right-hand side over ``ks``."""
    ks = sorted(ks)
    rows = []
    for k in ks:
        rhs = reverse_epi_rhs(mu, k, q)
        h_sk = iid_sum_entropy(mu, k).entropy
        lhs = math.exp(2 * h_sk / mu.dim)
        rows.append({"k": k, "h_sk": h_sk, "lhs": lhs, "rhs": rhs.value,
                     "holds": bool(lhs <= rhs.value + tol)})
    holds = [r["holds"] for r in rows]
    first = next((r["k"] for r in rows if r["holds"]), None)
    threshold = None
    for i in range(len(rows)):
        if all(holds[i:]):
            threshold = rows[i]["k"]
            break
    persists = first is not None and threshold == first
    return ReverseEPISweep(rows, threshold, first, persists, tol)


# ---------------------------------------------------------------------------
# Scenario report
# ---------------------------------------------------------------------------


@dataclass
class InequalityCheck:
    """lhs <= rhs, with slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    slack: float
    tol: float
    asserted: bool
    holds: bool
    note: str = ""

    @classmethod
    def make(cls, name, lhs, rhs, tol=1e-4, asserted=True, note=""):
        lhs, rhs = float(lhs), float(rhs)
        slack = rhs - lhs if not (math.isinf(lhs) and lhs == rhs) else 0.0
        return cls(name, lhs, rhs, slack, tol, asserted, bool(slack >= -tol), note)

    def consistent(self) -> bool:
        return self.holds == bool(self.slack >= -self.tol)


@dataclass
class Scenario:
    """A resolved prior/model pair plus the reference measures to try."""

    label: str
    prior: LogConcavePrior
    model: ParametricModel
    references: list = field(default_factory=list)
    quad: Optional[QuadratureSpec] = None
    oracles: bool = True
    monte_carlo: bool = False
    mc_samples: int = 10**6
    seed: Optional[int] = None
    tol: float = 1e-4


@dataclass
class BoundReport:
    label: str
    n: int
    K: float
    P: float
    J: float
    fisher_total: float = math.nan
    prior_fisher_J: float = math.nan
    prior_variance: float = math.nan
    kp: float = math.nan
    jp: float = math.nan
    snr: Optional[float] = None
    bounds: dict = field(default_factory=dict)
    oracles: dict = field(default_factory=dict)
    theorem1: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def check(self, name: str) -> InequalityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list:
        return [c for c in self.checks if c.asserted and not c.holds]

    def consistent(self) -> bool:
        return all(c.consistent() for c in self.checks)

    @property
    def ok(self) -> bool:
        return not self.failures()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        data = dict(data)
        data["checks"] = [InequalityCheck(**c) for c in data.get("checks", [])]
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        return cls.from_dict(json.loads(text))

    def flat(self) -> dict:
        row = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("bounds", "oracles", "errors", "meta"):
                for k, x in v.items():
                    row[f"{f.name}.{k}"] = x
            elif f.name == "theorem1":
                for ref, comps in v.items():
                    for k, x in comps.items():
                        row[f"theorem1.{ref}.{k}"] = x
            elif f.name == "checks":
                for c in v:
                    row[f"check.{c.name}.slack"] = c.slack
                    row[f"check.{c.name}.holds"] = c.holds
            elif f.name == "flags":
                row["flags"] = ";".join(v)
            else:
                row[f.name] = v
        return row

    def csv_header(self) -> list:
        return list(self.flat())

    def csv_row(self) -> list:
        return list(self.flat().values())


def _report_quad(s: Scenario) -> Optional[QuadratureSpec]:
    if s.quad is not None:
        return s.quad
    if s.prior.dim > 1 or s.model.obs_space.dim > 1:
        return QuadratureSpec(64)
    return None


def _snr(s: Scenario) -> Optional[float]:
    if s.model.label not in ("gaussian-location", "gaussian-sequence"):
        return None
    p = s.model.params
    eff_noise = p["noise_variance"] / p.get("repeats", 1)
    return s.prior.variance / (s.prior.dim * eff_noise)


def assemble_report(s: Scenario) -> BoundReport:
    """Run every applicable bound and oracle; failures in one part do not abort the rest."""
    q = _report_quad(s)
    prior, m, tol = s.prior, s.model, s.tol
    n = prior.dim
    rep = BoundReport(s.label, n, prior.K, prior.P, math.nan,
                      prior_fisher_J=prior.fisher_J, prior_variance=prior.variance,
                      kp=prior.K * prior.P)
    rep.meta = {"nodes_per_axis": (q or QuadratureSpec()).nodes_for(n), "seed": s.seed,
                "model": m.label, "prior": prior.base.name}

    def attempt(name, fn):
        try:
            return fn()
        except Exception as exc:        # noqa: BLE001 - recorded per bound
            rep.errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    fa = attempt("fisher", lambda: average_fisher_information(m, prior, q))
    if fa is None:
        return rep
    rep.J, rep.fisher_total = fa.J, fa.total
    rep.jp = fa.J * prior.P
    rep.snr = _snr(s)

    reg = attempt("regularity", lambda: regularity_check(m, prior, q))
    if reg is not None:
        rep.checks.append(InequalityCheck.make("regularity", reg.max_norm, 1e-5, 0.0,
                                               note=reg.note))
        if not reg.passed:
            rep.flags.append("regularity condition fails on the grid")

    rep.checks.append(InequalityCheck.make("brascamp_lieb", rep.kp, 1.0, BL_TOL))
    if math.isinf(prior.fisher_J):
        rep.flags.append("degenerate: J(pi) = +inf")

    phi_b = attempt("theorem2_phi", lambda: theorem2_bound(prior.K, prior.P, fa.J, n, "phi"))
    psi_b = attempt("theorem2_psi", lambda: theorem2_bound(prior.K, prior.P, fa.J, n, "psi"))
    if phi_b is not None:
        rep.bounds["theorem2_phi"] = phi_b
    if psi_b is not None:
        rep.bounds["theorem2_psi"] = psi_b
    if phi_b is not None and psi_b is not None:
        rep.checks.append(InequalityCheck.make("psi_le_phi", psi_b, phi_b, 1e-12))
    ds = attempt("delta_star", lambda: delta_star(prior.K, prior.P, fa.J))
    if ds is not None:
        rep.bounds["delta_star"] = ds.delta
        rep.meta["delta_branch"] = ds.branch
    if rep.snr is not None:
        rep.bounds["gaussian_sequence"] = gaussian_sequence_sharp(rep.snr, n)

    vt = attempt("van_trees", lambda: van_trees_bound(prior, m, q, fa))
    ef = attempt("efroimovich", lambda: efroimovich_bound(prior, m, q, True, fa))
    if vt is not None:
        rep.bounds["van_trees"] = vt.value
    if ef is not None:
        rep.bounds["efroimovich"] = ef.value
    if n == 1:
        lc = attempt("logconcave_1d", lambda: logconcave_1d_bound(prior, m, q, fa))
        if lc is not None:
            rep.bounds["logconcave_1d"] = lc.bound
            rep.bounds["logconcave_1d_mse_corollary"] = lc.mse_corollary
            rep.bounds["logconcave_1d_mse_via_entropy"] = lc.mse_via_entropy
            if not lc.precondition_met:
                rep.flags.append("precondition Var(pi) >= 1/E I not met")
        crb = attempt("classical_crb", lambda: classical_crb(m, prior.barycenter, q))
        if crb is not None:
            rep.bounds["classical_crb_at_barycenter"] = crb.value
    else:
        lc = None

    for ref in s.references:
        name = ref.label or ref.provenance
        t1 = attempt(f"theorem1[{name}]", lambda: theorem1_rhs(ref, prior, m, q, fa))
        if t1 is not None:
            rep.theorem1[name] = t1._asdict()
            rep.bounds[f"theorem1[{name}]"] = t1.value
            if t1.degenerate:
                rep.flags.append(f"degenerate: I_mu(pi) = +inf for {name}")
        lsi = attempt(f"lsi[{name}]", lambda: lsi_check(ref, prior.base, q))
        if lsi is not None:
            rep.checks.append(InequalityCheck.make(f"lsi[{name}]", lsi.lhs, lsi.rhs, 1e-6))

    if s.oracles:
        ov = attempt("oracles", lambda: joint_oracles(prior, m, q))
        if ov is not None:
            mi = ov.mutual_information
            rep.oracles.update(ov._asdict())
            ent_power = math.exp(2 * ov.conditional_entropy / n) / TWO_PI_E
            rep.oracles["entropy_power_posterior"] = ent_power
            for key in ("theorem2_phi", "theorem2_psi", "gaussian_sequence"):
                if key in rep.bounds:
                    rep.checks.append(InequalityCheck.make(key, mi, rep.bounds[key], tol))
            for name, comps in rep.theorem1.items():
                rep.checks.append(InequalityCheck.make(
                    f"theorem1[{name}]", mi, comps["value"], tol,
                    asserted=not comps["degenerate"]))
            if ef is not None:
                rep.checks.append(InequalityCheck.make(
                    "efroimovich", ef.value, ent_power, tol, not ef.degenerate, ef.note))
            if vt is not None:
                rep.checks.append(InequalityCheck.make(
                    "van_trees", vt.value, ov.mmse, tol, not vt.degenerate, vt.note))
            rep.checks.append(InequalityCheck.make("mmse_le_prior_variance", ov.mmse,
                                                   prior.variance, 1e-6))
            if lc is not None:
                note = "" if lc.precondition_met else "precondition not met; informational"
                rep.checks.append(InequalityCheck.make(
                    "logconcave_1d", lc.bound, math.exp(2 * ov.conditional_entropy), tol,
                    lc.precondition_met, note))
                rep.checks.append(InequalityCheck.make(
                    "logconcave_1d_mse", lc.mse_via_entropy, ov.mmse, tol,
                    lc.precondition_met, note))
                rep.checks.append(InequalityCheck.make(
                    "logconcave_1d_mse_corollary", lc.mse_corollary, ov.mmse, tol, False,
                    "constant 4/e^2 applied directly to the MSE; informational"))
            if s.monte_carlo:
                _monte_carlo_checks(s, rep, mi, ov.mmse, attempt)
    return rep


def _monte_carlo_checks(s: Scenario, rep: BoundReport, mi: float, mmse: float, attempt):
    prior, m = s.prior, s.model
    if prior.family != "uniform" or m.label != "gaussian-location" or m.params.get("repeats", 1) != 1:
        rep.flags.append("monte carlo cross-check only available for uniform prior + gaussian channel")
        return
    seed = 0 if s.seed is None else s.seed
    res = attempt("monte_carlo", lambda: mc_uniform_gaussian(
        prior.params["a"], prior.params["b"], m.params["noise_variance"], s.mc_samples, seed))
    if res is None:
        return
    mc_mi, mc_mse = res
    rep.oracles["mc_mutual_information"] = mc_mi.value
    rep.oracles["mc_mutual_information_se"] = mc_mi.std_error
    rep.oracles["mc_mmse"] = mc_mse.value
    rep.oracles["mc_mmse_se"] = mc_mse.std_error
    rep.meta["mc_seed"] = seed
    rep.meta["mc_samples"] = s.mc_samples
    for name, est, val in (("mc_mutual_information", mc_mi, mi), ("mc_mmse", mc_mse, mmse)):
        rep.checks.append(InequalityCheck.make(name, abs(est.value - val), 3 * est.std_error, 0.0,
                                               note="|grid - MC| <= 3 standard errors"))
