"""Declarative scenario files (TOML) and their resolution into a ``Scenario``.

Keys carry their units in the name: ``variance`` and ``noise_variance`` are
always variances, never standard deviations.
"""

from __future__ import annotations

import ast
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import measures as M
from .bounds import Scenario
from .errors import ConfigError, ConfigParseError, DomainError
from .models import MODEL_REGISTRY, make_model
from .tilted import tilted_reference

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRIOR_KEYS = {
    "gaussian": {"mean", "variance", "dim"},
    "laplace": {"scale", "loc", "dim"},
    "uniform": {"a", "b", "dim"},
    "exponential": {"rate", "dim"},
    "quartic": {"dim"},
    "custom": {"potential", "support", "K"},
}
REFERENCE_KINDS = {"gaussian-standard": set(), "bakry-emery": {"K"}, "tilted": {"delta"}}
TOP_KEYS = {"name", "seed", "prior", "model", "reference", "quadrature", "oracles", "output"}


@dataclass
class ScenarioConfig:
    name: str
    prior: dict
    model: dict
    references: list = field(default_factory=list)
    quadrature: dict = field(default_factory=dict)
    oracles: dict = field(default_factory=lambda: {"grid": True, "monte_carlo": False})
    output: dict = field(default_factory=dict)
    seed: Optional[int] = None
    source: str = "<string>"


# ---------------------------------------------------------------------------
# Custom potentials: a whitelisted arithmetic grammar in one variable x
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}


def _compile_node(node):
    if isinstance(node, ast.Expression):
        return _compile_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda x: v
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in _NAMES:
            v = _NAMES[node.id]
            return lambda x: v
        raise ConfigError(f"unknown name {node.id!r} in potential")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, a, b = _BINOPS[type(node.op)], _compile_node(node.left), _compile_node(node.right)
        return lambda x: op(a(x), b(x))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op, a = _UNARY[type(node.op)], _compile_node(node.operand)
        return lambda x: op(a(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id == "abs" and len(node.args) == 1 and not node.keywords:
        a = _compile_node(node.args[0])
        return lambda x: np.abs(a(x))
    raise ConfigError(f"disallowed construct in potential: {ast.dump(node)[:60]}")


def compile_potential(expr: str):
    """Compile ``expr`` (``+ - * / ^ **``, ``abs``, numbers, ``pi``, ``e``, ``x``) to f(x)."""
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"potential does not parse: {exc.msg}") from None
    f = _compile_node(tree)
    return lambda x: np.asarray(f(np.asarray(x, dtype=float)), dtype=float) + 0.0 * x


def convexity_margin(f, lo: float, hi: float, points: int = 2001) -> float:
    """Smallest second difference quotient of f on a uniform grid."""
    x = np.linspace(lo, hi, points)
    h = x[1] - x[0]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = f(x)
    if not np.all(np.isfinite(v)):
        return math.nan
    return float(np.min((v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)))


def _custom_prior(spec: dict, q) -> M.LogConcavePrior:
    for key in ("potential", "support"):
        if key not in spec:
            raise ConfigError(f"custom prior needs {key!r}")
    lo, hi = (float(v) for v in spec["support"])
    if not lo < hi:
        raise ConfigError("custom support must satisfy lo < hi")
    f = compile_potential(spec["potential"])
    K = float(spec.get("K", 0.0))
    margin = convexity_margin(f, lo, hi)
    if not math.isfinite(margin):
        raise ConfigError("potential is not finite on the whole support")
    if margin < K - 1e-6 * max(1.0, K):
        raise ConfigError(f"potential fails the convexity check: min curvature {margin:.4g} < K = {K:g}")
    # faces where the density has not decayed are hard truncations (J = +inf)
    v = f(np.linspace(lo, hi, 2001))
    edge = np.exp(-(np.array([v[0], v[-1]]) - v.min()))
    box = M.Box.interval(lo, hi, bool(edge[0] > 1e-12), bool(edge[1] > 1e-12))
    pot = lambda x: f(x[..., 0])
    base = M.from_potential(pot, box, q, name=f"custom({spec['potential']})")
    return M.LogConcavePrior.from_density(base, K, q, "custom", {"potential": spec["potential"]})


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------


def _unknown(keys, allowed, where):
    extra = set(keys) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}")


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from None
    return validate(data, source)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def validate(data: dict, source: str = "<string>") -> ScenarioConfig:
    _unknown(data, TOP_KEYS, "top level")
    for key in ("prior", "model"):
        if not isinstance(data.get(key), dict):
            raise ConfigError(f"missing [{key}] table")
    prior = dict(data["prior"])
    family = prior.pop("family", None)
    if family not in PRIOR_KEYS:
        raise ConfigError(f"prior.family must be one of {sorted(PRIOR_KEYS)}, got {family!r}")
    _unknown(prior, PRIOR_KEYS[family], f"[prior] ({family})")
    model = dict(data["model"])
    label = model.pop("label", None)
    if label not in MODEL_REGISTRY:
        raise ConfigError(f"model.label must be one of {sorted(MODEL_REGISTRY)}, got {label!r}")
    refs = data.get("reference", [])
    if not isinstance(refs, list):
        raise ConfigError("references are given as [[reference]] tables")
    for r in refs:
        kind = r.get("kind")
        if kind not in REFERENCE_KINDS:
            raise ConfigError(f"reference.kind must be one of {sorted(REFERENCE_KINDS)}, got {kind!r}")
        _unknown(set(r) - {"kind"}, REFERENCE_KINDS[kind], f"[[reference]] ({kind})")
    quad = dict(data.get("quadrature", {}))
    _unknown(quad, {"nodes_per_axis", "scheme"}, "[quadrature]")
    oracles = {"grid": True, "monte_carlo": False, **data.get("oracles", {})}
    _unknown(oracles, {"grid", "monte_carlo", "mc_samples"}, "[oracles]")
    output = dict(data.get("output", {}))
    _unknown(output, {"json", "csv"}, "[output]")
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    if oracles["monte_carlo"] and seed is None:
        raise ConfigError("a seed is required when the Monte Carlo oracle is enabled")
    return ScenarioConfig(
        name=str(data.get("name", Path(source).stem)), prior={"family": family, **prior},
        model={"label": label, **model}, references=[dict(r) for r in refs],
        quadrature=quad, oracles=oracles, output=output, seed=seed, source=source,
    )


def _quad(cfg: ScenarioConfig, nodes: Optional[int]) -> Optional[M.QuadratureSpec]:
    n = nodes if nodes is not None else cfg.quadrature.get("nodes_per_axis")
    scheme = cfg.quadrature.get("scheme", "gauss-legendre")
    if n is None and scheme == "gauss-legendre":
        return None
    try:
        return M.QuadratureSpec(n, scheme)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def build_prior(spec: dict, q=None) -> M.LogConcavePrior:
    spec = dict(spec)
    family = spec.pop("family")
    if family == "custom":
        return _custom_prior(spec, q)
    dim = int(spec.pop("dim", 1))
    try:
        if family == "gaussian":
            return M.gaussian_prior(spec.get("mean", 0.0), spec.get("variance", 1.0), dim, q)
        one = {
            "laplace": lambda: M.laplace_prior(spec.get("scale", 1.0), spec.get("loc", 0.0), q),
            "uniform": lambda: M.uniform_prior(spec.get("a", 0.0), spec.get("b", 1.0), q),
            "exponential": lambda: M.exponential_prior(spec.get("rate", 1.0), q),
            "quartic": lambda: M.quartic_prior(q),
        }[family]()
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"prior: {exc}") from None
    return one if dim == 1 else M.iid_product_prior(one, dim, q)


def _reference(r: dict, prior: M.LogConcavePrior, q) -> M.ReferenceMeasure:
    n = prior.dim
    if r["kind"] == "gaussian-standard":
        return M.ReferenceMeasure.gaussian_standard(n)
    if r["kind"] == "bakry-emery":
        K = float(r.get("K", prior.K))
        if not K > 0:
            raise ConfigError("bakry-emery reference needs K > 0")
        dens = M.gaussian(prior.barycenter, 1.0 / K, n)
        return M.ReferenceMeasure.bakry_emery(dens, K, f"bakry-emery(K={K:g})")
    delta = float(r.get("delta", 1.0))
    if not delta > 0:
        raise ConfigError("tilted reference needs delta > 0")
    return tilted_reference(prior, delta, q)


def resolve(cfg: ScenarioConfig, seed: Optional[int] = None,
            nodes: Optional[int] = None) -> Scenario:
    """Build prior, model and reference measures; raises ConfigError on inconsistency."""
    q = _quad(cfg, nodes)
    prior = build_prior(cfg.prior, q)
    params = {k: v for k, v in cfg.model.items() if k != "label"}
    try:
        model = make_model(cfg.model["label"], **params)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"model {cfg.model['label']!r}: {exc}") from None
    if model.theta_dim != prior.dim:
        raise ConfigError(f"model parameter dimension {model.theta_dim} != prior dimension {prior.dim}")
    refs = [_reference(r, prior, q) for r in cfg.references]
    seed = seed if seed is not None else cfg.seed
    return Scenario(
        label=cfg.name, prior=prior, model=model, references=refs, quad=q,
        oracles=bool(cfg.oracles.get("grid", True)),
        monte_carlo=bool(cfg.oracles.get("monte_carlo", False)),
        mc_samples=int(cfg.oracles.get("mc_samples", 10**6)), seed=seed,
    )
