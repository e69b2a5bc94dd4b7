"""Command-line front end: ``bcrb report``, ``bcrb sweep`` and ``bcrb accept``.

Exit codes: 0 success, 1 an asserted inequality failed, 2 the config does
not parse, 3 the config does not validate, 4 a numerical capability limit was
hit.  Degenerate bounds are flagged in the output and do not change the exit
code.  ``BCRB_THREADS`` sets how many scenarios of a batch run at once.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import acceptance
from . import bounds as B
from . import measures as M
from . import models as Mo
from . import tilted as T
from .config import build_prior, load_config, resolve
from .errors import (
    BoundsError,
    CapabilityError,
    ConfigError,
    ConfigParseError,
    DomainError,
    IntegrationDomainError,
    InvariantViolation,
    IterationError,
    ModelEvaluationError,
)

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3, 4
THREADS_ENV = "BCRB_THREADS"
SWEEP_KINDS = ("g-delta", "bound-vs-jp", "reverse-epi-k", "snr-curve")
NUMERICAL_ERRORS = (CapabilityError, IntegrationDomainError, ModelEvaluationError, IterationError)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigParseError):
        return EXIT_PARSE
    if isinstance(exc, NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    if isinstance(exc, (ConfigError, DomainError, InvariantViolation)):
        return EXIT_INVALID
    return EXIT_NUMERICAL


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _quad(nodes: Optional[int]) -> Optional[M.QuadratureSpec]:
    return M.QuadratureSpec(nodes) if nodes else None


def _rows_to_csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def run_scenario(path, out_dir: Path, seed: Optional[int] = None, nodes: Optional[int] = None,
                 formats=("json",)) -> tuple:
    """Resolve, evaluate and write one scenario.  Returns ``(exit_code, report_or_None, message)``."""
    try:
        cfg = load_config(path)
        scenario = resolve(cfg, seed, nodes)
    except BoundsError as exc:
        return exit_code_for(exc), None, f"{path}: {exc}"
    rep = B.assemble_report(scenario)
    stem = cfg.name
    if "json" in formats:
        write_atomic(out_dir / cfg.output.get("json", f"{stem}.json"), rep.to_json() + "\n")
    if "csv" in formats:
        write_atomic(out_dir / cfg.output.get("csv", f"{stem}.csv"),
                     _rows_to_csv(rep.csv_header(), [rep.csv_row()]))
    if rep.errors:
        msg = "; ".join(f"{k}: {v}" for k, v in rep.errors.items())
        return EXIT_NUMERICAL, rep, f"{stem}: could not evaluate {msg}"
    if rep.failures():
        return EXIT_FAILED, rep, f"{stem}: failed " + ", ".join(c.name for c in rep.failures())
    return EXIT_OK, rep, f"{stem}: ok"


def _summary_lines(rep: B.BoundReport) -> list:
    lines = [f"scenario {rep.label}: n={rep.n} K={rep.K:.6g} P={rep.P:.6g} J={rep.J:.6g}"]
    for c in rep.checks:
        tag = "ok" if c.holds else ("FAIL" if c.asserted else "info")
        lines.append(f"  {c.name:<34} lhs={c.lhs:<12.6g} rhs={c.rhs:<12.6g} slack={c.slack:<12.4g} {tag}")
    lines.extend(f"  flag: {f}" for f in rep.flags)
    return lines


def cmd_report(args) -> int:
    formats = _formats(args, default=("json",))
    out_dir = Path(args.out_dir)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(
            lambda p: run_scenario(p, out_dir, args.seed, args.quad_nodes, formats), args.configs))
    code = 0
    for rc, rep, msg in results:
        if rep is not None:
            print("\n".join(_summary_lines(rep)))
        print(msg, file=sys.stderr if rc else sys.stdout)
        code = max(code, rc)
    return code


def _formats(args, default) -> tuple:
    chosen = tuple(f for f in ("json", "csv") if getattr(args, f, False))
    return chosen or default


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _sweep_prior(args, q) -> M.LogConcavePrior:
    if args.config:
        return build_prior(load_config(args.config).prior, q)
    return build_prior({"family": args.prior or "gaussian"}, q)


def _grid(args, lo, hi, points):
    lo = args.min if args.min is not None else lo
    hi = args.max if args.max is not None else hi
    points = args.points or points
    if not (0 < lo < hi) or points < 2:
        raise ConfigError("sweep range needs 0 < min < max and at least 2 points")
    return np.logspace(math.log10(lo), math.log10(hi), points)


def sweep_g_delta(args, q) -> tuple:
    prior = _sweep_prior(args, q)
    deltas = _grid(args, 0.01, 100.0, 50)
    text = T.g_sweep_csv(prior, deltas, q)
    rows = list(csv.DictReader(io.StringIO(text)))
    ok = bool(all(float(r["g"]) <= float(r["g_bound"]) + 1e-6 for r in rows))
    return text, ok, {"points": len(rows), "all_g_le_bound": ok}


def sweep_bound_vs_jp(args, q) -> tuple:
    kp, n = args.kp, args.n
    if not 0 <= kp <= 1:
        raise ConfigError("--kp must lie in [0, 1]")
    rows, ok = [], True
    for jp in _grid(args, 0.01, 100.0, 50):
        ds = B.delta_star(kp, 1.0, jp)
        phi_b = B.theorem2_bound(kp, 1.0, jp, n, "phi")
        psi_b = B.theorem2_bound(kp, 1.0, jp, n, "psi")
        le = bool(psi_b <= phi_b + 1e-12)
        ok &= le
        rows.append([jp, kp, n, ds.delta, ds.branch, phi_b, psi_b, le,
                     0.5 * n * math.log(jp), 0.5 * n * math.log1p(jp)])
    header = ["jp", "kp", "n", "delta_star", "branch", "phi_form", "psi_form", "psi_le_phi",
              "log_regime", "gaussian_sequence"]
    return _rows_to_csv(header, rows), ok, {"points": len(rows), "psi_le_phi": ok}


def sweep_reverse_epi(args, q) -> tuple:
    if args.config:
        d = build_prior(load_config(args.config).prior, q).base
    else:
        d = {"laplace": lambda: M.laplace(1 / math.sqrt(2)),
             "gaussian": M.standard_gaussian}.get(args.prior or "laplace", None)
        if d is None:
            raise ConfigError("reverse-epi-k takes --prior laplace or gaussian, or --config")
        d = d()
    if d.dim != 1:
        raise ConfigError("reverse-epi-k is one-dimensional")
    v = M.variance(d, q)
    if abs(v - 1) > 1e-4:
        d = M.scaled(d, 1 / math.sqrt(v))
    sw = B.reverse_epi_sweep(d, range(1, args.k_max + 1), q)
    rows = [[r["k"], r["h_sk"], r["lhs"], r["rhs"], r["holds"]] for r in sw.rows]
    ok = sw.threshold is not None
    meta = {"threshold": sw.threshold, "first_hold": sw.first_hold, "persists": sw.persists}
    return _rows_to_csv(["k", "h_sk", "lhs", "rhs", "holds"], rows), ok, meta


def sweep_snr_curve(args, q) -> tuple:
    prior = _sweep_prior(args, q)
    if prior.dim != 1:
        raise ConfigError("snr-curve is one-dimensional")
    rows, ok = [], True
    for snr in _grid(args, 0.01, 100.0, 30):
        noise = prior.variance / snr
        rep = B.assemble_report(B.Scenario(f"snr={snr:g}", prior, Mo.make_gaussian_location(noise),
                                           quad=q, seed=args.seed))
        if rep.errors:
            raise CapabilityError(f"snr {snr:g}: {rep.errors}")
        ok &= bool(rep.ok)
        o, b = rep.oracles, rep.bounds
        rows.append([snr, rep.jp, o["mutual_information"], o["mmse"], b["theorem2_phi"],
                     b["theorem2_psi"], b["gaussian_sequence"], b["van_trees"], b["efroimovich"],
                     o["entropy_power_posterior"], rep.ok])
    header = ["snr", "jp", "mi", "mmse", "theorem2_phi", "theorem2_psi", "gaussian_sequence",
              "van_trees", "efroimovich", "entropy_power", "all_asserted_hold"]
    return _rows_to_csv(header, rows), ok, {"points": len(rows), "all_asserted_hold": ok}


SWEEPS = {"g-delta": sweep_g_delta, "bound-vs-jp": sweep_bound_vs_jp,
          "reverse-epi-k": sweep_reverse_epi, "snr-curve": sweep_snr_curve}


def cmd_sweep(args) -> int:
    try:
        q = _quad(args.quad_nodes)
        text, ok, meta = SWEEPS[args.kind](args, q)
    except BoundsError as exc:
        print(f"sweep {args.kind}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    out_dir = Path(args.out_dir)
    write_atomic(out_dir / f"{args.kind}.csv", text)
    if args.json:
        write_atomic(out_dir / f"{args.kind}.json",
                     json.dumps({"kind": args.kind, "seed": args.seed, **meta}, indent=2) + "\n")
    print(f"sweep {args.kind}: " + ", ".join(f"{k}={v}" for k, v in meta.items()))
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# accept
# ---------------------------------------------------------------------------


def cmd_accept(args) -> int:
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = acceptance.run_acceptance(args.seed or 0, only, echo=print)
    text = acceptance.summary_json(results, args.seed or 0)
    write_atomic(Path(args.out_dir) / "acceptance.json", text + "\n")
    if args.json:
        print(text)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAILED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--seed", type=int, default=None, help="RNG seed for Monte Carlo oracles")
    common.add_argument("--quad-nodes", type=int, default=None, help="quadrature nodes per axis")
    common.add_argument("--json", action="store_true", help="write JSON output")
    common.add_argument("--csv", action="store_true", help="write CSV output")

    p = argparse.ArgumentParser(prog="bcrb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("report", parents=[common], help="evaluate scenario config files")
    r.add_argument("configs", nargs="+", help="TOML scenario files")
    r.set_defaults(func=cmd_report)

    s = sub.add_parser("sweep", parents=[common], help="write a CSV curve")
    s.add_argument("kind", choices=SWEEP_KINDS)
    s.add_argument("--config", help="take the prior from this scenario file")
    s.add_argument("--prior", help="prior family with default parameters")
    s.add_argument("--min", type=float, default=None, help="lower end of the swept variable")
    s.add_argument("--max", type=float, default=None, help="upper end of the swept variable")
    s.add_argument("--points", type=int, default=None, help="number of log-spaced points")
    s.add_argument("--kp", type=float, default=0.0, help="K*P for bound-vs-jp")
    s.add_argument("--n", type=int, default=1, help="dimension for bound-vs-jp")
    s.add_argument("--k-max", type=int, default=8, help="largest k for reverse-epi-k")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("accept", parents=[common], help="run the acceptance suite")
    a.add_argument("--only", help="comma-separated criterion numbers")
    a.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
