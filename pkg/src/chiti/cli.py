"""Command-line interface.

Subcommands
-----------
eigen       first eigenvalue (and optionally eigenfunction samples)
chiti       reverse Hoelder comparison report
stability   gap profile and stability diagnostics, or a family sweep

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 a comparison
inequality failed beyond tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .comparison import Tolerances, analyze, decode_exponent, encode_exponent, prepare
from .eigensolver import (
    DEFAULT_STEPS,
    Cap,
    InfeasibleError,
    Interval,
    SolverError,
    first_eigen,
)
from .model_space import DomainError, ModelParams
from .stability import DEFAULT_Q_GRID, stability_analysis, sweep_caps_to_interval, sweep_to_csv

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3

GRID_ENV = "CHITI_GRID_N"

CSV_HELP = """\
CSV output starts with one line '# config: {...}' holding the run
configuration as JSON, followed by a header row:
  eigen      N,K,domain,lambda        (one row)
  chiti      q,slack                  (q = inf written as 'inf')
  stability  q,gap                    (or the sweep table:
             k,a,b,v,alpha,delta,sqrt_delta,perimeter_ratio,c_fit,status)
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; embedded in every output."""

    command: str
    N: float
    K: float
    domain: dict | None
    p: float
    q_grid: tuple
    grid_n: int
    cells: int
    tol_num: float
    tol_eq: float
    tol_band: float
    output: str | None
    format: str
    sweep: int | None = None
    seed: int | None = None
    version: str = field(default=__version__)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.K, self.N)

    @property
    def domain_obj(self):
        if self.domain is None:
            return None
        if self.domain["kind"] == "cap":
            return Cap(self.domain["v"])
        return Interval(self.domain["a"], self.domain["b"])

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(self.tol_num, self.tol_eq, self.tol_band)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["q_grid"] = [encode_exponent(q) for q in self.q_grid]
        return out


def _q_list(text: str) -> tuple:
    try:
        return tuple(decode_exponent(q) for q in text.split(",") if q.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad exponent list {text!r}") from exc


def _add_common(sub):
    sub.add_argument("--N", type=float, required=True, help="dimension N > 1")
    sub.add_argument("--K", type=float, default=None, help="curvature K > 0 (default N-1)")
    dom = sub.add_mutually_exclusive_group()
    dom.add_argument("--cap", type=float, metavar="V", help="cap of mass V in (0, 1)")
    dom.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="interval (A, B) of radii")
    sub.add_argument("--grid-n", type=int, default=None,
                     help=f"solver steps per sweep (default {DEFAULT_STEPS}; env {GRID_ENV})")
    sub.add_argument("--cells", type=int, default=4000, help="mass-grid cells for rearrangements")
    sub.add_argument("--tol-num", type=float, default=1e-6, help="allowed negative slack")
    sub.add_argument("--tol-eq", type=float, default=1e-8, help="equality detection threshold")
    sub.add_argument("--tol-band", type=float, default=1e-8, help="crossing dead-band, relative to sup z")
    sub.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")
    sub.add_argument("--format", choices=("json", "csv"), default=None, help="output format")
    sub.add_argument("--seed", type=int, default=None, help="recorded only; runs are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chiti",
        description="Model-space eigenpairs and reverse Hoelder comparison checks.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    e = subs.add_parser("eigen", help="first Dirichlet eigenvalue", epilog=CSV_HELP,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(e)
    e.add_argument("--samples", type=int, default=0, help="include this many eigenfunction samples (json)")
    c = subs.add_parser("chiti", help="reverse Hoelder comparison", epilog=CSV_HELP,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(c)
    c.add_argument("--p", type=float, default=1.0, help="base exponent p > 0")
    c.add_argument("--q", type=_q_list, default=None, help="comma-separated q >= p (default p,2p,4p,8p,inf)")
    s = subs.add_parser("stability", help="stability diagnostics", epilog=CSV_HELP,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(s)
    s.add_argument("--q", type=_q_list, default=None, help="comma-separated q >= 1 (default 1,2,...,64,inf)")
    s.add_argument("--sweep", nargs=2, metavar=("FAMILY", "n"), default=None,
                   help="'caps-to-interval n': intervals (a(1-k/n), b), default (a, b) = (0.5, 2.6)")
    return parser


def _grid_n(args) -> int:
    if args.grid_n is not None:
        return args.grid_n
    env = os.environ.get(GRID_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{GRID_ENV} must be an integer, got {env!r}")
    return DEFAULT_STEPS


def make_config(args) -> RunConfig:
    if not (math.isfinite(args.N) and args.N > 1):
        raise UsageError(f"--N must be > 1, got {args.N}")
    K = args.N - 1.0 if args.K is None else args.K
    if not (math.isfinite(K) and K > 0):
        raise UsageError(f"--K must be > 0, got {K}")
    sweep = None
    if getattr(args, "sweep", None):
        family, n = args.sweep
        if family != "caps-to-interval":
            raise UsageError(f"unknown sweep family {family!r}")
        try:
            sweep = int(n)
        except ValueError:
            raise UsageError(f"sweep size must be an integer, got {n!r}")
        if sweep < 1:
            raise UsageError("sweep size must be positive")
    if args.cap is not None:
        domain = {"kind": "cap", "v": args.cap}
    elif args.interval is not None:
        domain = {"kind": "interval", "a": args.interval[0], "b": args.interval[1]}
    elif sweep is not None:
        domain = None
    else:
        raise UsageError("one of --cap or --interval is required")
    p = getattr(args, "p", 1.0)
    if not (math.isfinite(p) and p > 0):
        raise UsageError(f"--p must be positive and finite, got {p}")
    q = getattr(args, "q", None)
    if q is None:
        q = (p, 2 * p, 4 * p, 8 * p, math.inf) if args.command == "chiti" else DEFAULT_Q_GRID
    if not q or any(not qq >= (p if args.command == "chiti" else 1.0) for qq in q):
        raise UsageError("every q must be >= p (chiti) or >= 1 (stability)")
    grid_n = _grid_n(args)
    if grid_n < 100:
        raise UsageError("grid_n must be at least 100")
    if args.cells < 16:
        raise UsageError("--cells must be at least 16")
    fmt = args.format or "json"
    cfg = RunConfig(
        command=args.command, N=float(args.N), K=float(K), domain=domain, p=float(p), q_grid=tuple(q),
        grid_n=grid_n, cells=args.cells, tol_num=args.tol_num, tol_eq=args.tol_eq,
        tol_band=args.tol_band, output=args.output, format=fmt, sweep=sweep, seed=args.seed,
    )
    try:
        params = cfg.params
        if domain is not None and domain["kind"] == "cap" and not 0 < domain["v"] < 1:
            raise DomainError("cap mass must lie in (0, 1)")
        if domain is not None and domain["kind"] == "interval":
            a, b = domain["a"], domain["b"]
            if not (0 <= a < b <= params.L) or (a == 0 and b >= params.L):
                raise DomainError(f"need 0 <= a < b <= L = {params.L}, not the whole space")
        cfg.tolerances
    except DomainError as exc:
        raise UsageError(str(exc))
    return cfg


# ---------------------------------------------------------------------------
# commands


def _json_doc(cfg: RunConfig, result: dict) -> str:
    return json.dumps({"config": cfg.to_dict(), "result": result}, indent=2, sort_keys=True) + "\n"


def _csv_doc(cfg: RunConfig, body: str) -> str:
    return "# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n" + body


def _domain_label(cfg: RunConfig) -> str:
    d = cfg.domain
    if d is None:
        return "sweep"
    return f"cap({d['v']!r})" if d["kind"] == "cap" else f"interval({d['a']!r},{d['b']!r})"


def cmd_eigen(cfg: RunConfig, samples: int = 0):
    pair = first_eigen(cfg.params, cfg.domain_obj, steps=cfg.grid_n)
    result = {"lambda": pair.lam, "mass": pair.mass}
    if samples > 0:
        idx = sorted({round(i * (len(pair.nodes) - 1) / max(samples - 1, 1)) for i in range(samples)})
        result["t"] = [float(pair.nodes[i]) for i in idx]
        result["z"] = [float(pair.values[i]) for i in idx]
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "K", "domain", "lambda"])
        writer.writerow([repr(cfg.N), repr(cfg.K), _domain_label(cfg), repr(pair.lam)])
        doc = _csv_doc(cfg, buf.getvalue())
    else:
        doc = _json_doc(cfg, result)
    return doc, f"lambda = {pair.lam:.6f}", EXIT_OK


def cmd_chiti(cfg: RunConfig):
    run = prepare(cfg.params, cfg.domain_obj, cells=cfg.cells, steps=cfg.grid_n)
    res = analyze(run, p=cfg.p, q_grid=cfg.q_grid, tol=cfg.tolerances)
    if cfg.format == "csv":
        doc = _csv_doc(cfg, res.report.to_csv())
    else:
        doc = _json_doc(cfg, {
            "report": res.report.to_dict(),
            "checks": res.checks(),
            "lambda": run.lam,
            "alpha_residual": run.alpha.residual,
        })
    code = EXIT_VIOLATION if res.violations else EXIT_OK
    summary = (f"lambda = {run.lam:.6f}  alpha = {run.alpha.alpha:.6f}  v = {run.v:.6f}  "
               f"min slack = {res.report.min_slack:.3e}  violations = {list(res.violations)}")
    return doc, summary, code


def cmd_stability(cfg: RunConfig):
    if cfg.sweep is not None:
        a, b = (0.5, 2.6) if cfg.domain is None or cfg.domain["kind"] != "interval" else (
            cfg.domain["a"], cfg.domain["b"])
        rows = sweep_caps_to_interval(cfg.params, cfg.sweep, a=a, b=b, cells=cfg.cells,
                                      steps=cfg.grid_n, q_grid=cfg.q_grid)
        if cfg.format == "csv":
            doc = _csv_doc(cfg, sweep_to_csv(rows))
        else:
            doc = _json_doc(cfg, {"sweep": rows})
        bad = any(r["perimeter_ratio"] < 1 - cfg.tol_num for r in rows)
        return doc, f"{len(rows)} sweep rows", EXIT_VIOLATION if bad else EXIT_OK
    run = prepare(cfg.params, cfg.domain_obj, cells=cfg.cells, steps=cfg.grid_n)
    rep = stability_analysis(run, cfg.q_grid, witness_tol=cfg.tol_num, tol_eq=cfg.tol_eq)
    if cfg.format == "csv":
        doc = _csv_doc(cfg, rep.to_csv())
    else:
        doc = _json_doc(cfg, {"report": rep.to_dict(), "alpha": run.alpha.alpha, "v": run.v,
                              "lambda": run.lam})
    bad = min(rep.gaps) < -cfg.tol_num or (rep.perimeter_ratio is not None
                                            and rep.perimeter_ratio < 1 - cfg.tol_num)
    summary = f"delta = {rep.delta:.6e}  status = {rep.status}"
    return doc, summary, EXIT_VIOLATION if bad else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except UsageError as exc:
        print(f"chiti: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.command == "eigen":
            doc, summary, code = cmd_eigen(cfg, args.samples)
        elif cfg.command == "chiti":
            doc, summary, code = cmd_chiti(cfg)
        else:
            doc, summary, code = cmd_stability(cfg)
    except (SolverError, InfeasibleError) as exc:
        print(f"chiti: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"chiti: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
        print(summary)
    elif cfg.command == "eigen" and args.format is None:
        print(summary)
    else:
        sys.stdout.write(doc)
    if code == EXIT_VIOLATION:
        print("chiti: comparison violation", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
