"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 unstable or degenerate
model, 4 a reproduced table did not match.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from netemp import reproduce
from netemp.emp import (
    Emp,
    RoleConstraint,
    emps_to_csv,
    enumerate_branch_emps,
    enumerate_constrained,
    enumerate_cycle_emps,
    find_emp,
    hybrid_constraints,
    largest_module_is_direct,
)
from netemp.infoengine import NetworkEvaluator, rank_emps
from netemp.montecarlo import HYBRID_EDGES, SamplingError, StudySpec, hybrid_network, run_study
from netemp.netmodel import (
    DegenerateParameterError,
    InstabilityError,
    NetEmpError,
    NetworkModel,
    SignalConfig,
    ValidationError,
    config_from_dict,
    model_from_dict,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_MISMATCH = 0, 2, 3, 4
DEFAULT_T = 1_000_000
Z_LIMIT = 4.0

log = logging.getLogger("netemp")


class UsageError(NetEmpError):
    pass


# ---------------------------------------------------------------- input

def _read_json(path: str) -> Any:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _edge_name(i: int, j: int) -> str:
    return f"a{j}{i}" if max(i, j) < 10 else f"a{j},{i}"


def _structural_edges(args) -> list[tuple[int, int]]:
    if args.cycle is not None:
        n = args.cycle
        return [(i, i % n + 1) for i in range(1, n + 1)]
    n = args.branch
    return [(i, i + 1) for i in range(1, n)]


def load_network(path: str) -> tuple[NetworkModel, list[Emp] | None]:
    """Network file: ``{"n", "edges"}``, ``{"kind", "n", "gains"}`` or
    ``{"kind": "hybrid", "gains": g}``, optionally with ``"emps"`` or
    ``"constraints"`` naming the patterns to consider."""
    spec = _read_json(path)
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: top level must be an object")
    try:
        if spec.get("kind") == "hybrid":
            gains = spec.get("gains", 0.3)
            if isinstance(gains, list):
                gains = dict(zip(HYBRID_EDGES, map(float, gains)))
            model = hybrid_network(gains)
        else:
            model = model_from_dict(spec)
        emps = None
        if "emps" in spec:
            emps = [Emp(e["excited"], e["measured"], e.get("label") or str(k))
                    for k, e in enumerate(spec["emps"], 1)]
        elif "constraints" in spec:
            c = spec["constraints"]
            roles = {int(k): v for k, v in c.get("roles", {}).items()}
            groups = tuple(frozenset(int(x) for x in g) for g in c.get("groups", ()))
            emps = enumerate_constrained(RoleConstraint(roles, groups), model.n)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: malformed field {exc}") from None
    except ValidationError as exc:
        raise UsageError(f"{path}: {exc}") from None
    return model, emps


def default_emps(model: NetworkModel) -> list[Emp]:
    if model.topology == "branch":
        return enumerate_branch_emps(model.n)
    if model.topology == "cycle":
        return enumerate_cycle_emps(model.n)
    if model.n == 6 and {(i, j) for i, j, _ in model.edges} == set(HYBRID_EDGES):
        return enumerate_constrained(hybrid_constraints(), 6)
    raise UsageError("no built-in pattern list for this topology; "
                     "add \"emps\" or \"constraints\" to the network file")


def load_config(path: str | None, n: int) -> SignalConfig:
    if path is None:
        return SignalConfig.uniform(n)
    spec = _read_json(path)
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: top level must be an object")
    try:
        return config_from_dict(spec, n)
    except ValidationError as exc:
        raise UsageError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- output

def _pretty(rows: list[dict[str, Any]]) -> str:
    if not rows:
        return "(empty)\n"
    cols = list(rows[0])
    cells = [cols] + [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[k]) for row in cells) for k in range(len(cols))]
    lines = ["  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(map(str, v)) or "-"
    return str(v)


def _csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ";".join(map(str, v)) if isinstance(v, (list, tuple)) else v
                        for k, v in r.items()})
    return buf.getvalue()


def _render(rows: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=_json_default) + "\n"
    if fmt == "csv":
        return _csv(rows)
    return _pretty(rows)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(type(o).__name__)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_enumerate(args) -> int:
    if args.network:
        model, emps = load_network(args.network)
        edges = model.parameters
        emps = emps or default_emps(model)
    else:
        n = args.cycle if args.cycle is not None else args.branch
        emps = (enumerate_cycle_emps(n, include_doubled=args.doubled) if args.cycle is not None
                else enumerate_branch_emps(n))
        edges = _structural_edges(args)
    rows = []
    for e in emps:
        ex, me = e.key()
        direct = [_edge_name(i, j) for i, j in edges if i in e.excited and j in e.measured]
        rows.append({"label": e.label, "excited": list(ex), "measured": list(me),
                     "nu": e.nu, "direct_modules": direct})
    if args.format == "csv":
        text = emps_to_csv(emps, {"direct_modules": [";".join(r["direct_modules"])
                                                     for r in rows]})
    else:
        text = _render(rows, args.format)
    _emit(text, args.out)
    return EXIT_OK


def cmd_rank(args) -> int:
    model, emps = load_network(args.network)
    emps = emps or default_emps(model)
    config = load_config(args.config, model.n)
    ranked = rank_emps(model, emps, config)
    rows = []
    for pos, (e, r) in enumerate(ranked, 1):
        ex, me = e.key()
        row = {"rank": pos, "label": e.label, "excited": list(ex), "measured": list(me),
               "trace": r.trace_P, "singular": r.singular,
               "direct_modules": [_edge_name(i, j) for i, j in model.parameters
                                  if i in e.excited and j in e.measured],
               "largest_direct": largest_module_is_direct(e, model)}
        if args.format == "json":
            row["trace"] = "inf" if r.singular else r.trace_P
            row["variances"] = {_edge_name(i, j): (None if math.isinf(v) else v)
                                for (i, j), v in r.per_param_variance.items()}
            row["condition_number"] = (None if math.isinf(r.condition_number)
                                       else r.condition_number)
        rows.append(row)
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    ids = list(reproduce.TABLE_IDS) if args.table == ["all"] else args.table
    try:
        ids = [reproduce.normalize_id(t) for t in ids]
    except reproduce.UnknownTableError as exc:
        raise UsageError(exc.args[0]) from None
    results = [reproduce.reproduce_table(t, n=args.n, seed=args.seed, tol=args.tol,
                                         workers=args.workers) for t in ids]
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in results], indent=2, default=str) + "\n"
    elif args.format == "csv":
        text = "".join(r.to_csv() if k == 0 else r.to_csv().split("\n", 1)[1]
                       for k, r in enumerate(results))
    else:
        text = "\n".join(r.pretty() for r in results)
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_MISMATCH


def _study_spec(args) -> StudySpec:
    if args.spec:
        data = _read_json(args.spec)
        if not isinstance(data, dict):
            raise UsageError(f"{args.spec}: top level must be an object")
        try:
            spec = StudySpec.from_dict(data)
        except ValidationError as exc:
            raise UsageError(f"{args.spec}: {exc}") from None
        overrides = {}
        if args.n is not None:
            overrides["num_networks"] = args.n
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        return StudySpec(**{**spec.__dict__, **overrides}) if overrides else spec
    if args.hybrid:
        topology, n = "hybrid", 6
    elif args.cycle is not None:
        topology, n = "cycle", args.cycle
    elif args.branch is not None:
        topology, n = "branch", args.branch
    else:
        raise UsageError("study needs --cycle N, --branch N, --hybrid or --spec FILE")
    gain_range = tuple(args.gain_range) if args.gain_range else (
        (0.0, 50.0) if topology == "branch" else (-1.0, 1.0))
    variance_range = tuple(args.variance_range) if args.variance_range else (
        (0.0, 50.0) if topology == "branch" else None)
    return StudySpec(topology, n, args.n or reproduce.DEFAULT_N, gain_range, variance_range,
                     master_seed=reproduce.DEFAULT_SEED if args.seed is None else args.seed,
                     emp_source="with_doubled" if args.doubled else "minimal")


def cmd_study(args) -> int:
    report = run_study(_study_spec(args), workers=args.workers)
    if args.format == "json":
        text = json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n"
    elif args.format == "csv":
        text = report.to_csv()
    else:
        rows = [{"emp_label": lab, "wins": report.wins[lab],
                 "percent": round(report.percent[lab], 2)} for lab in report.labels]
        text = _pretty(rows)
        text += (f"networks: {len(report.best_per_network)}  degenerate: {report.degenerate}  "
                 f"largest module direct: {100 * report.largest_direct_rate:.2f}%  "
                 f"time: {report.seconds:.2f} s\n")
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from netemp.simoracle import MIN_T, simulate_information

    if args.T < MIN_T:
        raise UsageError(f"T must be >= {MIN_T}, got {args.T}")
    model, emps = load_network(args.network)
    emps = emps or default_emps(model)
    if args.emp:
        try:
            emps = [find_emp(emps, lab) for lab in args.emp]
        except KeyError as exc:
            raise UsageError(f"unknown EMP label {exc}") from None
    config = load_config(args.config, model.n)
    ev = NetworkEvaluator(model)
    seed = reproduce.DEFAULT_SEED if args.seed is None else args.seed
    rows, ok = [], True
    for e in emps:
        M = ev.information(e, config).M
        trace = simulate_information(model, e, config, args.T, seed)
        zmax = float(np.max(np.abs(trace.z_scores(M))))
        passed = zmax < args.z
        ok &= passed
        rows.append({"label": e.label, "T": args.T, "seed": seed, "max_abs_z": round(zmax, 3),
                     "passed": passed})
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK if ok else EXIT_MISMATCH


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netemp",
        description="Excitation and measurement patterns for dynamic network identification.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("pretty", "csv", "json"), default="pretty"):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")

    def topology(p, network=True):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--cycle", type=int, metavar="N")
        g.add_argument("--branch", type=int, metavar="N")
        if network:
            g.add_argument("--network", metavar="FILE")
        return g

    p = sub.add_parser("enumerate", help="list the minimal EMPs of a network")
    topology(p)
    p.add_argument("--doubled", action="store_true",
                   help="for even cycles, also list the one-doubled-node patterns")
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("rank", help="rank EMPs by the trace of their covariance")
    p.add_argument("--network", metavar="FILE", required=True)
    p.add_argument("--config", metavar="FILE",
                   help="input/noise variances (default: sigma2=1, lambda=0.01)")
    common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("reproduce", help="compare against a published table")
    p.add_argument("table", nargs="+", help=f"table id or 'all': {', '.join(reproduce.TABLE_IDS)}")
    p.add_argument("--n", type=int, help="networks per random study")
    p.add_argument("--seed", type=int, default=reproduce.DEFAULT_SEED)
    p.add_argument("--tol", type=float, help="override the cell tolerance of a fixed table")
    p.add_argument("--workers", type=int)
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("study", help="random-network study: how often each EMP wins")
    g = topology(p, network=False)
    g.add_argument("--hybrid", action="store_true", help="the six-node branch-and-loop network")
    g.add_argument("--spec", metavar="FILE", help="study description as JSON")
    p.add_argument("--n", type=int, help=f"number of networks (default {reproduce.DEFAULT_N})")
    p.add_argument("--seed", type=int)
    p.add_argument("--gain-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--variance-range", type=float, nargs=2, metavar=("LO", "HI"),
                   help="draw every sigma2 and lambda from U(LO, HI)")
    p.add_argument("--doubled", action="store_true")
    p.add_argument("--workers", type=int)
    common(p, default="csv")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify", help="check the engine against time-domain simulation")
    p.add_argument("--network", metavar="FILE", required=True)
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--T", type=int, default=DEFAULT_T, help="samples after burn-in")
    p.add_argument("--seed", type=int)
    p.add_argument("--emp", action="append", metavar="LABEL", help="restrict to these EMPs")
    p.add_argument("--z", type=float, default=Z_LIMIT, help="pass threshold on max |z|")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstabilityError, DegenerateParameterError, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
