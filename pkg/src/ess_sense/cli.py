"""Command-line entry point.

One subcommand per analysis, machine-readable output only (JSON or CSV to
stdout or a file).  CSV payloads start with a schema comment line
``# ess-sense v1 <subcommand>`` so downstream golden files can pin the
format.  Exit codes: 0 success, 1 computation error, 2 usage or parse
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bayes_factor import approx_log_bf, fig1_curve, large_ess_edge_preference
from .dataset import Dataset, load_csv, pair_counts
from .errors import EssSenseError, InputError, ParseError
from .ess import AscentConfig, coordinate_ascent
from .scores import (
    BdeuHyper,
    Dag,
    aic_score,
    bdeu_graph_score,
    bic_score,
)
from .search import Criterion, bdeu_criterion, ess_sweep, map_search
from .uniformity import uniformity_from_counts

SCHEMA_VERSION = "v1"


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_threads()
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EssSenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _configure_threads():
    raw = os.environ.get("ESS_SENSE_THREADS")
    if raw is None:
        return
    try:
        if int(raw) < 1:
            raise ValueError
    except ValueError:
        print(f"warning: ignoring invalid ESS_SENSE_THREADS={raw!r}", file=sys.stderr)
    # All computations currently run on one thread; the cap is accepted for
    # forward compatibility and never increases parallelism.


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ess-sense",
        description="BDeu structure learning with the equivalent sample size as a first-class object",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("score", help="score a fixed graph on a dataset")
    _add_data_arg(p)
    p.add_argument("--dag", required=True, help="graph JSON file ('-' for stdin)")
    _add_criterion_args(p)
    _add_out_arg(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("learn", help="search for the MAP graph")
    _add_data_arg(p)
    _add_criterion_args(p)
    p.add_argument("--max-indegree", type=int, default=None)
    eng = p.add_mutually_exclusive_group()
    eng.add_argument("--exact", action="store_true", help="force exact subset dynamic programming")
    eng.add_argument("--greedy", action="store_true", help="force greedy hill climbing")
    _add_out_arg(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("ess-sweep", help="MAP edge counts over an ESS grid")
    _add_data_arg(p)
    p.add_argument("--alpha-min", type=float, required=True)
    p.add_argument("--alpha-max", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--log-grid", action="store_true", help="log-spaced grid instead of linear")
    p.add_argument("--max-indegree", type=int, default=None)
    eng = p.add_mutually_exclusive_group()
    eng.add_argument("--exact", action="store_true")
    eng.add_argument("--greedy", action="store_true")
    _add_out_arg(p)
    p.set_defaults(func=cmd_ess_sweep)

    p = sub.add_parser("fig1", help="skewness vs dependence curve for an independent pair")
    p.add_argument("--n", type=int, default=100, help="sample size of the synthetic pair")
    p.add_argument("--alphas", default="1,10,100,1000,10000", help="comma-separated ESS values")
    p.add_argument("--z-step", type=float, default=0.05, help="skew grid step on [0, 0.5]")
    _add_out_arg(p)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("optimal-ess", help="coordinate ascent over graph and ESS")
    _add_data_arg(p)
    p.add_argument("--max-rounds", type=int, default=20)
    p.add_argument("--conv-tol", type=float, default=0.1)
    p.add_argument("--max-indegree", type=int, default=None)
    p.add_argument(
        "--exact-step2",
        action="store_true",
        help="also report the golden-section ESS optimum per round",
    )
    _add_out_arg(p)
    p.set_defaults(func=cmd_optimal_ess)

    p = sub.add_parser("uniformity", help="uniformity measure of an empirical pair distribution")
    _add_data_arg(p)
    p.add_argument("--a", required=True, metavar="NAME")
    p.add_argument("--b", required=True, metavar="NAME")
    p.add_argument("--given", default="", help="comma-separated conditioning variables")
    _add_out_arg(p)
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("bayes-factor", help="exact and large-ESS Bayes factor for one edge")
    _add_data_arg(p)
    p.add_argument("--a", required=True, metavar="NAME")
    p.add_argument("--b", required=True, metavar="NAME")
    p.add_argument("--given", default="")
    p.add_argument("--ess", type=float, required=True)
    _add_out_arg(p)
    p.set_defaults(func=cmd_bayes_factor)

    return parser


def _add_data_arg(p):
    p.add_argument("--data", required=True, help="CSV data file ('-' for stdin)")


def _add_out_arg(p):
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")


def _add_criterion_args(p):
    p.add_argument("--criterion", choices=["bdeu", "bic", "aic"], default="bdeu")
    p.add_argument("--ess", type=float, default=None, help="equivalent sample size (BDeu only)")


def _read_dataset(args) -> Dataset:
    if args.data == "-":
        return load_csv(sys.stdin.buffer.read())
    path = Path(args.data)
    if not path.exists():
        raise InputError(f"data file not found: {path}")
    return load_csv(path)


def _resolve_criterion(args) -> Criterion:
    if args.criterion == "bdeu":
        if args.ess is None:
            raise InputError("--criterion bdeu needs --ess")
        return bdeu_criterion(args.ess)
    if args.ess is not None:
        print(f"warning: --criterion {args.criterion} ignores --ess", file=sys.stderr)
    return Criterion(args.criterion)


def _emit(args, text: str):
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2) + "\n")


def _csv_header(subcommand: str, columns: str) -> str:
    return f"# ess-sense {SCHEMA_VERSION} {subcommand}\n{columns}\n"


def _load_dag(args, d: Dataset) -> Dag:
    raw = sys.stdin.read() if args.dag == "-" else None
    if raw is None:
        path = Path(args.dag)
        if not path.exists():
            raise InputError(f"graph file not found: {path}")
        raw = path.read_text(encoding="utf-8")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"graph file is not valid JSON: {exc}") from None
    dag, names = Dag.from_json_obj(obj)
    if names != d.names:
        raise ParseError(
            "graph nodes do not match dataset variables "
            f"(graph: {list(names)}, data: {list(d.names)})"
        )
    return dag


def _names_to_indices(d: Dataset, args) -> tuple[int, int, tuple[int, ...]]:
    if args.a == args.b:
        raise InputError("--a and --b must name different variables")
    try:
        a = d.index_of(args.a)
        b = d.index_of(args.b)
        cond = tuple(
            d.index_of(name) for name in args.given.split(",") if name != ""
        )
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    return a, b, cond


# ---------------------------------------------------------------------------
# subcommands


def cmd_score(args) -> int:
    d = _read_dataset(args)
    criterion = _resolve_criterion(args)
    dag = _load_dag(args, d)
    if criterion.kind == "bdeu":
        breakdown = bdeu_graph_score(d, dag, BdeuHyper(criterion.alpha))
    elif criterion.kind == "bic":
        breakdown = bic_score(d, dag)
    else:
        breakdown = aic_score(d, dag)
    _emit_json(
        args,
        {
            "total": breakdown.total,
            "per_family": {
                name: value for name, value in zip(d.names, breakdown.per_family)
            },
        },
    )
    return 0


def cmd_learn(args) -> int:
    d = _read_dataset(args)
    criterion = _resolve_criterion(args)
    exact = True if args.exact else (False if args.greedy else None)
    res = map_search(d, criterion, max_indegree=args.max_indegree, exact=exact)
    _emit_json(
        args,
        {
            "dag": res.dag.to_json_obj(d.names),
            "score": res.score,
            "criterion": criterion.label(),
            "method": res.method.value,
            # wall-clock time is deliberately absent: output must be
            # byte-identical across reruns
            "stats": {
                "candidates": res.candidates,
                "edges": res.dag.edge_count,
            },
        },
    )
    return 0


def cmd_ess_sweep(args) -> int:
    d = _read_dataset(args)
    if args.points < 1:
        raise InputError("--points must be at least 1")
    if args.log_grid:
        import numpy as np

        alphas = list(np.logspace(np.log10(args.alpha_min), np.log10(args.alpha_max), args.points))
    else:
        import numpy as np

        alphas = list(np.linspace(args.alpha_min, args.alpha_max, args.points))
    exact = True if args.exact else (False if args.greedy else None)
    rows = ess_sweep(d, alphas, max_indegree=args.max_indegree, exact=exact)
    lines = [_csv_header("ess-sweep", "alpha,edges,score").rstrip("\n")]
    for alpha, edges, score, err in rows:
        if err is not None:
            lines.append(f"{alpha!r},error,error")
        else:
            lines.append(f"{alpha!r},{edges},{score!r}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_fig1(args) -> int:
    if not 0 < args.z_step <= 0.5:
        raise InputError("--z-step must lie in (0, 0.5]")
    steps = int(round(0.5 / args.z_step))
    z_grid = [i * args.z_step for i in range(steps + 1)]
    alphas = _parse_alpha_list(args.alphas)
    rows = fig1_curve(args.n, z_grid, alphas)
    lines = [_csv_header("fig1", "z,alpha,exact,approx").rstrip("\n")]
    for row in rows:
        lines.append(f"{row.z!r},{row.alpha!r},{row.exact_log_bf!r},{row.approx_log_bf!r}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _parse_alpha_list(raw: str) -> list[float]:
    try:
        alphas = [float(tok) for tok in raw.split(",") if tok != ""]
    except ValueError:
        raise InputError(f"--alphas must be comma-separated numbers, got {raw!r}") from None
    if not alphas:
        raise InputError("--alphas must name at least one ESS value")
    return alphas


def cmd_optimal_ess(args) -> int:
    d = _read_dataset(args)
    config = AscentConfig(
        max_rounds=args.max_rounds,
        conv_tol=args.conv_tol,
        max_indegree=args.max_indegree,
        exact_step2=args.exact_step2,
    )
    trace = coordinate_ascent(d, config)
    _emit_json(
        args,
        {
            "converged": trace.converged,
            "final_alpha": trace.final_alpha,
            "final_round": trace.final_round,
            "final_dag": trace.final_dag.to_json_obj(d.names),
            "rounds": [
                {
                    "k": r.k,
                    "alpha": r.alpha,
                    "edges": r.edge_count,
                    "score": None if r.score != r.score else r.score,
                    "estimate": dataclasses.asdict(r.estimate),
                    "exact_alpha": r.exact_alpha,
                }
                for r in trace.rounds
            ],
        },
    )
    return 0


def cmd_uniformity(args) -> int:
    d = _read_dataset(args)
    a, b, cond = _names_to_indices(d, args)
    report = uniformity_from_counts(pair_counts(d, a, b, cond))
    _emit_json(args, {"u": report.u, "per_pi": list(report.per_pi)})
    return 0


def cmd_bayes_factor(args) -> int:
    d = _read_dataset(args)
    a, b, cond = _names_to_indices(d, args)
    pc = pair_counts(d, a, b, cond)
    res = approx_log_bf(pc, BdeuHyper(args.ess))
    pref = large_ess_edge_preference(pc)
    _emit_json(
        args,
        {
            "exact_log_bf": res.exact_log_bf,
            "approx_log_bf": res.approx_log_bf,
            "n": res.n,
            "alpha": res.alpha,
            "d_f": res.d_f,
            "u": res.u,
            "large_ess_preference": pref.decision.value,
            "large_ess_margin": pref.margin,
        },
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
