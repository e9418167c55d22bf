"""``prodnet`` command line.

Every subcommand collects its outputs in memory and writes them, together
with ``manifest.json``, only after the computation succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .control import InputAssignment, control_report, driver_fraction_analytic
from .errors import ProdnetError
from .evolve import EvolutionConfig, evolve
from .fluct import EconomyTemplate, aggregate_volatility, monte_carlo_var_centrality
from .leontief import build_step_set, leontief_inverse, share_weight
from .netcore import BASIC_KINDS, Graph, generate_basic, graph_to_dict, load_graph
from .stationary import StationaryParams, compute_RS, fit_power_law, stationary_pmf

log = logging.getLogger("prodnet")

SIG = 12


def _clean(obj):
    """Round floats to 12 significant digits and turn numpy/Fraction values into JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.{SIG}g}")
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _num(x) -> str:
    return f"{float(x):.{SIG}g}"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_num(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _fraction(text) -> Fraction:
    return Fraction(str(text))


# -- graph arguments ----------------------------------------------------------


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph file (.json or edge-list .csv)")
    p.add_argument("--kind", choices=BASIC_KINDS, help="generate a basic topology instead of reading a file")
    p.add_argument("--n", type=int, help="node count for --kind")


def _resolve_graph(args, parser) -> Graph:
    if args.graph:
        return load_graph(args.graph)
    if args.kind and args.n is not None:
        if args.n < 2:
            parser.error(f"--n must be >= 2 for --kind {args.kind}")
        return generate_basic(args.kind, args.n)
    parser.error("give --graph FILE or --kind KIND --n N")


def _graph_source(args) -> dict:
    """Graph content echoed into the manifest when it came from a file."""
    if args.graph:
        return {"graph": graph_to_dict(load_graph(args.graph))}
    return {}


# -- commands -------------------------------------------------------------------


def cmd_generate(args, parser):
    if args.kind is None or args.n is None:
        parser.error("--kind and --n are required")
    if args.n < 2:
        parser.error("--n must be >= 2")
    g = generate_basic(args.kind, args.n, directed=args.directed, weight=args.weight)
    doc = graph_to_dict(g)
    report = {"graph": doc, "degrees": g.degrees()}
    files = {"graph.json": _dumps(doc)}
    if args.format == "csv":
        files["graph.csv"] = _csv(["src", "dst", "weight"], [(u, v, w) for u, v, w in g.edges])
    return report, files, {}


def _weight(args, g: Graph) -> float | None:
    if args.weight == "auto":
        return share_weight(g, args.intermediate_share)
    if args.weight == "graph":
        return None
    return float(args.weight)


def cmd_volatility(args, parser):
    g = _resolve_graph(args, parser)
    w = _weight(args, g)
    step = build_step_set(g, w, _fraction(args.m_rate), _fraction(args.n_rate), args.mode, args.border)
    n = g.n
    static = leontief_inverse(step.A_s[:n, :n])
    dynamic = leontief_inverse(step.M)
    var_L, var_Ls = static.row_sum_variance, dynamic.row_sum_variance
    change = (var_Ls - var_L) / var_L * 100 if var_L > 0 else None
    vol_L = aggregate_volatility(args.sigma, static.L, args.alpha)
    vol_Ls = aggregate_volatility(args.sigma, dynamic.L, args.alpha)
    report = {
        "pair": [var_L, var_Ls],
        "percent_change": change,
        "edge_weight": w,
        "spectral_radius": [static.spectral_radius, dynamic.spectral_radius],
        "static": vol_L.to_dict(),
        "dynamic": vol_Ls.to_dict(),
        "matrices": {"A_s": step.A_s, "B": step.B, "C": step.C},
    }
    resolved = {**_graph_source(args), "resolved_weight": w}
    files = {"volatility.json": _dumps(report)}
    if args.format == "csv":
        files["volatility.csv"] = _csv(["quantity", "static", "dynamic"], [
            ("var_row_sums", var_L, var_Ls),
            ("sigma_agg", vol_L.sigma_agg, vol_Ls.sigma_agg),
            ("sigma_norm", vol_L.sigma_norm, vol_Ls.sigma_norm),
        ])
    return report, files, resolved


def _evolution_config(args, parser) -> EvolutionConfig:
    g = _resolve_graph(args, parser)
    return EvolutionConfig(
        initial=g,
        steps=args.steps,
        n_over_m=_fraction(args.n_over_m),
        edges_per_new_node=args.edges_per_node,
        seed=args.seed,
        record_every=args.record_every,
    )


def cmd_evolve(args, parser):
    if args.steps < 1:
        parser.error("--steps must be >= 1")
    cfg = _evolution_config(args, parser)
    traj = evolve(cfg)
    last = traj.snapshots[-1]
    report = {"n_nodes": last.n_nodes, "mean_degree": last.mean_degree, "histogram": last.histogram, "events": len(traj.events)}
    snap_lines = []
    for s in traj.snapshots:
        snap_lines.append(json.dumps(_clean({
            "t": s.t,
            "n_nodes": s.n_nodes,
            "mean_degree": s.mean_degree,
            "attachment_denominator": s.attachment_denominator,
            "degree_mass": s.degree_mass,
            "histogram": {str(k): v for k, v in s.histogram.items()},
        }), sort_keys=True))
    events = _csv(["t", "action", "node_id", "target_ids"],
                  [(e.t, e.action, e.node_id, " ".join(map(str, e.targets))) for e in traj.events])
    files = {
        "trajectory.jsonl": "\n".join(snap_lines) + "\n",
        "events.csv": events,
        "final_graph.json": _dumps(graph_to_dict(traj.final_graph)),
        "evolve.json": _dumps(report),
    }
    return report, files, _graph_source(args)


def cmd_stationary(args, parser):
    if args.k_max < 1:
        parser.error("--k-max must be >= 1")
    params = StationaryParams(q=args.q, nu=args.nu, delta=args.delta, g=args.g, r=args.r)
    derived = compute_RS(params)
    ks = np.arange(1, args.k_max + 1)
    pk = stationary_pmf(ks, params, derived)
    fit = fit_power_law((ks, pk), k_min=args.k_min, method=args.fit_method)
    report = {"R": derived.R, "S": derived.S, "lambda": derived.lambda_norm, "fit": fit.to_dict()}
    files = {"pk.csv": _csv(["k", "p(k)"], [(int(k), float(p)) for k, p in zip(ks, pk)]), "fit.json": _dumps(report)}
    resolved = {"R": derived.R, "S": derived.S, "lambda": derived.lambda_norm}
    return report, files, resolved


def cmd_montecarlo(args, parser):
    if args.trials < 2:
        parser.error("--trials must be >= 2")
    if args.steps < 1:
        parser.error("--steps must be >= 1")
    cfg = _evolution_config(args, parser)
    template = EconomyTemplate(
        edge_weight=None if args.weight == "auto" else float(args.weight),
        intermediate_share=args.intermediate_share,
        m_rate=_fraction(args.m_rate),
        n_rate=_fraction(args.n_rate),
        mode=args.mode,
        border=args.border,
        centrality=args.centrality,
    )
    rep = monte_carlo_var_centrality(cfg, template, trials=args.trials, seed=args.seed, workers=args.workers)
    report = {k: v for k, v in rep.to_dict().items() if k not in ("samples", "qq_points")}
    files = {
        "montecarlo.json": _dumps(report),
        "samples.csv": _csv(["sample"], [(float(s),) for s in rep.samples]),
        "qq.csv": _csv(["theoretical", "empirical"], rep.qq_points),
    }
    resolved = {**_graph_source(args), "template": template.to_dict()}
    return report, files, resolved


def _parse_group(text: str, g: Graph) -> tuple:
    gain, _, members = text.partition(":")
    if not members:
        raise argparse.ArgumentTypeError(f"group {text!r} must look like GAIN:NODE[,NODE...]")
    lookup = {str(x): i for i, x in enumerate(g.nodes)}
    try:
        idx = {lookup[m.strip()] for m in members.split(",")}
    except KeyError as exc:
        raise argparse.ArgumentTypeError(f"unknown node {exc} in group {text!r}") from None
    return float(gain), idx


def cmd_control(args, parser):
    if args.analytic:
        if args.gamma is None or args.kmean is None:
            parser.error("--analytic needs --gamma and --kmean")
        n_d = driver_fraction_analytic(args.gamma, args.kmean)
        report = {"n_D_analytic": n_d, "gamma": args.gamma, "k_mean": args.kmean}
        return report, {"control.json": _dumps(report)}, {}

    g = _resolve_graph(args, parser)
    inputs = None
    if args.group:
        try:
            inputs = InputAssignment(g.n, tuple(_parse_group(t, g) for t in args.group))
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    elif args.diagonal:
        inputs = InputAssignment.full_diagonal([float(i + 1) for i in range(g.n)])
    rep = control_report(g, inputs, gamma=args.gamma, exact=args.exact, tol=args.tol)
    report = rep.to_dict()
    files = {"control.json": _dumps(report), "drivers.txt": "".join(f"{x}\n" for x in rep.driver_nodes)}
    return report, files, _graph_source(args)


# -- parser -----------------------------------------------------------------------


def _rates(p):
    p.add_argument("--m-rate", default="1", help="entry rate m (rational)")
    p.add_argument("--n-rate", default="1/2", help="exit rate n < m (rational)")


def _economy_args(p):
    p.add_argument("--weight", default="auto", help="edge weight, 'auto' (share / k_max) or 'graph'")
    p.add_argument("--intermediate-share", type=float, default=0.8)
    p.add_argument("--mode", choices=("text", "displayed"), default="text")
    p.add_argument("--border", type=float, default=0.2)
    _rates(p)


def _evolve_args(p):
    _graph_args(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--n-over-m", default="1/2")
    p.add_argument("--edges-per-node", type=int, default=1)
    p.add_argument("--record-every", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="prodnet-out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", help="JSON file of option defaults; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="prodnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a basic topology")
    # checked in cmd_generate so that --config can supply them
    p.add_argument("--kind", choices=BASIC_KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--weight", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("volatility", parents=[common], help="variance of row sums of L and L_s")
    _graph_args(p)
    _economy_args(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.2, help="labor share")
    p.set_defaults(func=cmd_volatility)

    p = sub.add_parser("evolve", parents=[common], help="simulate entry and exit")
    _evolve_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("stationary", parents=[common], help="closed-form degree distribution and fit")
    p.add_argument("--q", type=float, default=0.24)
    p.add_argument("--nu", type=float, default=1.06)
    p.add_argument("--delta", type=float, default=0.75)
    p.add_argument("--g", type=float, default=0.04)
    p.add_argument("--r", type=float, default=0.18)
    p.add_argument("--k-max", type=int, default=100)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--fit-method", choices=("ls", "mle"), default="ls")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("montecarlo", parents=[common], help="distribution of var(v) over evolved networks")
    _evolve_args(p)
    _economy_args(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--centrality", choices=("row", "column"), default="row")
    p.set_defaults(func=cmd_montecarlo, kind="cycle", n=5)

    p = sub.add_parser("control", parents=[common], help="Kalman rank and driver nodes")
    _graph_args(p)
    p.add_argument("--group", action="append", help="input group GAIN:NODE[,NODE...]; repeatable")
    p.add_argument("--diagonal", action="store_true", help="one input per node with distinct gains")
    p.add_argument("--exact", action="store_true", help="rational-arithmetic rank")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--analytic", action="store_true", help="only evaluate the scale-free n_D estimate")
    p.add_argument("--gamma", type=float)
    p.add_argument("--kmean", type=float)
    p.set_defaults(func=cmd_control)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    doc = json.loads(Path(args.config).read_text())
    if "command" in doc and "config" in doc:
        doc = doc["config"]
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})
    return parser.parse_args(argv)


_NOT_ECHOED = {"func", "config", "out", "verbose", "command"}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        report, files, resolved = args.func(args, sub)
    except ProdnetError as exc:
        print(f"prodnet {args.command}: {exc}", file=sys.stderr)
        return 1

    options = {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "config": options,
        "derived": resolved,
        "outputs": sorted(files),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    (out / "manifest.json").write_text(_dumps(manifest))
    sys.stdout.write(_dumps(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
