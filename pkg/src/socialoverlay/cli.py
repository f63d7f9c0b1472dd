"""Command line entry point: ``socialoverlay {generate,route,experiment,verify}``.

Exit codes: 0 completed (a failed route is still a result), 1 an acceptance
band was violated, 2 usage or validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
import warnings
from pathlib import Path

from . import analysis
from .graph_model import (
    EXACT_N_CAP,
    GENERATORS,
    LONG_RANGE,
    SHORT_RANGE,
    GraphParams,
    GraphValidationError,
    ParameterError,
    build_graph,
    deserialize_graph,
    expected_label1_degree,
    serialize_graph,
)
from .routing import AlgorithmKind, RouteQuery, route, trace_to_document

EXIT_OK = 0
EXIT_BAND = 1
EXIT_USAGE = 2
EXIT_IO = 3

SUITES = ("gamma", "link-tail", "greedy-path", "inward-links", "halving", "connectivity")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _echo(title: str, config: dict) -> None:
    print(f"[{title}] effective configuration:")
    for k, v in config.items():
        print(f"  {k} = {v}")


def _seed(value):
    if value is None:
        seed = secrets.randbits(63)
        print(f"no --seed given; using generated seed {seed}")
        return seed
    return value


def _params_from(args) -> GraphParams:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return GraphParams(
                n=args.n, c=args.c, alpha=args.alpha, mu=args.mu, seed=args.seed, generator=args.generator
            )
        except ParameterError as exc:
            raise UsageError(str(exc)) from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc


# --------------------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    args.seed = _seed(args.seed)
    params = _params_from(args)
    _echo("generate", {**params.to_dict(), "out": args.out, "exact_cap": args.exact_cap})
    try:
        g = build_graph(params, exact_cap=args.exact_cap)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, serialize_graph(g))
    conn = analysis.connectivity_check(g)
    residual = abs(expected_label1_degree(g.gamma, g.n, params.alpha, params.mu) - 1.0)
    print(f"gamma = {g.gamma!r} (|F(gamma)-1| = {residual:.3e})")
    print(f"edges: {g.num_edges} total, {int((g.edge_kinds == SHORT_RANGE).sum())} short_range, "
          f"{int((g.edge_kinds == LONG_RANGE).sum())} long_range")
    sizes = conn.component_sizes
    print(f"connected: {conn.connected} ({len(sizes)} component(s), largest {sizes[0]})")
    print(f"wrote {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------- route


def cmd_route(args) -> int:
    _echo("route", {"graph": args.graph, "source": args.source, "target": args.target,
                    "algo": args.algo, "trace_out": args.trace_out, "max_path": args.max_path})
    text = _read(args.graph)
    try:
        g = deserialize_graph(text)
    except GraphValidationError as exc:
        raise UsageError(f"invalid graph document: {exc}") from None
    for name in ("source", "target"):
        x = getattr(args, name)
        if not 0 <= x < g.n:
            raise UsageError(f"--{name} {x} outside [0, {g.n})")
    trace = route(g, RouteQuery(args.source, args.target, AlgorithmKind.parse(args.algo)))
    print(f"outcome: {trace.outcome}")
    print(f"hops: {trace.total_hops} (forward {trace.forward_hops}, backtrack {trace.backtrack_hops})")
    print(f"marked: {trace.marked_count}")
    if args.trace_out:
        _write(args.trace_out, json.dumps(trace_to_document(trace, args.max_path), separators=(",", ":")) + "\n")
        print(f"wrote {args.trace_out}")
    return EXIT_OK


# --------------------------------------------------------------------------- experiment


def _load_config(args) -> analysis.ExperimentConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: malformed document ({exc})") from None
        if not isinstance(doc, dict):
            raise UsageError("config: top level must be an object")
        doc = dict(doc)
        version = doc.pop("format_version", 1)
        if version != 1:
            raise UsageError(f"config.format_version: unknown version {version!r}")
    overrides = {
        "base_seed": args.base_seed,
        "graphs_per_cell": args.graphs_per_cell,
        "pairs_per_graph": args.pairs_per_graph,
        "generator": args.generator,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "base_seed" not in doc:
        doc["base_seed"] = _seed(None)
    list_fields = ("n_values", "c_values", "alpha_values", "algorithms")
    for key in list_fields:
        if key not in doc:
            raise UsageError(f"config.{key}: required field missing")
        if not isinstance(doc[key], list):
            raise UsageError(f"config.{key}: must be a list")
        if not doc[key]:
            raise UsageError(f"config.{key}: must not be empty")
    for key in ("graphs_per_cell", "pairs_per_graph", "base_seed"):
        if key in doc and (not isinstance(doc[key], int) or doc[key] < 0):
            raise UsageError(f"config.{key}: must be a non-negative integer")
    if doc.get("generator", "poisson") not in GENERATORS:
        raise UsageError(f"config.generator: must be one of {GENERATORS}")
    for i, a in enumerate(doc["algorithms"]):
        try:
            AlgorithmKind.parse(a)
        except ValueError as exc:
            raise UsageError(f"config.algorithms[{i}]: {exc}") from None
    try:
        cfg = analysis.ExperimentConfig.from_dict(doc)
        cfg.cells()
    except (ParameterError, TypeError) as exc:
        raise UsageError(f"config: {exc}") from None
    return cfg


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    if args.parallelism < 1:
        raise UsageError("--parallelism must be >= 1")
    _echo("experiment", {**cfg.to_dict(), "out": args.out, "parallelism": args.parallelism})
    result = analysis.run_experiment(cfg, parallelism=args.parallelism)
    _write(args.out, result.to_csv())
    _write(str(args.out) + ".config.json", json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")
    for r in result.rows:
        print(f"n={r.n} c={r.c} alpha={r.alpha} mu={r.mu} {r.algorithm:>6}: "
              f"mean_hops={r.mean_hops:.3f} ±{r.ci95:.3f} success={r.success_rate:.4f} "
              f"trials={r.trials} disconnected={r.disconnected_pairs} aborted={r.aborted}")
    print(f"wrote {args.out} ({len(result.rows)} rows)")
    return EXIT_OK


# --------------------------------------------------------------------------- verify


def _verify(args, params):
    """Run one suite; returns (report, passed, band description)."""
    suite = args.suite
    if suite == "gamma":
        tol = args.tolerance if args.tolerance is not None else 1e-10
        rep = analysis.label1_degree(params, samples=args.trials or 10_000)
        se = rep.extra["standard_error"]
        ok = rep.extra["calibration_residual"] <= tol and abs(rep.estimate - 1.0) <= 3 * se
        return rep, ok, f"|F(gamma)-1| <= {tol:g} and label-1 degree within 1 ± 3 SE"
    if suite == "link-tail":
        floor = args.band_min if args.band_min is not None else 0.25
        tol = args.tolerance if args.tolerance is not None else 0.05
        rep = analysis.estimate_link_length_tail(params, trials=args.trials or 1, min_edges=args.min_edges)
        ok = rep.estimate >= floor and abs(rep.estimate - rep.extra["analytic"]) <= tol
        return rep, ok, f"fraction >= {floor} and within ±{tol} of analytic"
    if suite == "greedy-path":
        floor = args.band_min if args.band_min is not None else 0.99
        rep = analysis.estimate_greedy_path_probability(params, args.threshold, trials=args.trials or 1000)
        return rep, rep.estimate >= floor, f"fraction >= {floor}"
    if suite == "inward-links":
        alpha_p = args.tolerance if args.tolerance is not None else 0.01
        radii = [r for r in (4, 8, 16, 32) if r < math.sqrt(params.n)]
        if len(radii) < 2:
            raise UsageError("inward-links needs n large enough for at least two radii below sqrt(n)")
        rep = analysis.inward_link_trend(params, radii=radii, seeds=args.trials or 50)
        ok = rep.estimate > 0 and rep.extra["p_value"] < alpha_p
        return rep, ok, f"Spearman > 0 with p < {alpha_p}"
    if suite == "halving":
        rep = analysis.halving_comparison(params, pairs=args.trials or 200)
        return rep, rep.estimate > 0, "NoN halving frequency above NBO in high-distance bins"
    if suite == "connectivity":
        floor = args.band_min if args.band_min is not None else 0.99
        rep = analysis.connectivity_census(params, seeds=args.trials or 100)
        return rep, rep.estimate >= floor, f"connected fraction >= {floor}"
    raise UsageError(f"unknown suite {suite!r}")


def cmd_verify(args) -> int:
    args.seed = _seed(args.seed)
    params = _params_from(args)
    _echo("verify", {"suite": args.suite, **params.to_dict(), "trials": args.trials, "out": args.out})
    rep, ok, band = _verify(args, params)
    print(f"{rep.name}: estimate={rep.estimate!r} ci=[{rep.ci_low!r}, {rep.ci_high!r}] samples={rep.samples}")
    for k, v in rep.extra.items():
        if k != "profiles":
            print(f"  {k} = {v}")
    print(f"band: {band} -> {'PASS' if ok else 'FAIL'}")
    if args.out:
        doc = {"suite": args.suite, "band": band, "passed": bool(ok), "seed": params.seed,
               "trials": args.trials, "report": rep.to_document()}
        _write(args.out, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_BAND


# --------------------------------------------------------------------------- parser


def _add_model_flags(p, n_default=None):
    p.add_argument("--n", type=int, required=n_default is None, default=n_default)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--alpha", type=float, default=2.5)
    p.add_argument("--mu", type=int, default=None, help="label maximum (default max(2, ceil(log2 n)))")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--generator", choices=GENERATORS, default="poisson")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="socialoverlay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    g = sub.add_parser("generate", help="sample a graph and write its document")
    _add_model_flags(g)
    g.add_argument("--out", required=True)
    g.add_argument("--exact-cap", type=int, default=EXACT_N_CAP)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("route", help="route one query on a stored graph")
    r.add_argument("--graph", required=True)
    r.add_argument("--source", type=int, required=True)
    r.add_argument("--target", type=int, required=True)
    r.add_argument("--algo", default="nbo", type=lambda s: AlgorithmKind.parse(s).value,
                   help="greedy | ddfs | nbo | non")
    r.add_argument("--trace-out", default=None)
    r.add_argument("--max-path", type=int, default=100_000)
    r.set_defaults(func=cmd_route)

    e = sub.add_parser("experiment", help="run a parameter sweep and write CSV")
    e.add_argument("--config", default=None)
    e.add_argument("--out", required=True)
    e.add_argument("--parallelism", type=int, default=1)
    e.add_argument("--base-seed", type=int, default=None)
    e.add_argument("--graphs-per-cell", type=int, default=None)
    e.add_argument("--pairs-per-graph", type=int, default=None)
    e.add_argument("--generator", choices=GENERATORS, default=None)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="run an estimator against its acceptance band")
    v.add_argument("--suite", required=True, choices=SUITES)
    _add_model_flags(v, n_default=1024)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--threshold", type=int, default=None, help="greedy-path distance threshold")
    v.add_argument("--min-edges", type=int, default=100_000, help="link-tail edge sample size")
    v.add_argument("--band-min", type=float, default=None)
    v.add_argument("--tolerance", type=float, default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
