"""Experiment harness, structural estimators and closed-form bounds.

Seed derivation
---------------
Every random quantity in an experiment or estimator is keyed by
``derive_seed(base_seed, *keys)``, which hashes integer keys through
``numpy.random.SeedSequence``. For :func:`run_experiment` the graph seed of
graph ``g`` in cell ``c`` is ``derive_seed(base, c, g)`` and its query pairs come
from ``derive_seed(base, c, g, 1)``. Results therefore do not depend on how
work is split across processes.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats as _st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels, _reference
from ._accel import USE_NUMBA
from .graph_model import (
    LONG_RANGE,
    GraphParams,
    OverlayGraph,
    ParameterError,
    build_graph,
    calibrate_gamma,
    default_mu,
    expected_label1_degree,
    label_pmf,
    pairs_at_distance,
    ring_distance,
    sample_components,
)
from .routing import AlgorithmKind, RouteQuery, halving_statistics, route, route_many
from .stats import Z95, mean_ci95, wilson_interval

_impl = _kernels if USE_NUMBA else _reference

CSV_HEADER = [
    "n",
    "c",
    "alpha",
    "mu",
    "algorithm",
    "generator",
    "trials",
    "success_rate",
    "mean_hops",
    "ci95",
    "mean_forward",
    "mean_backtrack",
]

# integer tags for derive_seed, one per estimator
_TAG_GREEDY_PATH = 101
_TAG_LINK_TAIL = 102
_TAG_INWARD = 103
_TAG_HALVING = 104
_TAG_CONNECTIVITY = 105
_TAG_DEGREE = 106


def derive_seed(base: int, *keys: int) -> int:
    state = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys)).generate_state(2, np.uint64)
    return int(state[0])


def _quiet_params(**kw) -> GraphParams:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return GraphParams(**kw)


# --------------------------------------------------------------------------- bounds


@dataclass(frozen=True)
class TheoreticalBounds:
    alpha: float
    nbo_upper_exponent: float
    non_exponent: float
    delta: float
    r_min_star: float
    k_min: float
    c_term_upper: str = "C^3 log n"
    c_term_lower: str = "C"


def theoretical_bounds(alpha: float) -> TheoreticalBounds:
    """Routing-length exponents of ``log n`` for NextBestOnce and its NoN variant."""
    if not 2.0 < alpha < 3.0:
        raise ParameterError(f"alpha must lie in (2, 3), got {alpha}")
    delta = 1.0 - (alpha - 2.0) * (3.0 - alpha) / alpha
    return TheoreticalBounds(
        alpha=alpha,
        nbo_upper_exponent=alpha - 1.0,
        non_exponent=delta * (alpha - 1.0),
        delta=delta,
        r_min_star=delta,
        k_min=alpha - 2.0,
    )


def r_min(alpha: float, n: int) -> float:
    """Finite-n minimiser of the two-phase cost, natural logs throughout."""
    b = theoretical_bounds(alpha)
    loglog = math.log(math.log(n))
    return math.log((alpha - 1.0) ** (-1.0 / alpha)) / loglog + b.r_min_star


# --------------------------------------------------------------------------- reports


@dataclass
class EstimatorReport:
    name: str
    estimate: float
    ci_low: float
    ci_high: float
    samples: int
    params: dict
    extra: dict = field(default_factory=dict)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_document(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    return x


def _proportion_report(name, hits, trials, params, **extra) -> EstimatorReport:
    lo, hi = wilson_interval(hits, trials)
    est = hits / trials if trials else math.nan
    return EstimatorReport(name, est, lo, hi, trials, params, dict(extra))


# --------------------------------------------------------------------------- connectivity


@dataclass(frozen=True)
class ConnectivityReport:
    connected: bool
    component_sizes: list
    labels: np.ndarray = field(repr=False, compare=False)


def connectivity_check(graph: OverlayGraph) -> ConnectivityReport:
    adj = csr_matrix(
        (np.ones(graph.indices.size, dtype=np.int8), graph.indices, graph.indptr), shape=(graph.n, graph.n)
    )
    ncomp, labels = connected_components(adj, directed=False)
    sizes = sorted(np.bincount(labels, minlength=ncomp).tolist(), reverse=True)
    return ConnectivityReport(ncomp == 1, sizes, labels)


# --------------------------------------------------------------------------- greedy paths


def greedy_path_exists(graph: OverlayGraph, w: int, v: int) -> bool:
    """Whether some path from ``w`` to ``v`` strictly decreases the distance to ``v`` each hop."""
    if w == v:
        raise ValueError("w and v must differ")
    return bool(greedy_paths(graph, [w], [v])[0])


def greedy_paths(graph: OverlayGraph, ws, vs) -> np.ndarray:
    ws = np.ascontiguousarray(ws, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    return _impl.greedy_path_batch_kernel(graph.indptr, graph.indices, graph.n, ws, vs)


def _far_pairs(rng, n, threshold, k):
    """Uniform ordered pairs with ring distance strictly above ``threshold``."""
    lo, hi = threshold + 1, n - threshold - 1
    if lo > hi:
        raise ParameterError(f"no node pairs at distance > {threshold} on a ring of {n}")
    w = rng.integers(0, n, size=k)
    v = (w + rng.integers(lo, hi + 1, size=k)) % n
    return w, v


def estimate_greedy_path_probability(
    params: GraphParams,
    distance_threshold: Optional[int] = None,
    trials: int = 1000,
    pairs_per_graph: int = 100,
) -> EstimatorReport:
    """Fraction of far-apart pairs joined by a greedy path, over fresh graphs.

    The default threshold is ``round(C^2 ln n)``.
    """
    n = params.n
    if distance_threshold is None:
        distance_threshold = round(params.c**2 * math.log(n))
    distance_threshold = int(distance_threshold)
    if distance_threshold + 1 > n - distance_threshold - 1:
        raise ParameterError(f"no node pairs at distance > {distance_threshold} on a ring of {n}")
    gamma = calibrate_gamma(n, params.alpha, params.mu)
    hits = done = graph_index = 0
    while done < trials:
        k = min(pairs_per_graph, trials - done)
        seed = derive_seed(params.seed, _TAG_GREEDY_PATH, graph_index)
        g = build_graph(_quiet_params(**{**params.to_dict(), "seed": seed}), gamma=gamma)
        rng = np.random.default_rng(derive_seed(params.seed, _TAG_GREEDY_PATH, graph_index, 1))
        w, v = _far_pairs(rng, n, distance_threshold, k)
        hits += int(greedy_paths(g, w, v).sum())
        done += k
        graph_index += 1
    return _proportion_report(
        "greedy-path",
        hits,
        trials,
        params.to_dict(),
        distance_threshold=distance_threshold,
        graphs=graph_index,
    )


# --------------------------------------------------------------------------- link length tail


def link_probability_by_distance(n: int, alpha: float, mu: int, gamma: float) -> np.ndarray:
    """P(link | distance d) for d = 1 .. n//2, labels marginalised exactly."""
    pmf = label_pmf(alpha, mu)
    lab = np.arange(1, mu + 1, dtype=np.float64)
    prod = (lab[:, None] * lab[None, :]).ravel()
    weight = (pmf[:, None] * pmf[None, :]).ravel()
    d = np.arange(1, n // 2 + 1, dtype=np.float64)
    out = np.empty(d.size)
    step = max(1, 2_000_000 // prod.size)
    for i in range(0, d.size, step):
        dd = d[i : i + step, None]
        out[i : i + step] = (-np.expm1(-prod[None, :] / (dd * gamma)) * weight[None, :]).sum(axis=1)
    return out


def link_tail_analytic(n: int, alpha: float, mu: int, gamma: float, threshold: Optional[int] = None) -> float:
    """P(length >= threshold | long-range link); threshold defaults to round(2 sqrt n)."""
    if threshold is None:
        threshold = round(2 * math.sqrt(n))
    p_d = link_probability_by_distance(n, alpha, mu, gamma)
    mass = pairs_at_distance(n) * p_d
    d = np.arange(1, n // 2 + 1)
    return math.fsum(mass[d >= threshold]) / math.fsum(mass)


def estimate_link_length_tail(
    params: GraphParams, trials: int = 10, min_edges: Optional[int] = None
) -> EstimatorReport:
    """Share of long-range links of length >= round(2 sqrt n).

    Pools raw long-range edges over ``trials`` graphs, continuing past that
    until ``min_edges`` edges are collected when given.
    """
    n = params.n
    if n < 16:
        raise ParameterError("n must be at least 16")
    threshold = round(2 * math.sqrt(n))
    gamma = calibrate_gamma(n, params.alpha, params.mu)
    analytic = link_tail_analytic(n, params.alpha, params.mu, gamma, threshold)
    long_total = long_far = graphs = 0
    while graphs < trials or (min_edges is not None and long_total < min_edges):
        seed = derive_seed(params.seed, _TAG_LINK_TAIL, graphs)
        sample = sample_components(_quiet_params(**{**params.to_dict(), "seed": seed}), gamma=gamma)
        lengths = ring_distance(sample.long_edges[:, 0], sample.long_edges[:, 1], n)
        long_total += lengths.size
        long_far += int((lengths >= threshold).sum())
        graphs += 1
        if graphs >= 10_000:
            break
    if long_total == 0:
        return EstimatorReport(
            "link-tail", math.nan, math.nan, math.nan, 0, params.to_dict(),
            {"analytic": analytic, "diagnostic": "no long-range edges were generated"},
        )
    return _proportion_report(
        "link-tail", long_far, long_total, params.to_dict(),
        analytic=analytic, threshold=threshold, graphs=graphs,
    )


# --------------------------------------------------------------------------- inward links


def estimate_inward_links(graph: OverlayGraph, t: int, d: int) -> int:
    """Nodes at distance >= round(sqrt n) from ``t`` with a long-range neighbour at distance < d."""
    n = graph.n
    outer = round(math.sqrt(n))
    if d >= math.sqrt(n):
        raise ParameterError(f"d={d} must be below sqrt(n)={math.sqrt(n):.3f}")
    if d <= 0:
        return 0
    e = graph.edges[graph.edge_kinds == LONG_RANGE]
    du = ring_distance(e[:, 0], t, n)
    dv = ring_distance(e[:, 1], t, n)
    outside = np.concatenate([e[:, 0][(du >= outer) & (dv < d)], e[:, 1][(dv >= outer) & (du < d)]])
    return int(np.unique(outside).size)


def inward_link_trend(
    params: GraphParams, radii: Sequence[int] = (4, 8, 16, 32), seeds: int = 50
) -> EstimatorReport:
    """Spearman correlation between radius and inward-link count over fresh graphs."""
    gamma = calibrate_gamma(params.n, params.alpha, params.mu)
    xs, ys = [], []
    means = {int(r): [] for r in radii}
    for i in range(seeds):
        seed = derive_seed(params.seed, _TAG_INWARD, i)
        g = build_graph(_quiet_params(**{**params.to_dict(), "seed": seed}), gamma=gamma)
        t = int(np.random.default_rng(derive_seed(params.seed, _TAG_INWARD, i, 1)).integers(0, params.n))
        for r in radii:
            q = estimate_inward_links(g, t, int(r))
            xs.append(int(r))
            ys.append(q)
            means[int(r)].append(q)
    res = _st.spearmanr(xs, ys, alternative="greater")
    return EstimatorReport(
        "inward-links",
        float(res.statistic),
        math.nan,
        math.nan,
        len(xs),
        params.to_dict(),
        {"p_value": float(res.pvalue), "mean_by_radius": {r: float(np.mean(v)) for r, v in means.items()}},
    )


# --------------------------------------------------------------------------- halving


def halving_comparison(params: GraphParams, pairs: int = 200, r: Optional[float] = None) -> EstimatorReport:
    """Halving frequency for NoN and NBO on identical queries in one graph.

    The estimate is the NoN minus NBO frequency pooled over the upper half of
    the populated distance bins.
    """
    g = build_graph(params)
    comps = connectivity_check(g).labels
    rng = np.random.default_rng(derive_seed(params.seed, _TAG_HALVING))
    traces = {AlgorithmKind.NBO: [], AlgorithmKind.NON: []}
    while len(traces[AlgorithmKind.NBO]) < pairs:
        s, t = (int(x) for x in rng.integers(0, params.n, size=2))
        if s == t or comps[s] != comps[t]:
            continue
        for algo in traces:
            traces[algo].append(route(g, RouteQuery(s, t, algo)))
    profiles = {a: halving_statistics(tr, params.n, r=r) for a, tr in traces.items()}
    bins = sorted({b.d_low for p in profiles.values() for b in p})
    high = bins[len(bins) // 2 :]

    def pooled(profile):
        sel = [b for b in profile if b.d_low in high]
        k = sum(b.trials for b in sel)
        h = sum(b.halved for b in sel)
        return h, k

    (h_nbo, k_nbo), (h_non, k_non) = pooled(profiles[AlgorithmKind.NBO]), pooled(profiles[AlgorithmKind.NON])
    f_nbo = h_nbo / k_nbo if k_nbo else math.nan
    f_non = h_non / k_non if k_non else math.nan
    return EstimatorReport(
        "halving",
        f_non - f_nbo,
        math.nan,
        math.nan,
        k_nbo + k_non,
        params.to_dict(),
        {
            "nbo_frequency": f_nbo,
            "non_frequency": f_non,
            "high_bins_from": high[0] if high else None,
            "profiles": {a.value: [asdict(b) for b in p] for a, p in profiles.items()},
        },
    )


def connectivity_census(params: GraphParams, seeds: int = 100) -> EstimatorReport:
    gamma = calibrate_gamma(params.n, params.alpha, params.mu)
    connected = 0
    for i in range(seeds):
        seed = derive_seed(params.seed, _TAG_CONNECTIVITY, i)
        g = build_graph(_quiet_params(**{**params.to_dict(), "seed": seed}), gamma=gamma)
        connected += connectivity_check(g).connected
    return _proportion_report("connectivity", connected, seeds, params.to_dict())


def label1_degree(
    params: GraphParams, samples: int = 10_000, min_graphs: int = 10, max_graphs: int = 10_000
) -> EstimatorReport:
    """Mean raw long-range degree of label-1 nodes, with the calibration residual.

    Nodes of one graph share nearby hubs and each other's edges, so their
    degrees are positively correlated. Samples are therefore spread over at
    least ``min_graphs`` graphs (a random subset of label-1 nodes per graph) and
    the standard error is cluster-robust with graphs as clusters.
    """
    gamma = calibrate_gamma(params.n, params.alpha, params.mu)
    residual = abs(expected_label1_degree(gamma, params.n, params.alpha, params.mu) - 1.0)
    per_graph = max(1, -(-samples // max(1, min_graphs)))
    degrees = []
    collected = graphs = 0
    while collected < samples and graphs < max_graphs:
        seed = derive_seed(params.seed, _TAG_DEGREE, graphs)
        s = sample_components(_quiet_params(**{**params.to_dict(), "seed": seed}), gamma=gamma)
        deg = np.bincount(s.long_edges.ravel(), minlength=params.n)[s.labels == 1]
        take = min(per_graph, samples - collected, deg.size)
        rng = np.random.default_rng(derive_seed(params.seed, _TAG_DEGREE, graphs, 1))
        picked = rng.choice(deg, size=take, replace=False)
        if picked.size:
            degrees.append(picked.astype(np.float64))
        collected += picked.size
        graphs += 1
    x = np.concatenate(degrees)
    mean = float(x.mean())
    naive_se = float(x.std(ddof=1) / math.sqrt(x.size))
    g = len(degrees)
    if g >= 2:
        resid = np.array([d.sum() - mean * d.size for d in degrees])
        se = float(math.sqrt(g / (g - 1) * float((resid**2).sum())) / x.size)
    else:
        se = naive_se
    return EstimatorReport(
        "gamma",
        mean,
        mean - Z95 * se,
        mean + Z95 * se,
        int(x.size),
        params.to_dict(),
        {"gamma": gamma, "calibration_residual": residual, "standard_error": se,
         "naive_standard_error": naive_se, "graphs": graphs},
    )


# --------------------------------------------------------------------------- experiments


@dataclass
class ExperimentConfig:
    n_values: list
    c_values: list
    alpha_values: list
    algorithms: list
    mu_rule: Union[str, int] = "log2"
    graphs_per_cell: int = 1
    pairs_per_graph: int = 100
    base_seed: int = 0
    generator: str = "poisson"

    def __post_init__(self):
        self.algorithms = [AlgorithmKind.parse(a) for a in self.algorithms]
        for name in ("n_values", "c_values", "alpha_values", "algorithms"):
            if not getattr(self, name):
                raise ParameterError(f"{name} must not be empty")
        if self.graphs_per_cell < 1 or self.pairs_per_graph < 1:
            raise ParameterError("graphs_per_cell and pairs_per_graph must be >= 1")
        if not (self.mu_rule == "log2" or (isinstance(self.mu_rule, int) and self.mu_rule >= 1)):
            raise ParameterError(f"mu_rule must be 'log2' or a positive integer, got {self.mu_rule!r}")

    def cells(self) -> list[GraphParams]:
        out = []
        for n, c, alpha in itertools.product(self.n_values, self.c_values, self.alpha_values):
            mu = default_mu(n) if self.mu_rule == "log2" else self.mu_rule
            out.append(_quiet_params(n=n, c=c, alpha=alpha, mu=mu, seed=0, generator=self.generator))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = [a.value for a in self.algorithms]
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**doc)


@dataclass
class ResultRow:
    n: int
    c: int
    alpha: float
    mu: int
    algorithm: str
    generator: str
    trials: int
    success_rate: float
    mean_hops: float
    ci95: float
    mean_forward: float
    mean_backtrack: float
    aborted: int = 0
    disconnected_pairs: int = 0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    audit: dict = field(repr=False, default_factory=dict)
    samples: dict = field(repr=False, default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _run_graph_task(task):
    """Build one graph and route its pairs with every algorithm."""
    cell_index, graph_index, params_dict, gamma, algorithms, pairs, base_seed = task
    seed = derive_seed(base_seed, cell_index, graph_index)
    params = _quiet_params(**{**params_dict, "seed": seed})
    g = build_graph(params, gamma=gamma)
    comps = connectivity_check(g).labels
    rng = np.random.default_rng(derive_seed(base_seed, cell_index, graph_index, 1))
    s = rng.integers(0, params.n, size=pairs)
    t = (s + rng.integers(1, params.n, size=pairs)) % params.n
    keep = comps[s] == comps[t]
    s, t = s[keep], t[keep]
    out = {}
    for algo in algorithms:
        b = route_many(g, s, t, algo)
        out[algo] = (b.outcome, b.forward_hops, b.backtrack_hops)
    return cell_index, graph_index, seed, s, t, int((~keep).sum()), out


def run_experiment(config: ExperimentConfig, parallelism: int = 1) -> ExperimentResult:
    cells = config.cells()
    gammas = [calibrate_gamma(p.n, p.alpha, p.mu) for p in cells]
    algos = [a.value for a in config.algorithms]
    tasks = [
        (ci, gi, p.to_dict(), gammas[ci], algos, config.pairs_per_graph, config.base_seed)
        for ci, p in enumerate(cells)
        for gi in range(config.graphs_per_cell)
    ]
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_graph_task, tasks))
    else:
        results = [_run_graph_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    rows, audit, samples = [], {}, {}
    for ci, p in enumerate(cells):
        mine = [r for r in results if r[0] == ci]
        disconnected = sum(r[5] for r in mine)
        triples = np.concatenate(
            [np.stack([np.full(r[3].size, r[2], dtype=np.uint64), r[3].astype(np.uint64), r[4].astype(np.uint64)], 1) for r in mine]
        )
        for algo in algos:
            outcome = np.concatenate([r[6][algo][0] for r in mine])
            fwd = np.concatenate([r[6][algo][1] for r in mine])
            back = np.concatenate([r[6][algo][2] for r in mine])
            ok = outcome == _kernels.SUCCESS
            trials = int(outcome.size)
            audit[(ci, algo)] = triples
            samples[(ci, algo)] = {"outcome": outcome, "forward": fwd, "backtrack": back}
            if ok.any():
                mf = float(fwd[ok].mean())
                mb = float(back[ok].mean())
                _, half = mean_ci95(fwd[ok] + back[ok])
                mean_hops = mf + mb
            else:
                mf = mb = mean_hops = half = math.nan
            rows.append(
                ResultRow(
                    n=p.n, c=p.c, alpha=p.alpha, mu=p.mu, algorithm=algo, generator=p.generator,
                    trials=trials,
                    success_rate=float(ok.mean()) if trials else 0.0,
                    mean_hops=mean_hops, ci95=half, mean_forward=mf, mean_backtrack=mb,
                    aborted=int((outcome == _kernels.ABORTED).sum()),
                    disconnected_pairs=disconnected,
                )
            )
    return ExperimentResult(config, rows, audit, samples)


# --------------------------------------------------------------------------- scaling fits


@dataclass(frozen=True)
class ScalingFit:
    algorithm: str
    slope: float
    stderr: float
    intercept: float
    points: int


def fit_scaling(results: Union[ExperimentResult, Sequence], model: str = "polylog") -> dict[str, ScalingFit]:
    """Regress ln(mean_hops) on ln(ln n) per algorithm (rows grouped by algorithm)."""
    if model != "polylog":
        raise ParameterError(f"unsupported model {model!r}")
    rows = results.rows if isinstance(results, ExperimentResult) else list(results)
    by_algo: dict[str, list] = {}
    for r in rows:
        row = r if isinstance(r, dict) else asdict(r)
        by_algo.setdefault(row["algorithm"], []).append((row["n"], row["mean_hops"]))
    fits = {}
    for algo, pts in by_algo.items():
        pts = [(n, h) for n, h in pts if h is not None and not math.isnan(h) and h > 0]
        if len({n for n, _ in pts}) < 3:
            raise ParameterError(f"{algo}: need at least 3 distinct n values with finite means")
        x = np.log(np.log([n for n, _ in pts]))
        y = np.log([h for _, h in pts])
        lr = _st.linregress(x, y)
        fits[algo] = ScalingFit(algo, float(lr.slope), float(lr.stderr), float(lr.intercept), len(pts))
    return fits
