"""Ring overlays with inaccurate embeddings and scale-free long-range links.

A graph instance has ``n`` nodes on the ring ``Z_n``. Every node ``v`` picks one
short-range neighbour uniformly from ``v+1 .. v+C`` and one from ``v-C .. v-1``.
Each node also draws a label ``l_v`` from a power law truncated at ``mu``. Every
unordered pair ``(u, v)`` is then joined independently with probability
``1 - exp(-l_u * l_v / (dist(u, v) * gamma))``. ``gamma`` is calibrated so that
a label-1 node has one long-range link in expectation.

Random stream layout
--------------------
All randomness derives from ``numpy.random.SeedSequence(seed, spawn_key=(k,))``
feeding a PCG64 generator. The sub-streams ``k`` are:

* ``0`` labels, drawn as one vector of ``n`` values in node order,
* ``1`` short-range offsets: ``n`` forward offsets, then ``n`` backward offsets,
* ``2`` the exact long-range generator, consuming one uniform per pair in
  distance-major order (``d = 1 .. n//2``, then ``u`` ascending),
* ``3`` the poisson long-range generator: the event count, then per chunk the
  distances, sources, directions and acceptance uniforms.

Labels and short-range links therefore coincide for both generators at equal
seeds, and only the long-range edge sets differ.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

FORMAT_VERSION = 1
GENERATORS = ("exact", "poisson")
SHORT_RANGE = 0
LONG_RANGE = 1
EDGE_KIND_NAMES = {SHORT_RANGE: "short_range", LONG_RANGE: "long_range"}

STREAM_LABELS = 0
STREAM_SHORT = 1
STREAM_LONG_EXACT = 2
STREAM_LONG_POISSON = 3

EXACT_N_CAP = 2**15
POISSON_CHUNK = 1 << 20


class ParameterError(ValueError):
    """Raised for model parameters outside their admissible range."""


class GraphValidationError(ValueError):
    """Raised when a graph document or graph violates an invariant."""


class NumericalError(RuntimeError):
    pass


def default_mu(n: int) -> int:
    return max(2, math.ceil(math.log2(n)))


@dataclass(frozen=True)
class GraphParams:
    n: int
    c: int
    alpha: float
    mu: Optional[int] = None
    seed: int = 0
    generator: str = "poisson"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ParameterError(f"n must be an integer >= 4, got {self.n}")
        if self.mu is None:
            object.__setattr__(self, "mu", default_mu(int(self.n)))
        if int(self.c) != self.c or not 1 <= self.c < self.n / 4:
            raise ParameterError(f"c must satisfy 1 <= c < n/4, got c={self.c} for n={self.n}")
        if not 2.0 < self.alpha < 3.0:
            raise ParameterError(f"alpha must lie in the open interval (2, 3), got {self.alpha}")
        if int(self.mu) != self.mu or self.mu < 1:
            raise ParameterError(f"mu must be an integer >= 1, got {self.mu}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.generator not in GENERATORS:
            raise ParameterError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", int(self.c))
        object.__setattr__(self, "mu", int(self.mu))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.c >= 0.25 * self.n**0.25:
            warnings.warn(
                f"c={self.c} exceeds n^(1/4)/4={0.25 * self.n ** 0.25:.3g}; "
                "the lower-bound regime no longer applies",
                stacklevel=3,
            )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "alpha": self.alpha,
            "mu": self.mu,
            "seed": self.seed,
            "generator": self.generator,
        }


def substream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def ring_distance(u, v, n: int):
    """Wrap-around distance on ``Z_n``; accepts scalars or arrays."""
    diff = np.abs(np.asarray(u) - np.asarray(v))
    out = np.minimum(diff, n - diff)
    return int(out) if out.ndim == 0 else out


def pairs_at_distance(n: int) -> np.ndarray:
    """Number of unordered node pairs at each distance ``d = 1 .. n//2``."""
    counts = np.full(n // 2, n, dtype=np.int64)
    if n % 2 == 0:
        counts[-1] = n // 2
    return counts


def nodes_at_distance(n: int) -> np.ndarray:
    """Number of nodes at distance ``d = 1 .. n//2`` from any fixed node."""
    counts = np.full(n // 2, 2, dtype=np.int64)
    if n % 2 == 0:
        counts[-1] = 1
    return counts


# --------------------------------------------------------------------------- labels


def label_pmf(alpha: float, mu: int) -> np.ndarray:
    """Probabilities of labels ``1 .. mu`` under the truncated power law."""
    if mu < 1:
        raise ParameterError(f"mu must be >= 1, got {mu}")
    if alpha <= 1.0:
        raise ParameterError(f"alpha must exceed 1, got {alpha}")
    weights = np.arange(1, mu + 1, dtype=np.float64) ** (-alpha)
    return weights / math.fsum(weights)


def sample_labels(rng: np.random.Generator, alpha: float, mu: int, size: int) -> np.ndarray:
    cdf = np.cumsum(label_pmf(alpha, mu))
    cdf[-1] = 1.0
    draws = rng.random(size)
    return (np.searchsorted(cdf, draws, side="right") + 1).astype(np.int64)


def sample_label(rng: np.random.Generator, alpha: float, mu: int) -> int:
    return int(sample_labels(rng, alpha, mu, 1)[0])


# --------------------------------------------------------------------------- gamma


def expected_label1_degree(gamma: float, n: int, alpha: float, mu: int) -> float:
    """Expected long-range degree of a label-1 node for a given ``gamma``.

    Each distance is weighted by the number of nodes at that distance, so the
    antipode of an even ring counts once.
    """
    d = np.arange(1, n // 2 + 1, dtype=np.float64)
    labels = np.arange(1, mu + 1, dtype=np.float64)
    pmf = label_pmf(alpha, mu)
    weights = nodes_at_distance(n).astype(np.float64)
    per_d = (-np.expm1(-labels[None, :] / (d[:, None] * gamma)) * pmf[None, :]).sum(axis=1)
    return math.fsum(weights * per_d)


def calibrate_gamma(n: int, alpha: float, mu: int, tol: float = 1e-10) -> float:
    """Find ``gamma`` with ``expected_label1_degree(gamma) == 1`` by bisection."""
    if tol <= 0:
        raise ParameterError("tol must be positive")

    def f(g):
        return expected_label1_degree(g, n, alpha, mu) - 1.0

    lo, hi = 1e-6, 1e3 * mu * math.log(n)
    if f(lo) <= 0:
        raise NumericalError(f"F(gamma={lo}) does not exceed 1")
    for _ in range(64):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericalError("could not bracket gamma")

    mid = 0.5 * (lo + hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val) <= tol:
            return mid
        if val > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    if abs(f(mid)) > tol:
        raise NumericalError(f"bisection stalled at gamma={mid} with |F-1|={abs(f(mid)):.3g}")
    return mid


def long_range_probability(l_u: float, l_v: float, d: float, gamma: float) -> float:
    if d <= 0:
        raise ValueError("distance must be positive; self-pairs carry no long-range link")
    return -math.expm1(-(l_u * l_v) / (d * gamma))


# --------------------------------------------------------------------------- edges


def _canonical_pairs(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    keys = np.unique(lo.astype(np.int64) * n + hi)
    return np.stack([keys // n, keys % n], axis=1)


def generate_short_range(params: GraphParams, rng: np.random.Generator) -> np.ndarray:
    """Sorted ``(m, 2)`` array of short-range edges, ``u < v`` per row."""
    n, c = params.n, params.c
    nodes = np.arange(n, dtype=np.int64)
    forward = rng.integers(1, c + 1, size=n)
    backward = rng.integers(1, c + 1, size=n)
    a = (nodes + forward) % n
    b = (nodes - backward) % n
    return _canonical_pairs(np.concatenate([nodes, nodes]), np.concatenate([a, b]), n)


def generate_long_range_exact(
    labels: np.ndarray, gamma: float, rng: np.random.Generator, n_cap: int = EXACT_N_CAP
) -> np.ndarray:
    """Evaluate every pair once. Quadratic; use the poisson sampler for big rings."""
    labels = np.asarray(labels, dtype=np.float64)
    n = labels.size
    if n > n_cap:
        raise ParameterError(
            f"n={n} exceeds the exact generator cap {n_cap}; use generator='poisson' or raise the cap"
        )
    chosen = []
    for d, count in zip(range(1, n // 2 + 1), pairs_at_distance(n)):
        u = np.arange(count, dtype=np.int64)
        v = (u + d) % n
        p = -np.expm1(-(labels[u] * labels[v]) / (d * gamma))
        keep = rng.random(count) < p
        if keep.any():
            chosen.append((u[keep], v[keep]))
    if not chosen:
        return np.empty((0, 2), dtype=np.int64)
    u = np.concatenate([c[0] for c in chosen])
    v = np.concatenate([c[1] for c in chosen])
    return _canonical_pairs(u, v, n)


def generate_long_range_poisson(
    labels: np.ndarray,
    gamma: float,
    rng: np.random.Generator,
    mu: Optional[int] = None,
    chunk: int = POISSON_CHUNK,
) -> np.ndarray:
    """Same edge law as the exact generator via a thinned Poisson envelope.

    Each pair at distance ``d`` receives Poisson events at rate
    ``mu**2 / (gamma * d)``; an event on ``(u, v)`` survives with probability
    ``l_u * l_v / mu**2`` and the pair is an edge iff any event survives.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    mu = int(labels.max()) if mu is None else int(mu)
    if labels.size and labels.max() > mu:
        raise ParameterError("labels exceed the envelope maximum mu")
    pairs = pairs_at_distance(n).astype(np.float64)
    d_all = np.arange(1, n // 2 + 1, dtype=np.float64)
    mass = pairs / d_all
    total_rate = (mu * mu / gamma) * math.fsum(mass)
    cdf = np.cumsum(mass)
    cdf /= cdf[-1]
    cdf[-1] = 1.0

    remaining = int(rng.poisson(total_rate))
    mu_sq = float(mu * mu)
    keys = []
    while remaining > 0:
        k = min(chunk, remaining)
        remaining -= k
        d = np.searchsorted(cdf, rng.random(k), side="right").astype(np.int64) + 1
        u = rng.integers(0, n, size=k)
        sign = rng.integers(0, 2, size=k) * 2 - 1
        v = (u + sign * d) % n
        accept = rng.random(k) * mu_sq < labels[u] * labels[v]
        u, v = u[accept], v[accept]
        keys.append(np.minimum(u, v) * n + np.maximum(u, v))
    if not keys:
        return np.empty((0, 2), dtype=np.int64)
    keys = np.unique(np.concatenate(keys))
    return np.stack([keys // n, keys % n], axis=1)


# --------------------------------------------------------------------------- graph


@dataclass(frozen=True, eq=False)
class OverlayGraph:
    """Immutable undirected graph on ``Z_n`` stored as CSR plus a canonical edge list.

    ``params`` is ``None`` for hand-built graphs, which then carry only ``n``
    and the short-range scale ``c`` used for hop budgets.
    """

    n: int
    c: int
    edges: np.ndarray
    edge_kinds: np.ndarray
    labels: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    params: Optional[GraphParams] = None
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)
    adj_kinds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        kinds = np.asarray(self.edge_kinds, dtype=np.int8).reshape(-1)
        if kinds.size != edges.shape[0]:
            raise GraphValidationError("edge_kinds length differs from edges")
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        both_kinds = np.concatenate([kinds, kinds])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        arrays = {
            "edges": edges,
            "edge_kinds": kinds,
            "indptr": indptr,
            "indices": dst[order].astype(np.int64),
            "adj_kinds": both_kinds[order],
        }
        if self.labels is not None:
            arrays["labels"] = np.asarray(self.labels, dtype=np.int64)
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n, edges, c=1, edge_kinds=None, labels=None, gamma=None, params=None):
        """Build a graph from an arbitrary undirected edge list (any orientation)."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise GraphValidationError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphValidationError("self-loop")
        if edge_kinds is None:
            edge_kinds = np.full(len(edges), LONG_RANGE, dtype=np.int8)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = lo * n + hi
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if np.any(np.diff(keys) == 0):
            raise GraphValidationError("duplicate edge")
        canonical = np.stack([keys // n, keys % n], axis=1)
        return cls(
            n=int(n),
            c=int(c),
            edges=canonical,
            edge_kinds=np.asarray(edge_kinds, dtype=np.int8)[order],
            labels=labels,
            gamma=gamma,
            params=params,
        )

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def edge_lengths(self, kind: Optional[int] = None) -> np.ndarray:
        edges = self.edges if kind is None else self.edges[self.edge_kinds == kind]
        return ring_distance(edges[:, 0], edges[:, 1], self.n)

    def __eq__(self, other):
        if not isinstance(other, OverlayGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.c == other.c
            and self.params == other.params
            and self.gamma == other.gamma
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.edge_kinds, other.edge_kinds)
            and (
                (self.labels is None and other.labels is None)
                or (
                    self.labels is not None
                    and other.labels is not None
                    and np.array_equal(self.labels, other.labels)
                )
            )
        )

    __hash__ = None


@dataclass(frozen=True)
class GraphSample:
    """Raw ingredients of one instance, before short/long edges are merged."""

    params: GraphParams
    gamma: float
    labels: np.ndarray
    short_edges: np.ndarray
    long_edges: np.ndarray


def sample_components(params: GraphParams, gamma: Optional[float] = None, exact_cap: int = EXACT_N_CAP) -> GraphSample:
    if gamma is None:
        gamma = calibrate_gamma(params.n, params.alpha, params.mu)
    labels = sample_labels(substream(params.seed, STREAM_LABELS), params.alpha, params.mu, params.n)
    short = generate_short_range(params, substream(params.seed, STREAM_SHORT))
    if params.generator == "exact":
        long_ = generate_long_range_exact(labels, gamma, substream(params.seed, STREAM_LONG_EXACT), exact_cap)
    else:
        long_ = generate_long_range_poisson(
            labels, gamma, substream(params.seed, STREAM_LONG_POISSON), mu=params.mu
        )
    return GraphSample(params, gamma, labels, short, long_)


def assemble(sample: GraphSample) -> OverlayGraph:
    """Merge short and long edges; coincident pairs keep the short-range tag."""
    n = sample.params.n
    short_keys = sample.short_edges[:, 0] * n + sample.short_edges[:, 1]
    long_keys = sample.long_edges[:, 0] * n + sample.long_edges[:, 1]
    keys = np.union1d(short_keys, long_keys)
    kinds = np.where(np.isin(keys, short_keys), SHORT_RANGE, LONG_RANGE).astype(np.int8)
    return OverlayGraph(
        n=n,
        c=sample.params.c,
        edges=np.stack([keys // n, keys % n], axis=1),
        edge_kinds=kinds,
        labels=sample.labels,
        gamma=sample.gamma,
        params=sample.params,
    )


def build_graph(params: GraphParams, gamma: Optional[float] = None, exact_cap: int = EXACT_N_CAP) -> OverlayGraph:
    """Deterministic in ``params`` (seed included). ``gamma`` may be passed to skip recalibration."""
    return assemble(sample_components(params, gamma=gamma, exact_cap=exact_cap))


# --------------------------------------------------------------------------- validation & documents


def validate_graph(g: OverlayGraph, check_gamma_tol: Optional[float] = 1e-8) -> None:
    """Raise :class:`GraphValidationError` naming the first violated invariant."""
    n = g.n
    e = g.edges
    if e.size:
        if e.min() < 0 or e.max() >= n:
            raise GraphValidationError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphValidationError("self-loop")
        if np.any(e[:, 0] > e[:, 1]):
            raise GraphValidationError("edge not in canonical (u < v) orientation")
        keys = e[:, 0] * n + e[:, 1]
        if np.any(np.diff(keys) <= 0):
            raise GraphValidationError("edges not strictly sorted (duplicate or out of order)")
    if not np.isin(g.edge_kinds, (SHORT_RANGE, LONG_RANGE)).all():
        raise GraphValidationError("unknown edge kind")
    if g.labels is not None:
        if g.labels.size != n:
            raise GraphValidationError("label array length differs from n")
        mu = g.params.mu if g.params is not None else None
        if g.labels.min() < 1 or (mu is not None and g.labels.max() > mu):
            raise GraphValidationError("label out of range")
    if g.params is None:
        return
    if g.params.n != n or g.params.c != g.c:
        raise GraphValidationError("params disagree with graph size")
    if g.labels is None:
        raise GraphValidationError("generated graph is missing labels")
    if g.gamma is None or not g.gamma > 0:
        raise GraphValidationError("gamma must be positive")
    offsets = (g.indices - np.repeat(np.arange(n), np.diff(g.indptr))) % n
    owner = np.repeat(np.arange(n), np.diff(g.indptr))
    fwd = np.zeros(n, dtype=bool)
    bwd = np.zeros(n, dtype=bool)
    fwd[owner[(offsets >= 1) & (offsets <= g.c)]] = True
    bwd[owner[(offsets >= n - g.c) & (offsets <= n - 1)]] = True
    if not (fwd.all() and bwd.all()):
        bad = int(np.flatnonzero(~(fwd & bwd))[0])
        raise GraphValidationError(f"short-range guarantee violated at node {bad}")
    if check_gamma_tol is not None:
        err = abs(expected_label1_degree(g.gamma, n, g.params.alpha, g.params.mu) - 1.0)
        if err > check_gamma_tol:
            raise GraphValidationError(f"gamma is not calibrated (|F-1|={err:.3g})")


def graph_to_document(g: OverlayGraph) -> dict:
    if g.params is not None:
        params = g.params.to_dict()
    else:
        params = {"n": g.n, "c": g.c, "alpha": None, "mu": None, "seed": None, "generator": "manual"}
    return {
        "format_version": FORMAT_VERSION,
        "params": params,
        "gamma": g.gamma,
        "labels": None if g.labels is None else g.labels.tolist(),
        "edges": g.edges.tolist(),
        "edge_kinds": [EDGE_KIND_NAMES[int(k)] for k in g.edge_kinds],
        "adjacency": [g.neighbors(v).tolist() for v in range(g.n)],
    }


def serialize_graph(g: OverlayGraph) -> str:
    return json.dumps(graph_to_document(g), separators=(",", ":")) + "\n"


def _check_adjacency(adjacency, n):
    if len(adjacency) != n:
        raise GraphValidationError("adjacency length differs from n")
    neighbor_sets = []
    for v, nbrs in enumerate(adjacency):
        if any(not isinstance(u, int) or not 0 <= u < n for u in nbrs):
            raise GraphValidationError(f"adjacency of node {v} has an out-of-range entry")
        if v in nbrs:
            raise GraphValidationError(f"self-loop at node {v}")
        if len(set(nbrs)) != len(nbrs):
            raise GraphValidationError(f"duplicate neighbor at node {v}")
        neighbor_sets.append(set(nbrs))
    for v, nbrs in enumerate(neighbor_sets):
        for u in sorted(nbrs):
            if v not in neighbor_sets[u]:
                raise GraphValidationError(f"asymmetric adjacency: {v}->{u} listed without {u}->{v}")
    return neighbor_sets


def document_to_graph(doc: dict, check_gamma_tol: Optional[float] = 1e-8) -> OverlayGraph:
    if not isinstance(doc, dict):
        raise GraphValidationError("document must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise GraphValidationError(f"unknown format_version {version!r}")
    for key in ("params", "gamma", "labels", "edges", "edge_kinds"):
        if key not in doc:
            raise GraphValidationError(f"missing field {key!r}")
    p = doc["params"]
    if not isinstance(p, dict) or "n" not in p or "c" not in p:
        raise GraphValidationError("params must carry n and c")
    n, c = p["n"], p["c"]
    if not isinstance(n, int) or not isinstance(c, int) or n < 2 or c < 1:
        raise GraphValidationError("params.n / params.c malformed")
    params = None
    if p.get("generator") != "manual":
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                params = GraphParams(
                    n=n, c=c, alpha=p["alpha"], mu=p["mu"], seed=p["seed"], generator=p["generator"]
                )
        except (KeyError, TypeError, ParameterError) as exc:
            raise GraphValidationError(f"invalid params: {exc}") from None

    labels = doc["labels"]
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != n:
            raise GraphValidationError("labels must be a list of n integers")
        if any(not isinstance(x, int) for x in labels):
            raise GraphValidationError("labels must be integers")
        mu = params.mu if params is not None else None
        if any(x < 1 or (mu is not None and x > mu) for x in labels):
            raise GraphValidationError("label out of range")
        labels = np.asarray(labels, dtype=np.int64)

    edges = doc["edges"]
    kinds = doc["edge_kinds"]
    if not isinstance(edges, list) or not isinstance(kinds, list) or len(edges) != len(kinds):
        raise GraphValidationError("edges and edge_kinds must be parallel lists")
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise GraphValidationError(f"malformed edge {e!r}")
    name_to_kind = {v: k for k, v in EDGE_KIND_NAMES.items()}
    try:
        kind_arr = np.asarray([name_to_kind[k] for k in kinds], dtype=np.int8)
    except (KeyError, TypeError):
        raise GraphValidationError("unknown edge kind") from None
    edge_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)

    if "adjacency" in doc:
        neighbor_sets = _check_adjacency(doc["adjacency"], n)
        from_edges = [set() for _ in range(n)]
        for u, v in edges:
            if 0 <= u < n and 0 <= v < n:
                from_edges[u].add(v)
                from_edges[v].add(u)
        if from_edges != neighbor_sets:
            raise GraphValidationError("adjacency disagrees with the edge list")

    gamma = doc["gamma"]
    if gamma is not None and not isinstance(gamma, (int, float)):
        raise GraphValidationError("gamma must be a number")
    g = OverlayGraph(
        n=n,
        c=c,
        edges=edge_arr,
        edge_kinds=kind_arr,
        labels=labels,
        gamma=None if gamma is None else float(gamma),
        params=params,
    )
    validate_graph(g, check_gamma_tol=check_gamma_tol)
    return g


def deserialize_graph(text: str, check_gamma_tol: Optional[float] = 1e-8) -> OverlayGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphValidationError(f"malformed document: {exc}") from None
    return document_to_graph(doc, check_gamma_tol=check_gamma_tol)


def save_graph(g: OverlayGraph, path) -> None:
    Path(path).write_text(serialize_graph(g))


def load_graph(path) -> OverlayGraph:
    return deserialize_graph(Path(path).read_text())
