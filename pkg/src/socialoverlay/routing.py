"""NextBestOnce-family routing with pluggable identifier sets, plus baselines.

Four algorithms share one skeleton:

* ``greedy``  forwards to a strictly closer neighbour and gives up at a local minimum.
* ``ddfs``    distance-directed depth-first search; marks each node on first arrival.
* ``nbo``     NextBestOnce; ranks neighbours by their own identifier.
* ``non``     NextBestOnce-NoN; ranks neighbour ``u`` by the closest of ``u`` and
  ``u``'s neighbours, but still decides marking on ``u``'s own identifier.

Hop counts include every message transfer. Forward and backtrack transfers
are reported separately.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import _kernels, _reference
from ._accel import USE_NUMBA
from .graph_model import OverlayGraph, ring_distance
from .stats import wilson_interval

_impl = _kernels if USE_NUMBA else _reference


class AlgorithmKind(str, enum.Enum):
    GREEDY = "greedy"
    DDFS = "ddfs"
    NBO = "nbo"
    NON = "non"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, value) -> "AlgorithmKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "greedy": cls.GREEDY,
            "ddfs": cls.DDFS,
            "distancedirecteddfs": cls.DDFS,
            "nbo": cls.NBO,
            "nextbestonce": cls.NBO,
            "non": cls.NON,
            "nextbestoncenon": cls.NON,
            "nbonon": cls.NON,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown algorithm {value!r}") from None


_CODES = {
    AlgorithmKind.GREEDY: _kernels.GREEDY,
    AlgorithmKind.DDFS: _kernels.DDFS,
    AlgorithmKind.NBO: _kernels.NBO,
    AlgorithmKind.NON: _kernels.NON,
}
OUTCOMES = {_kernels.SUCCESS: "success", _kernels.FAILURE: "failure", _kernels.ABORTED: "aborted"}


def default_hop_cap(graph: OverlayGraph) -> int:
    return 4 * (1 + graph.c) * graph.n


def hop_bound(graph: OverlayGraph) -> int:
    """Proven worst case for total transfers: ``2 (1 + C) n``."""
    return 2 * (1 + graph.c) * graph.n


@dataclass(frozen=True)
class RouteQuery:
    source: int
    target: int
    algorithm: AlgorithmKind = AlgorithmKind.NBO
    hop_cap: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmKind.parse(self.algorithm))


@dataclass(frozen=True, eq=False)
class RouteTrace:
    query: RouteQuery
    path: np.ndarray
    forward_hops: int
    backtrack_hops: int
    marked_count: int
    outcome: str
    x_sequence: np.ndarray
    step_kinds: Optional[np.ndarray] = None

    @property
    def total_hops(self) -> int:
        return self.forward_hops + self.backtrack_hops

    @property
    def success(self) -> bool:
        return self.outcome == "success"


def ids_of(u: int, graph: OverlayGraph, algorithm) -> set[int]:
    algorithm = AlgorithmKind.parse(algorithm)
    if algorithm is not AlgorithmKind.NON:
        return {int(u)}
    nbrs = graph.neighbors(u)
    if nbrs.size == 0:
        raise ValueError(f"node {u} has no neighbours; the short-range guarantee excludes this")
    return {int(u), *map(int, nbrs)}


def _check_query(graph: OverlayGraph, source: int, target: int):
    for name, x in (("source", source), ("target", target)):
        if not 0 <= x < graph.n:
            raise ValueError(f"{name} {x} outside [0, {graph.n})")


def route(graph: OverlayGraph, query: RouteQuery) -> RouteTrace:
    """Route one message and return its full trace."""
    s, t = int(query.source), int(query.target)
    _check_query(graph, s, t)
    cap = default_hop_cap(graph) if query.hop_cap is None else int(query.hop_cap)
    marked = np.zeros(graph.n, dtype=np.uint8)
    stack_head = np.full(graph.n, -1, dtype=np.int64)
    outcome, fwd, back, mcount, path, kinds = _impl.route_kernel(
        graph.indptr, graph.indices, graph.n, s, t, query.algorithm.code, cap, True, marked, stack_head
    )
    xs = _impl.neighbor_min_distance(graph.indptr, graph.indices, graph.n, path, t)
    return RouteTrace(
        query=query,
        path=path,
        forward_hops=int(fwd),
        backtrack_hops=int(back),
        marked_count=int(mcount),
        outcome=OUTCOMES[int(outcome)],
        x_sequence=xs,
        step_kinds=kinds,
    )


@dataclass(frozen=True)
class BatchSummary:
    """Per-query counters from :func:`route_many`; ``outcome`` uses the kernel codes."""

    outcome: np.ndarray
    forward_hops: np.ndarray
    backtrack_hops: np.ndarray
    marked_count: np.ndarray

    @property
    def total_hops(self) -> np.ndarray:
        return self.forward_hops + self.backtrack_hops

    @property
    def success(self) -> np.ndarray:
        return self.outcome == _kernels.SUCCESS

    @property
    def aborted(self) -> np.ndarray:
        return self.outcome == _kernels.ABORTED


def route_many(graph: OverlayGraph, sources, targets, algorithm, hop_cap: Optional[int] = None) -> BatchSummary:
    """Route many queries without keeping paths."""
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    targets = np.ascontiguousarray(targets, dtype=np.int64)
    if sources.shape != targets.shape:
        raise ValueError("sources and targets differ in length")
    if sources.size and (min(sources.min(), targets.min()) < 0 or max(sources.max(), targets.max()) >= graph.n):
        raise ValueError("node out of range")
    cap = default_hop_cap(graph) if hop_cap is None else int(hop_cap)
    out = _impl.route_batch_kernel(
        graph.indptr, graph.indices, graph.n, sources, targets, AlgorithmKind.parse(algorithm).code, cap
    )
    return BatchSummary(*out)


# --------------------------------------------------------------------------- halving


@dataclass(frozen=True)
class HalvingBin:
    d_low: int
    d_high: int
    trials: int
    halved: int
    frequency: float
    ci_low: float
    ci_high: float


def halving_statistics(
    traces: Iterable[RouteTrace],
    n: int,
    r: Optional[float] = None,
    min_samples: int = 1,
) -> list[HalvingBin]:
    """Frequency of ``X[i+2] <= X[i] / 2`` per power-of-two bin of ``X[i]``.

    With ``r`` given, only observations with ``X[i] > exp(ln(n) ** r)`` count.
    Bins with fewer than ``min_samples`` observations report ``nan``.
    """
    floor_d = math.exp(math.log(n) ** r) if r is not None else 0.0
    trials: dict[int, int] = {}
    halved: dict[int, int] = {}
    for tr in traces:
        x = np.asarray(tr.x_sequence, dtype=np.int64)
        if x.size < 3:
            continue
        d = x[:-2]
        ok = (d > floor_d) & (d >= 1)
        hit = 2 * x[2:] <= d
        bins = np.floor(np.log2(np.maximum(d, 1))).astype(np.int64)
        for b, h in zip(bins[ok], hit[ok]):
            trials[b] = trials.get(b, 0) + 1
            halved[b] = halved.get(b, 0) + int(h)
    out = []
    for b in sorted(trials):
        k, h = trials[b], halved[b]
        if k >= max(min_samples, 1):
            lo, hi = wilson_interval(h, k)
            freq = h / k
        else:
            freq = lo = hi = math.nan
        out.append(HalvingBin(2**b, 2 ** (b + 1) - 1, k, h, freq, lo, hi))
    return out


# --------------------------------------------------------------------------- export


def trace_to_document(trace: RouteTrace, max_path: int = 100_000) -> dict:
    path = trace.path.tolist()
    xs = trace.x_sequence.tolist()
    truncated = len(path) > max_path
    doc = {
        "query": {
            "source": int(trace.query.source),
            "target": int(trace.query.target),
            "algorithm": trace.query.algorithm.value,
        },
        "outcome": trace.outcome,
        "forward_hops": trace.forward_hops,
        "backtrack_hops": trace.backtrack_hops,
        "marked_count": trace.marked_count,
        "path_length": len(path),
        "path_truncated": truncated,
        "path": path[:max_path] + (["..."] if truncated else []),
        "x_sequence": xs[:max_path] + (["..."] if truncated else []),
    }
    return doc


def check_trace(graph: OverlayGraph, trace: RouteTrace) -> None:
    """Assert the structural trace invariants; raises ``AssertionError``."""
    path = trace.path
    assert path[0] == trace.query.source
    assert trace.forward_hops + trace.backtrack_hops == path.size - 1
    assert (trace.outcome == "success") == (int(path[-1]) == trace.query.target)
    for a, b in zip(path[:-1], path[1:]):
        nbrs = graph.neighbors(int(a))
        i = np.searchsorted(nbrs, b)
        assert i < nbrs.size and nbrs[i] == b, f"{a}->{b} is not an edge"
    if trace.x_sequence.size:
        expected = _reference.neighbor_min_distance(graph.indptr, graph.indices, graph.n, path, trace.query.target)
        assert np.array_equal(trace.x_sequence, expected)


__all__ = [
    "AlgorithmKind",
    "RouteQuery",
    "RouteTrace",
    "BatchSummary",
    "HalvingBin",
    "ids_of",
    "route",
    "route_many",
    "halving_statistics",
    "trace_to_document",
    "check_trace",
    "default_hop_cap",
    "hop_bound",
    "ring_distance",
]
