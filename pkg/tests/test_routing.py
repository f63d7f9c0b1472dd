import math

import numpy as np
import pytest

from socialoverlay import _kernels, _reference
from socialoverlay.analysis import connectivity_check
from socialoverlay.graph_model import GraphParams, OverlayGraph, build_graph, ring_distance
from socialoverlay.routing import (
    AlgorithmKind,
    RouteQuery,
    RouteTrace,
    check_trace,
    halving_statistics,
    hop_bound,
    ids_of,
    route,
    route_many,
    trace_to_document,
)

from conftest import quiet_params, random_small_graph, ring_graph

ALL = list(AlgorithmKind)
BACKTRACKING = [AlgorithmKind.DDFS, AlgorithmKind.NBO, AlgorithmKind.NON]


def replay_marking(graph, trace):
    """Rebuild the marked set from the trace alone and check marking rules along the way."""
    algo = trace.query.algorithm
    t = trace.query.target
    d = lambda x: ring_distance(int(x), t, graph.n)  # noqa: E731
    marked = set()
    path, kinds = trace.path, trace.step_kinds
    for i in range(path.size - 1):
        cur, nxt, kind = int(path[i]), int(path[i + 1]), kinds[i + 1]
        arrived_forward = i == 0 or kinds[i] == 1
        if algo is AlgorithmKind.DDFS and arrived_forward:
            marked.add(cur)
        if kind == 1:
            assert nxt not in marked, f"forward hop into marked node {nxt}"
            if algo is not AlgorithmKind.GREEDY and d(nxt) >= d(cur):
                marked.add(cur)
        else:
            assert all(int(u) in marked for u in graph.neighbors(cur)), "backtracked with an unmarked neighbour"
            marked.add(cur)
            assert nxt in path[:i].tolist(), "backtrack target was never a holder"
    if trace.outcome == "failure" and algo is not AlgorithmKind.GREEDY:
        # the final holder had nothing left to try
        marked.add(int(path[-1]))
    return marked


class TestIds:
    def test_nbo(self, local_min_graph):
        assert ids_of(7, local_min_graph, "nbo") == {7}

    def test_non(self):
        g = OverlayGraph.from_edges(12, [(7, 2), (7, 9)])
        assert ids_of(7, g, AlgorithmKind.NON) == {7, 2, 9}

    def test_non_isolated(self):
        g = OverlayGraph.from_edges(12, [(1, 2)])
        with pytest.raises(ValueError, match="short-range guarantee"):
            ids_of(7, g, "non")

    def test_parse(self):
        assert AlgorithmKind.parse("NextBestOnce-NoN") is AlgorithmKind.NON
        assert AlgorithmKind.parse("DistanceDirectedDFS") is AlgorithmKind.DDFS
        with pytest.raises(ValueError):
            AlgorithmKind.parse("dijkstra")


class TestHandBuilt:
    def test_greedy_on_ring(self):
        g = ring_graph(40)
        for s, t in [(0, 13), (5, 30), (39, 1), (20, 0)]:
            tr = route(g, RouteQuery(s, t, "greedy"))
            assert tr.outcome == "success"
            assert tr.forward_hops == ring_distance(s, t, 40)
            dists = ring_distance(tr.path, t, 40)
            assert np.all(np.diff(dists) == -1)

    def test_greedy_stuck_at_local_minimum(self, local_min_graph):
        tr = route(local_min_graph, RouteQuery(4, 0, "greedy"))
        assert tr.outcome == "failure"
        assert tr.path.tolist() == [4, 2]
        assert (tr.forward_hops, tr.backtrack_hops, tr.marked_count) == (1, 0, 0)

    def test_nbo_manual_trace(self, local_min_graph):
        # routing rules executed by hand, target 0, distances 0..4 on Z_8:
        #  4: S={2,5}, pick 2 (d=2 < 4), no mark
        #  2: push 4; S={4,5,6}, pick 6 (d=2 >= 2) -> mark 2
        #  6: push 2; S={3}, pick 3 (d=3 >= 2) -> mark 6
        #  3: push 6; S={} -> mark 3, pop 6 (backtrack)
        #  6: S={} -> pop 2 (backtrack)
        #  2: S={4,5}, pick 5 (d=3 >= 2, 2 already marked)
        #  5: push 2; S={0,1,4}, pick 0 -> success
        tr = route(local_min_graph, RouteQuery(4, 0, "nbo"))
        assert tr.outcome == "success"
        assert tr.path.tolist() == [4, 2, 6, 3, 6, 2, 5, 0]
        assert tr.step_kinds.tolist() == [0, 1, 1, 1, 2, 2, 1, 1]
        assert (tr.forward_hops, tr.backtrack_hops, tr.marked_count) == (5, 2, 3)
        assert replay_marking(local_min_graph, tr) == {2, 3, 6}

    def test_ddfs_manual_trace(self, local_min_graph):
        # same walk, but every forward arrival marks: {4, 2, 6, 3, 5}
        tr = route(local_min_graph, RouteQuery(4, 0, "ddfs"))
        assert tr.path.tolist() == [4, 2, 6, 3, 6, 2, 5, 0]
        assert (tr.forward_hops, tr.backtrack_hops, tr.marked_count) == (5, 2, 5)

    def test_non_manual_trace(self, local_min_graph):
        # at 4: IDS(2) reaches distance 2, IDS(5) contains 0 -> go to 5, then 0
        tr = route(local_min_graph, RouteQuery(4, 0, "non"))
        assert tr.path.tolist() == [4, 5, 0]
        assert tr.marked_count == 0

    def test_non_selection_rule(self):
        # v=10, t=0 on Z_20: u1=5 (d=5) knows node 1 (d=1); u2=17 (d=3) knows nothing closer
        g = OverlayGraph.from_edges(20, [(10, 5), (5, 1), (10, 17), (17, 16)])
        assert route(g, RouteQuery(10, 0, "non")).path[1] == 5
        assert route(g, RouteQuery(10, 0, "nbo")).path[1] == 17

    def test_marking_uses_own_id(self):
        # NoN picks u1=5 via its neighbour, but 5 is closer than 10 itself so 10 stays unmarked
        g = OverlayGraph.from_edges(20, [(10, 5), (5, 1), (10, 17), (17, 16)])
        tr = route(g, RouteQuery(10, 0, "non", hop_cap=1))
        assert tr.outcome == "aborted" and tr.marked_count == 0
        # 4 (d=4) -> 14 (d=6) is chosen because 14 knows 19 (d=1); it is a retreat, so 4 is marked
        g2 = OverlayGraph.from_edges(20, [(4, 14), (14, 19), (4, 3)])
        tr2 = route(g2, RouteQuery(4, 0, "non", hop_cap=1))
        assert tr2.path.tolist() == [4, 14] and tr2.marked_count == 1

    def test_tie_break_prefers_closer_own_id(self):
        # both candidates have NoN key 1; the tie goes to 4, whose own distance is smaller
        g = OverlayGraph.from_edges(20, [(10, 4), (4, 1), (10, 6), (6, 1)])
        assert route(g, RouteQuery(10, 0, "non")).path[1] == 4

    def test_source_is_target(self, local_min_graph):
        for algo in ALL:
            tr = route(local_min_graph, RouteQuery(3, 3, algo))
            assert tr.outcome == "success" and tr.total_hops == 0 and tr.path.tolist() == [3]

    def test_disconnected_target(self):
        g = OverlayGraph.from_edges(10, [(0, 1), (1, 2), (2, 0), (5, 6)])
        for algo in BACKTRACKING:
            tr = route(g, RouteQuery(0, 5, algo))
            assert tr.outcome == "failure"
            assert tr.marked_count == 3  # the whole component
            check_trace(g, tr)

    def test_out_of_range(self, local_min_graph):
        with pytest.raises(ValueError):
            route(local_min_graph, RouteQuery(0, 8, "nbo"))


def _model_graphs():
    for n, c, seed in [(64, 2, 0), (128, 4, 1), (256, 1, 2), (400, 8, 3), (512, 16, 4)]:
        yield build_graph(quiet_params(n=n, c=c, alpha=2.5, seed=seed))


@pytest.mark.parametrize("graph", list(_model_graphs()), ids=lambda g: f"n{g.n}c{g.c}")
def test_trace_invariants(graph):
    rng = np.random.default_rng(graph.n)
    connected = connectivity_check(graph).connected
    for s, t in rng.integers(0, graph.n, size=(60, 2)):
        for algo in ALL:
            tr = route(graph, RouteQuery(int(s), int(t), algo))
            check_trace(graph, tr)
            assert tr.outcome != "aborted"
            assert tr.total_hops <= hop_bound(graph)
            assert tr.forward_hops <= (1 + graph.c) * graph.n
            marked = replay_marking(graph, tr)
            assert len(marked) == tr.marked_count
            if algo is AlgorithmKind.GREEDY:
                dists = ring_distance(tr.path, int(t), graph.n)
                assert np.all(np.diff(dists) < 0)
                assert tr.backtrack_hops == 0
                if tr.outcome == "failure":
                    last = int(tr.path[-1])
                    assert all(ring_distance(int(u), int(t), graph.n) >= ring_distance(last, int(t), graph.n)
                               for u in graph.neighbors(last))
            elif connected:
                assert tr.outcome == "success"


@pytest.mark.parametrize("seed", range(40))
def test_kernel_matches_reference(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 40))
    g = random_small_graph(rng, n, p=float(rng.uniform(0.05, 0.4)))
    adj = _reference._adjacency(g.indptr, g.indices)
    marked = np.zeros(n, dtype=np.uint8)
    heads = np.full(n, -1, dtype=np.int64)
    for _ in range(10):
        s, t = (int(x) for x in rng.integers(0, n, size=2))
        for algo in ALL:
            a = _kernels.route_kernel(g.indptr, g.indices, n, s, t, algo.code, 10 * n * n, True, marked, heads)
            b = _reference.route_one(adj, n, s, t, algo.code, 10 * n * n)
            assert a[:4] == b[:4]
            assert np.array_equal(a[4], b[4]) and np.array_equal(a[5], b[5])
            assert not marked.any() and np.all(heads == -1)


def test_batch_matches_single(small_graph):
    rng = np.random.default_rng(1)
    s = rng.integers(0, small_graph.n, 50)
    t = rng.integers(0, small_graph.n, 50)
    for algo in ALL:
        b = route_many(small_graph, s, t, algo)
        single = [route(small_graph, RouteQuery(int(x), int(y), algo)) for x, y in zip(s, t)]
        assert b.forward_hops.tolist() == [tr.forward_hops for tr in single]
        assert b.backtrack_hops.tolist() == [tr.backtrack_hops for tr in single]
        assert b.marked_count.tolist() == [tr.marked_count for tr in single]


def test_hop_cap_aborts(local_min_graph):
    tr = route(local_min_graph, RouteQuery(4, 0, "nbo", hop_cap=3))
    assert tr.outcome == "aborted" and tr.total_hops == 3


def test_x_sequence_values(small_graph):
    tr = route(small_graph, RouteQuery(0, 100, "nbo"))
    for v, x in zip(tr.path, tr.x_sequence):
        assert x == min(ring_distance(int(u), 100, small_graph.n) for u in small_graph.neighbors(int(v)))


def test_x_sequence_monotone_above_c_scale():
    # reported statistic: share of forward steps where X increases while above C
    g = build_graph(GraphParams(n=4096, c=1, alpha=2.5, seed=6))
    rng = np.random.default_rng(6)
    ups = steps = 0
    for s, t in rng.integers(0, g.n, size=(200, 2)):
        tr = route(g, RouteQuery(int(s), int(t), "non"))
        x = tr.x_sequence
        above = x[:-1] > g.c
        ups += int((np.diff(x)[above] > 0).sum())
        steps += int(above.sum())
    assert steps > 0
    assert ups / steps < 0.05


def test_non_dominates_nbo():
    g = build_graph(GraphParams(n=2**14, c=1, alpha=2.5, seed=21))
    rng = np.random.default_rng(21)
    s = rng.integers(0, g.n, 10**4)
    t = (s + rng.integers(1, g.n, 10**4)) % g.n
    nbo = route_many(g, s, t, "nbo").total_hops
    non = route_many(g, s, t, "non").total_hops
    half = 1.96 * nbo.std(ddof=1) / math.sqrt(nbo.size)
    assert non.mean() <= nbo.mean() + half


class TestHalving:
    @staticmethod
    def _trace(xs):
        xs = np.asarray(xs, dtype=np.int64)
        q = RouteQuery(0, 1, "nbo")
        return RouteTrace(q, np.arange(xs.size), xs.size - 1, 0, 0, "success", xs)

    def test_unit_decrease_is_not_halving(self):
        prof = halving_statistics([self._trace([1000, 999, 998, 997])], n=10**6)
        (b,) = prof
        assert b.d_low <= 1000 <= b.d_high
        assert (b.trials, b.halved) == (2, 0)
        assert b.frequency == 0.0

    def test_all_halving(self):
        traces = [self._trace([2**k for k in range(12, 0, -1)]) for _ in range(5)]
        prof = halving_statistics(traces, n=10**6)
        assert prof and all(b.frequency == 1.0 for b in prof)

    def test_r_floor(self):
        tr = self._trace([5000, 100, 60, 30, 10])
        floor = math.exp(math.log(10**6) ** 0.8)  # about 1580
        prof = halving_statistics([tr], n=10**6, r=0.8)
        assert all(b.d_low > floor / 2 for b in prof)
        assert sum(b.trials for b in prof) == 1

    def test_sparse_bin_undefined(self):
        prof = halving_statistics([self._trace([64, 40, 20])], n=1000, min_samples=5)
        assert math.isnan(prof[0].frequency)

    def test_wilson_bounds(self):
        traces = [self._trace([1024, 700, 400, 300]) for _ in range(20)]
        for b in halving_statistics(traces, n=10**5):
            assert b.ci_low <= b.frequency <= b.ci_high


def test_trace_export(local_min_graph):
    tr = route(local_min_graph, RouteQuery(4, 0, "nbo"))
    doc = trace_to_document(tr)
    assert doc["query"] == {"source": 4, "target": 0, "algorithm": "nbo"}
    assert doc["path"] == [4, 2, 6, 3, 6, 2, 5, 0]
    assert doc["forward_hops"] == 5 and doc["backtrack_hops"] == 2 and doc["marked_count"] == 3
    cut = trace_to_document(tr, max_path=3)
    assert cut["path"] == [4, 2, 6, "..."] and cut["path_truncated"]
    assert cut["path_length"] == 8 and cut["forward_hops"] == 5
