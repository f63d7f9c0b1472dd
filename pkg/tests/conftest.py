import warnings

import numpy as np
import pytest

from socialoverlay.graph_model import GraphParams, OverlayGraph, build_graph, ring_distance

# Hand-built instance, target 0. Node 2 (distance 2) is a greedy local minimum:
# its neighbours 4, 5, 6 sit at distances 4, 3, 2.
LOCAL_MIN_EDGES = [(0, 5), (0, 7), (1, 5), (2, 4), (2, 5), (2, 6), (3, 6), (4, 5)]


@pytest.fixture
def local_min_graph():
    return OverlayGraph.from_edges(8, LOCAL_MIN_EDGES, c=2)


def ring_graph(n):
    return OverlayGraph.from_edges(n, [(v, (v + 1) % n) for v in range(n)], c=1)


@pytest.fixture
def small_graph():
    return build_graph(GraphParams(n=256, c=2, alpha=2.5, seed=3))


def quiet_params(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return GraphParams(**kw)


def random_small_graph(rng, n, p=0.3):
    """Erdos-Renyi style graph on Z_n for oracle comparisons."""
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    return OverlayGraph.from_edges(n, pairs, c=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def greedy_oracle(adj, n, w, v):
    """Enumerate every simple path out of w, keeping only distance-decreasing ones."""

    def walk(x, visited):
        if x == v:
            return True
        for u in adj[x]:
            if u not in visited and ring_distance(u, v, n) < ring_distance(x, v, n):
                if walk(u, visited | {u}):
                    return True
        return False

    return walk(w, {w})
