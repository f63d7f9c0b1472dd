"""Plain Python versions of the kernels in ``_kernels``.

Used when numba is switched off and as the cross-check for the compiled
kernels in the tests. Written for readability, not speed.
"""

import numpy as np

from ._kernels import ABORTED, DDFS, FAILURE, GREEDY, NON, SUCCESS


def _adjacency(indptr, indices):
    return [indices[indptr[v] : indptr[v + 1]].tolist() for v in range(len(indptr) - 1)]


def _dist(a, b, n):
    d = abs(a - b)
    return min(d, n - d)


def route_one(adj, n, source, target, algo, hop_cap, record=True):
    dist_t = lambda x: _dist(x, target, n)  # noqa: E731
    marked = set()
    stacks = {}
    path = [source]
    kinds = [0]
    v, pred, backtrack = source, None, False
    fwd = back = 0

    while True:
        if v == target:
            outcome = SUCCESS
            break
        if fwd + back >= hop_cap:
            outcome = ABORTED
            break

        if algo == GREEDY:
            closer = [u for u in adj[v] if dist_t(u) < dist_t(v)]
            if not closer:
                outcome = FAILURE
                break
            v = min(closer, key=lambda u: (dist_t(u), u))
            fwd += 1
            path.append(v)
            kinds.append(1)
            continue

        if algo == DDFS and not backtrack:
            marked.add(v)
        if not backtrack and pred is not None:
            stacks.setdefault(v, []).append(pred)

        candidates = [u for u in adj[v] if u not in marked]
        if candidates:

            def rank(u):
                ids = [u] + (adj[u] if algo == NON else [])
                return (min(dist_t(x) for x in ids), dist_t(u), u)

            nxt = min(candidates, key=rank)
            backtrack = False
            if dist_t(nxt) >= dist_t(v):
                marked.add(v)
            pred, v = v, nxt
            fwd += 1
        else:
            marked.add(v)
            stack = stacks.get(v, [])
            if not stack:
                outcome = FAILURE
                break
            pred, v = v, stack.pop()
            backtrack = True
            back += 1
        path.append(v)
        kinds.append(2 if backtrack else 1)

    return (
        outcome,
        fwd,
        back,
        len(marked),
        np.asarray(path if record else [], dtype=np.int64),
        np.asarray(kinds if record else [], dtype=np.int8),
    )


def route_kernel(indptr, indices, n, source, target, algo, hop_cap, record, marked=None, stack_head=None):
    return route_one(_adjacency(indptr, indices), n, source, target, algo, hop_cap, record)


def route_batch_kernel(indptr, indices, n, sources, targets, algo, hop_cap):
    adj = _adjacency(indptr, indices)
    rows = [route_one(adj, n, int(s), int(t), algo, hop_cap, record=False)[:4] for s, t in zip(sources, targets)]
    if not rows:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()
    cols = np.asarray(rows, dtype=np.int64).T
    return cols[0].copy(), cols[1].copy(), cols[2].copy(), cols[3].copy()


def neighbor_min_distance(indptr, indices, n, nodes, target):
    out = np.empty(len(nodes), dtype=np.int64)
    for i, v in enumerate(nodes):
        nbrs = indices[indptr[v] : indptr[v + 1]]
        out[i] = min((_dist(int(u), target, n) for u in nbrs), default=n)
    return out


def greedy_path(adj, n, w, v):
    if w == v:
        return True
    seen = {w}
    frontier = [w]
    while frontier:
        x = frontier.pop()
        dx = _dist(x, v, n)
        for u in adj[x]:
            if u == v:
                return True
            if u not in seen and _dist(u, v, n) < dx:
                seen.add(u)
                frontier.append(u)
    return False


def greedy_path_batch_kernel(indptr, indices, n, ws, vs):
    adj = _adjacency(indptr, indices)
    return np.asarray([greedy_path(adj, n, int(w), int(v)) for w, v in zip(ws, vs)], dtype=bool)
