"""Array kernels for the hot loops (jitted when numba is enabled).

Graphs arrive as CSR arrays ``indptr``/``indices`` with ascending neighbour
lists. Per-query scratch arrays (``marked``, ``stack_head``, ``seen``) are passed
in clean and are restored to their clean state before a kernel returns, so a
batch can reuse them without an O(n) reset per query.
"""

import numpy as np

from ._accel import njit

GREEDY = 0
DDFS = 1
NBO = 2
NON = 3

SUCCESS = 0
FAILURE = 1
ABORTED = 2


@njit(cache=True)
def _dist(a, b, n):
    d = abs(a - b)
    return d if d <= n - d else n - d


@njit(cache=True)
def _grow(arr):
    out = np.empty(arr.size * 2, dtype=arr.dtype)
    out[: arr.size] = arr
    return out


@njit(cache=True)
def route_kernel(indptr, indices, n, source, target, algo, hop_cap, record, marked, stack_head):
    """Run one query. Returns ``(outcome, forward, backtrack, marked_count, path, step_kinds)``.

    ``path`` and ``step_kinds`` (0 start, 1 forward, 2 backtrack) are empty
    unless ``record`` is true.
    """
    path = np.empty(64 if record else 1, dtype=np.int64)
    kinds = np.empty(64 if record else 1, dtype=np.int8)
    plen = 0
    pool_node = np.empty(64, dtype=np.int64)
    pool_next = np.empty(64, dtype=np.int64)
    pool_owner = np.empty(64, dtype=np.int64)
    psize = 0
    marked_list = np.empty(64, dtype=np.int64)
    mcount = 0

    v = source
    pred = -1
    backtrack = False
    fwd = 0
    back = 0
    outcome = FAILURE
    if record:
        path[0] = v
        kinds[0] = 0
        plen = 1

    while True:
        if v == target:
            outcome = SUCCESS
            break
        if fwd + back >= hop_cap:
            outcome = ABORTED
            break
        dv = _dist(v, target, n)

        if algo == GREEDY:
            best = -1
            bestd = dv
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                du = _dist(u, target, n)
                if du < bestd:
                    bestd = du
                    best = u
            if best == -1:
                outcome = FAILURE
                break
            v = best
            fwd += 1
        else:
            if algo == DDFS and not backtrack and marked[v] == 0:
                marked[v] = 1
                if mcount == marked_list.size:
                    marked_list = _grow(marked_list)
                marked_list[mcount] = v
                mcount += 1
            if not backtrack and pred != -1:
                if psize == pool_node.size:
                    pool_node = _grow(pool_node)
                    pool_next = _grow(pool_next)
                    pool_owner = _grow(pool_owner)
                pool_node[psize] = pred
                pool_next[psize] = stack_head[v]
                pool_owner[psize] = v
                stack_head[v] = psize
                psize += 1

            best = -1
            best_key = n
            best_own = n
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if marked[u] != 0:
                    continue
                own = _dist(u, target, n)
                key = own
                if algo == NON:
                    for j in range(indptr[u], indptr[u + 1]):
                        dw = _dist(indices[j], target, n)
                        if dw < key:
                            key = dw
                if key < best_key or (key == best_key and own < best_own):
                    best = u
                    best_key = key
                    best_own = own

            if best != -1:
                backtrack = False
                if best_own >= dv and marked[v] == 0:
                    marked[v] = 1
                    if mcount == marked_list.size:
                        marked_list = _grow(marked_list)
                    marked_list[mcount] = v
                    mcount += 1
                pred = v
                v = best
                fwd += 1
            else:
                if marked[v] == 0:
                    marked[v] = 1
                    if mcount == marked_list.size:
                        marked_list = _grow(marked_list)
                    marked_list[mcount] = v
                    mcount += 1
                idx = stack_head[v]
                if idx == -1:
                    outcome = FAILURE
                    break
                stack_head[v] = pool_next[idx]
                backtrack = True
                pred = v
                v = pool_node[idx]
                back += 1

        if record:
            if plen == path.size:
                path = _grow(path)
                kinds = _grow(kinds)
            path[plen] = v
            kinds[plen] = 2 if backtrack and algo != GREEDY else 1
            plen += 1

    for i in range(mcount):
        marked[marked_list[i]] = 0
    for i in range(psize):
        stack_head[pool_owner[i]] = -1
    return outcome, fwd, back, mcount, path[:plen].copy(), kinds[:plen].copy()


@njit(cache=True)
def route_batch_kernel(indptr, indices, n, sources, targets, algo, hop_cap):
    m = sources.size
    outcome = np.empty(m, dtype=np.int64)
    fwd = np.empty(m, dtype=np.int64)
    back = np.empty(m, dtype=np.int64)
    marked_count = np.empty(m, dtype=np.int64)
    marked = np.zeros(n, dtype=np.uint8)
    stack_head = np.full(n, -1, dtype=np.int64)
    for i in range(m):
        o, f, b, mc, _, _ = route_kernel(
            indptr, indices, n, sources[i], targets[i], algo, hop_cap, False, marked, stack_head
        )
        outcome[i] = o
        fwd[i] = f
        back[i] = b
        marked_count[i] = mc
    return outcome, fwd, back, marked_count


@njit(cache=True)
def neighbor_min_distance(indptr, indices, n, nodes, target):
    out = np.empty(nodes.size, dtype=np.int64)
    for i in range(nodes.size):
        v = nodes[i]
        best = n
        for k in range(indptr[v], indptr[v + 1]):
            d = _dist(indices[k], target, n)
            if d < best:
                best = d
        out[i] = best
    return out


@njit(cache=True)
def greedy_path_kernel(indptr, indices, n, w, v, seen, stack):
    """Depth-first search from ``w`` over edges that strictly decrease distance to ``v``."""
    if w == v:
        return True
    top = 0
    stack[0] = w
    seen[w] = 1
    nseen = 1
    touched = np.empty(64, dtype=np.int64)
    touched[0] = w
    found = False
    while top >= 0:
        x = stack[top]
        top -= 1
        dx = _dist(x, v, n)
        for k in range(indptr[x], indptr[x + 1]):
            u = indices[k]
            if u == v:
                found = True
                break
            if seen[u] == 0 and _dist(u, v, n) < dx:
                seen[u] = 1
                if nseen == touched.size:
                    touched = _grow(touched)
                touched[nseen] = u
                nseen += 1
                top += 1
                stack[top] = u
        if found:
            break
    for i in range(nseen):
        seen[touched[i]] = 0
    return found


@njit(cache=True)
def greedy_path_batch_kernel(indptr, indices, n, ws, vs):
    out = np.empty(ws.size, dtype=np.bool_)
    seen = np.zeros(n, dtype=np.uint8)
    stack = np.empty(n + 1, dtype=np.int64)
    for i in range(ws.size):
        out[i] = greedy_path_kernel(indptr, indices, n, ws[i], vs[i], seen, stack)
    return out
