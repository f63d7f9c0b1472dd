"""Time the compiled routing kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --n 16384 --queries 2000

Both implementations run on the same graph and the same query pairs; the
script checks they agree before reporting timings.
"""

import argparse
import time

import numpy as np

from socialoverlay import _kernels, _reference
from socialoverlay._accel import USE_NUMBA
from socialoverlay.graph_model import GraphParams, build_graph


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--c", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=2.5)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not USE_NUMBA:
        print("numba is disabled (SOCIALOVERLAY_NUMBA=0 or not installed); both columns run Python code")

    g = build_graph(GraphParams(n=args.n, c=args.c, alpha=args.alpha, seed=args.seed))
    rng = np.random.default_rng(args.seed)
    s = rng.integers(0, g.n, args.queries)
    t = rng.integers(0, g.n, args.queries)
    cap = 4 * (1 + g.c) * g.n

    print(f"n={g.n} c={g.c} alpha={args.alpha} edges={g.num_edges} queries={args.queries}")
    print(f"{'kernel':<14}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for name, code in (("greedy", 0), ("ddfs", 1), ("nbo", 2), ("non", 3)):
        # warm-up triggers compilation outside the timed region
        _kernels.route_batch_kernel(g.indptr, g.indices, g.n, s[:2], t[:2], code, cap)
        fast, a = _time(lambda: _kernels.route_batch_kernel(g.indptr, g.indices, g.n, s, t, code, cap), args.repeat)
        slow, b = _time(lambda: _reference.route_batch_kernel(g.indptr, g.indices, g.n, s, t, code, cap), 1)
        if not all(np.array_equal(x, y) for x, y in zip(a, b)):
            raise SystemExit(f"{name}: compiled and reference results differ")
        print(f"{name:<14}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}")

    _kernels.greedy_path_batch_kernel(g.indptr, g.indices, g.n, s[:2], t[:2])
    fast, a = _time(lambda: _kernels.greedy_path_batch_kernel(g.indptr, g.indices, g.n, s, t), args.repeat)
    slow, b = _time(lambda: _reference.greedy_path_batch_kernel(g.indptr, g.indices, g.n, s, t), 1)
    if not np.array_equal(a, b):
        raise SystemExit("greedy-path: compiled and reference results differ")
    print(f"{'greedy-path':<14}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
