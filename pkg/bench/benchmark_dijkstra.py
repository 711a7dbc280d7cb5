#!/usr/bin/env python3
"""Benchmark the shortest-path kernel: compiled path vs pure-Python fallback.

The compiled path is what ``infector._kernels.dijkstra`` dispatches to
when numba is importable and INFECTOR_NO_NUMBA is unset; the fallback is
the pure-Python/numpy implementation used otherwise.  Run with

    python3 bench/benchmark_dijkstra.py [--n 20000] [--reps 5]
"""

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, "tests")

from infector import _kernels  # noqa: E402
from infector.graph import build_graph  # noqa: E402

from conftest import symmetric_marked_config  # noqa: E402


def _time(fn, args, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=20_000)
    parser.add_argument("--m-tilde", type=float, default=3.0)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    g = build_graph(symmetric_marked_config(n=args.n, m_tilde=args.m_tilde, seed=0))
    # pick a source whose outbreak reaches the giant component
    source, reached = 0, 0
    for s in range(min(20, g.n)):
        d, _ = _kernels._dijkstra_py(g.indptr, g.heads, g.weights,
                                     np.array([s], dtype=np.int64))
        if np.isfinite(d).sum() > reached:
            source, reached = s, int(np.isfinite(d).sum())
    sources = np.array([source], dtype=np.int64)
    call_args = (g.indptr, g.heads, g.weights, sources)

    print(f"graph: n={g.n}, edges={g.num_edges}, source reaches {reached} "
          f"vertices, numba={_kernels.NUMBA_ENABLED}")
    if _kernels.NUMBA_ENABLED:
        _kernels.dijkstra(*call_args)  # trigger JIT compilation
        t_fast = _time(_kernels.dijkstra, call_args, args.reps)
        print(f"compiled kernel : {t_fast * 1e3:9.2f} ms")
    else:
        t_fast = None
        print("compiled kernel : unavailable (INFECTOR_NO_NUMBA set or no numba)")
    t_py = _time(_kernels._dijkstra_py, call_args, args.reps)
    print(f"python fallback : {t_py * 1e3:9.2f} ms")
    if t_fast:
        print(f"speedup         : {t_py / t_fast:9.1f}x")

    d1, p1 = _kernels.dijkstra(*call_args)
    d2, p2 = _kernels._dijkstra_py(*call_args)
    assert np.array_equal(d1, d2) and np.array_equal(p1, p2), "paths disagree"
    print("outputs identical across implementations")


if __name__ == "__main__":
    main()
