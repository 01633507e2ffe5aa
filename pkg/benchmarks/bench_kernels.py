#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--nodes N] [--avg-degree D]

The same kernels are selected at import time by SHARPGCL_NUMBA; here both
paths are invoked explicitly so one process can compare them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sharpgcl import kernels as K


def _timeit(fn, repeats: int = 5) -> float:
    fn()  # warm-up (numba compiles here)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def random_graph_csr(rng, n: int, avg_degree: float):
    e = int(n * avg_degree / 2)
    src = rng.integers(0, n, size=e)
    dst = rng.integers(0, n, size=e)
    keep = src != dst
    edges = np.stack([np.minimum(src, dst), np.maximum(src, dst)], axis=1)[keep]
    edges = np.unique(edges, axis=0)
    return K.adjacency_csr(edges, n, add_self_loops=True)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=20_000)
    ap.add_argument("--avg-degree", type=float, default=8.0)
    ap.add_argument("--features", type=int, default=128)
    args = ap.parse_args()

    if not K.USE_NUMBA:
        print("numba disabled or unavailable; only the numpy path will run")

    rng = np.random.default_rng(0)
    adj = random_graph_csr(rng, args.nodes, args.avg_degree)
    dense = rng.normal(size=(args.nodes, args.features))
    s_src = rng.normal(size=args.nodes)
    s_dst = rng.normal(size=args.nodes)
    g_out = rng.normal(size=(args.nodes, args.features))

    rows = []

    t_np = _timeit(lambda: K.csr_matmul(adj, dense, use_numba=False))
    t_nb = _timeit(lambda: K.csr_matmul(adj, dense, use_numba=True)) if K.USE_NUMBA else None
    rows.append(("csr_matmul", t_np, t_nb))

    fwd_np = K.gat_head_forward(adj, s_src, s_dst, dense, 0.2, use_numba=False)
    t_np = _timeit(lambda: K.gat_head_forward(adj, s_src, s_dst, dense, 0.2, use_numba=False))
    t_nb = (_timeit(lambda: K.gat_head_forward(adj, s_src, s_dst, dense, 0.2, use_numba=True))
            if K.USE_NUMBA else None)
    rows.append(("gat_head_forward", t_np, t_nb))

    alpha, pos = fwd_np[1], fwd_np[2]
    t_np = _timeit(lambda: K.gat_head_backward(adj, alpha, pos, dense, g_out, 0.2, use_numba=False))
    t_nb = (_timeit(lambda: K.gat_head_backward(adj, alpha, pos, dense, g_out, 0.2, use_numba=True))
            if K.USE_NUMBA else None)
    rows.append(("gat_head_backward", t_np, t_nb))

    print(f"\nnodes={args.nodes} nnz={adj.nnz} features={args.features}\n")
    print(f"{'kernel':<20}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<20}{t_np * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
        else:
            print(f"{name:<20}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
