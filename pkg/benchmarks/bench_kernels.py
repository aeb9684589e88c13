"""Benchmark the per-pair training kernels: compiled extension vs NumPy fallback.

Runs the same seeded stream of SGD steps through both backends and reports
pairs/second. The workload mirrors real training: random bags, concatenated
tree paths, four reconstruction tasks per pair.

    python benchmarks/bench_kernels.py [--vx 10000] [--dim 64] [--steps 20000]
"""

import argparse
import time

import numpy as np

from bibow.code_tree import build_random_tree
from bibow.kernels import py_inner

try:
    from bibow.kernels import _inner
except ImportError:
    _inner = None


def build_workload(args):
    rng = np.random.default_rng(args.seed)
    dim, vx, vy = args.dim, args.vx, args.vy
    params = dict(
        Wx=rng.uniform(-0.05, 0.05, size=(dim, vx)),
        Wy=rng.uniform(-0.05, 0.05, size=(dim, vy)),
        c=np.zeros(dim),
        bx=np.zeros(vx - 1), Ux=np.zeros((vx - 1, dim)),
        by=np.zeros(vy - 1), Uy=np.zeros((vy - 1, dim)),
    )
    tree_x = build_random_tree(vx, args.seed + 1)
    tree_y = build_random_tree(vy, args.seed + 2)
    pairs = []
    for _ in range(args.distinct_pairs):
        x_idx = np.sort(rng.integers(0, vx, size=rng.integers(5, 16))).astype(np.int32)
        y_idx = np.sort(rng.integers(0, vy, size=rng.integers(5, 16))).astype(np.int32)
        x_nodes, x_bits = tree_x.paths_for_bag(x_idx)
        y_nodes, y_bits = tree_y.paths_for_bag(y_idx)
        pairs.append((x_idx, y_idx, x_nodes, x_bits, y_nodes, y_bits))
    return params, pairs


def run(impl, params, pairs, steps, lr):
    p = {k: v.copy() for k, v in params.items()}
    weights = np.ones(4)
    parts = np.zeros(4)
    args = (p["Wx"], p["Wy"], p["c"], p["bx"], p["Ux"], p["by"], p["Uy"])
    start = time.perf_counter()
    for i in range(steps):
        impl.train_pair(*args, *pairs[i % len(pairs)], weights, lr, 1, parts)
    elapsed = time.perf_counter() - start
    return steps / elapsed, p


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vx", type=int, default=10000)
    ap.add_argument("--vy", type=int, default=8000)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--distinct-pairs", type=int, default=500)
    ap.add_argument("--lr", type=float, default=0.02)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    params, pairs = build_workload(args)
    print(f"V^x={args.vx} V^y={args.vy} D={args.dim}, {args.steps} SGD steps")

    pure_rate, pure_params = run(py_inner, params, pairs, args.steps, args.lr)
    print(f"pure numpy : {pure_rate:10.0f} pairs/s")

    if _inner is None:
        print("compiled   : extension not built (pip install -e . compiles it)")
        return

    fast_rate, fast_params = run(_inner, params, pairs, args.steps, args.lr)
    print(f"compiled   : {fast_rate:10.0f} pairs/s")
    print(f"speedup    : {fast_rate / pure_rate:10.1f}x")

    # single-step agreement; long runs fork as SGD amplifies rounding noise
    _, pure_one = run(py_inner, params, pairs, 1, args.lr)
    _, fast_one = run(_inner, params, pairs, 1, args.lr)
    step_diff = max(
        float(np.max(np.abs(pure_one[k] - fast_one[k])))
        for k in pure_one if pure_one[k].size
    )
    print(f"single-step max parameter difference: {step_diff:.3g}")


if __name__ == "__main__":
    main()
