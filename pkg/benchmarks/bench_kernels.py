"""Compare the compiled and numpy tableau kernels on random measurements.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64,256,1024] [--reps 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stabdistill import kernels
from stabdistill.tableau import Tableau


def _scrambled(n: int, seed: int) -> Tableau:
    rng = np.random.default_rng(seed)
    t = Tableau(n, rng)
    for _ in range(4 * n):
        a, b = rng.choice(n, 2, replace=False)
        t.h(int(a))
        t.cnot(int(a), int(b))
        t.s(int(b))
    return t


def _ops(n: int, reps: int, seed: int):
    rng = np.random.default_rng(seed + 1)
    W = (n + 63) // 64
    out = []
    for _ in range(reps):
        x = np.zeros(W, dtype=np.uint64)
        z = np.zeros(W, dtype=np.uint64)
        for q in rng.choice(n, size=min(8, n), replace=False):
            w, b = divmod(int(q), 64)
            kind = rng.integers(3)
            if kind in (0, 1):
                x[w] |= np.uint64(1 << b)
            if kind in (1, 2):
                z[w] |= np.uint64(1 << b)
        out.append((x, z))
    return out


def time_backend(mod, n: int, reps: int, seed: int = 0) -> float:
    t = _scrambled(n, seed)
    xs, zs, r = t.xs.copy(), t.zs.copy(), t.r.copy()
    ops = _ops(n, reps, seed)
    start = time.perf_counter()
    for i, (x, z) in enumerate(ops):
        mod.measure(xs, zs, r, n, x, z, 0, i & 1)
    return (time.perf_counter() - start) / reps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,256,1024")
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    compiled = kernels.compiled_backend()
    print(f"{'n':>6} {'python us':>12} {'cython us':>12} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        tp = time_backend(kernels.python_backend, n, args.reps)
        if compiled is None:
            print(f"{n:>6} {tp * 1e6:>12.1f} {'n/a':>12} {'n/a':>8}")
            continue
        tc = time_backend(compiled, n, args.reps)
        print(f"{n:>6} {tp * 1e6:>12.1f} {tc * 1e6:>12.1f} {tp / tc:>8.1f}")


if __name__ == "__main__":
    main()
