"""Time each kernel on its numba and numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints ``kernel|size|numba_ms|numpy_ms|speedup``.  The first numba call
compiles (or loads the on-disk cache) and is excluded from the timings.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from refgame import kernels
from refgame.games.tm import unary_doubler


def cases(rng):
    for n in (8, 32, 64):
        a, b = rng.integers(0, 97, (n, n)), rng.integers(0, 97, (n, n))
        yield "matmul_mod", n, lambda use, a=a, b=b: kernels.matmul_mod(a, b, 97, use_numba=use)
        c = kernels.matmul_mod(a, b, 97)
        r = rng.integers(0, 2, n)
        yield "freivalds_row", n, lambda use, a=a, b=b, c=c, r=r: kernels.freivalds_row(a, b, c, r, 97, use)
    m = unary_doubler()
    nxt, wrt, mv = m.arrays
    for steps in (64, 256, 1024):
        width = 32
        tape = np.zeros(width, dtype=np.int64)
        tape[:8] = 1
        yield "tm_trace", steps, lambda use, s=steps, t=tape: kernels.tm_trace(nxt, wrt, mv, t, 0, 0, s, use)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"backend|{kernels.backend()}")
    print("kernel|size|numba_ms|numpy_ms|speedup")
    for name, size, fn in cases(np.random.default_rng(0)):
        paths = [True, False] if kernels.HAVE_NUMBA else [False]
        best = {}
        for use in paths:
            fn(use)
            number = 20
            best[use] = min(timeit.repeat(lambda: fn(use), number=number, repeat=args.repeat)) / number * 1e3
        if kernels.HAVE_NUMBA:
            print(f"{name}|{size}|{best[True]:.4f}|{best[False]:.4f}|{best[False] / best[True]:.2f}")
        else:
            print(f"{name}|{size}|-|{best[False]:.4f}|-")


if __name__ == "__main__":
    main()
