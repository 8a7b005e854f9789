"""Compare the compiled and numpy projection kernels.

    python benchmarks/bench_kernels.py [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from advprog import kernels


def cases(rng):
    yield "capped_box n=16", lambda m: m.capped_box(rng.normal(0, 1, 16), 3.0)
    yield "capped_box n=512", lambda m: m.capped_box(rng.normal(0, 1, 512), 20.0)
    V = rng.normal(0, 1, (12, 600))
    M = rng.random((12, 600)) < 0.8
    yield "simplex_rows 12x600", lambda m: m.simplex_rows(V, M)
    V2 = rng.normal(0, 1, (1, 50))
    M2 = np.ones((1, 50), dtype=bool)
    yield "simplex_rows 1x50", lambda m: m.simplex_rows(V2, M2)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    impls = kernels.backends()
    rng = np.random.default_rng(0)
    print(f"{'case':<22}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for label, fn in cases(rng):
        times = {}
        for name, mod in impls.items():
            times[name] = min(timeit.repeat(lambda: fn(mod), number=args.repeat, repeat=3)) / args.repeat
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<22}" + "".join(f"{t * 1e6:>12.1f}us" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
