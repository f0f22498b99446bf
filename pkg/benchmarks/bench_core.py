"""Time the compiled and pure-Python kernels on identical inputs.

Usage: python benchmarks/bench_core.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from hyper3b import _core_py
from hyper3b.basis import TreeLabel, tree_function

try:
    from hyper3b import _core
except ImportError:
    _core = None


def cases():
    f = tree_function(TreeLabel(6, 3, 1, 3, 1))
    g = tree_function(TreeLabel(5, 2, 1, 2, 0))
    kf, cf = f.arrays()
    kg, cg = g.arrays()
    betas = np.linspace(0.0, np.pi, 2001)
    return {
        "dsum_array(j=9/2, 2001 angles)": lambda m: m.dsum_array(4.5, 1.5, -0.5, betas),
        "sphere_inner(K=6)": lambda m: m.sphere_inner(kf, cf, kf, cf),
        "poly_mul(K=6 x K=5)": lambda m: m.poly_mul(kf, cf, kg, cg),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; only the python backend is available")
    print(f"{'kernel':34s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases().items():
        def best(mod):
            n = 3
            return min(timeit.repeat(lambda: fn(mod), number=n, repeat=args.repeat)) / n * 1e3
        tp = best(_core_py)
        if _core is None:
            print(f"{name:34s} {tp:12.3f} {'-':>12s} {'-':>8s}")
            continue
        tc = best(_core)
        print(f"{name:34s} {tp:12.3f} {tc:12.3f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
