"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import timeit

import numpy as np

from gtprob import _kernels
from gtprob._kernels import fallback
from gtprob.families import binomial_log_ratio

try:
    from gtprob._kernels import _core
except ImportError:
    _core = None


def path_inputs(paths=20000, horizon=200, seed=0):
    rng = np.random.default_rng(seed)
    ys = rng.random((paths, horizon)) < 0.5
    return np.ascontiguousarray(np.where(ys, math.log(1.4), math.log(0.6))), math.log(20.0)


def grid_inputs(step=1e-3):
    g = np.arange(1, int(round(1 / step))) / round(1 / step)
    la = np.asarray(binomial_log_ratio(8, 10, g))
    lb = np.asarray(binomial_log_ratio(12, 20, g))
    return (g, la, g, lb, -math.log(2.0), 0, False, 0.0, 0.0)


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<10} {best * 1e3:9.2f} ms")
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    if _core is None:
        print("compiled extension not built; only the fallback is timed")
    cases = [
        ("path_scan 20000x200", path_inputs()),
        ("grid_extremes 999x999 difference", grid_inputs()),
        ("grid_extremes 1999x1999 difference", grid_inputs(5e-4)),
    ]
    for name, inp in cases:
        print(name)
        fname = name.split()[0]
        call = lambda f: (lambda: f(*inp))
        t_py = bench("numpy", call(getattr(fallback, fname)), args.repeat)
        if _core is not None:
            t_c = bench("cython", call(getattr(_core, fname)), args.repeat)
            print(f"  speedup    {t_py / t_c:9.1f}x")


if __name__ == "__main__":
    main()
