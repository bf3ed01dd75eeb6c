"""Time the compiled kernel core against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from sgpmic import _pykernels

try:
    from sgpmic import _ckernels
except ImportError:
    _ckernels = None

SIZES = ((150, 50, 2), (569, 50, 2), (2310, 100, 2), (2310, 100, 10))


def bench(mod, name, args, repeat):
    fn = getattr(mod, name)
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    opts = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the numpy path is available")
    rng = np.random.default_rng(0)
    print(f"{'op':<16s}{'N':>6s}{'Nu':>5s}{'Q':>4s}{'python ms':>12s}{'cython ms':>12s}{'speedup':>9s}")
    for n, nu, q in SIZES:
        A = rng.normal(size=(n, q))
        B = rng.normal(size=(nu, q))
        G = rng.normal(size=(n, nu))
        E = _pykernels.rbf_parts(A, B, 0.7)[0]
        cases = (("sqdist", (A, B)), ("rbf_parts", (A, B, 0.7)),
                 ("rbf_input_grad", (A, B, G, 0.7, E, 1.3)))
        for name, args in cases:
            tp = bench(_pykernels, name, args, opts.repeat) * 1e3
            if _ckernels is None:
                print(f"{name:<16s}{n:>6d}{nu:>5d}{q:>4d}{tp:>12.3f}{'-':>12s}{'-':>9s}")
                continue
            tc = bench(_ckernels, name, args, opts.repeat) * 1e3
            print(f"{name:<16s}{n:>6d}{nu:>5d}{q:>4d}{tp:>12.3f}{tc:>12.3f}{tp / tc:>9.2f}")


if __name__ == "__main__":
    main()
