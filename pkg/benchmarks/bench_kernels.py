"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N wall time of each backend
and the speedup. Sizes mirror the replica workload: 6 variables, a few
thousand training samples, three conditions.
"""
import argparse
import timeit

import numpy as np

from mpcafd import _pykernels

try:
    from mpcafd import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    a = rng.standard_normal((40, 6))
    s6 = np.corrcoef(a.T)
    b = rng.standard_normal((200, 24))
    s24 = np.corrcoef(b.T)
    x = rng.standard_normal((20_000, 6))
    cents = rng.standard_normal((3, 6))
    p, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    return [
        ("jacobi_eigh m=6", "jacobi_eigh", (s6,)),
        ("jacobi_eigh m=24", "jacobi_eigh", (s24,)),
        ("nearest_centroid n=20000 k=3", "nearest_centroid", (x, cents)),
        ("score_indices n=20000 l=2", "score_indices", (x, p, np.array([0.5, 2.0]), 9.0, 1.3)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}{'python [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for label, name, fargs in cases(rng):
        times = []
        for mod in (_pykernels, _ckernels):
            if mod is None:
                times.append(float("nan"))
                continue
            fn = getattr(mod, name)
            number = max(1, int(0.05 / max(timeit.timeit(lambda: fn(*fargs), number=1), 1e-6)))
            best = min(timeit.repeat(lambda: fn(*fargs), number=number, repeat=args.repeat)) / number
            times.append(best * 1e3)
        print(f"{label:<32}{times[0]:>13.3f}{times[1]:>13.3f}{times[0] / times[1]:>8.1f}x")


if __name__ == "__main__":
    main()
