"""Time the compiled kernels against the numpy/pure-Python twin.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on identical inputs in both implementations; outputs are
compared before timings are reported.
"""

import argparse
import math
import time

import numpy as np

from ril import _kernels_py as py
from ril.random_model import MeasuredFamily, cdf_thresholds

try:
    from ril import _kernels as cy
except ImportError:
    cy = None


def _best(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]])
    th = cdf_thresholds(fam.weights)
    ld = fam.log_degrees
    sigma = math.sqrt(fam.sigma_sq)
    seq = np.arange(400) % 2
    degs = [2, 3]
    ratios = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]  # x^2 + 1, x^3 - 1
    state = (math.log(math.log(1e30)), -math.inf, 1, 2.0**-50, 0.0)
    return {
        "sample_indices(1e6)": lambda k: k.sample_indices(12345, th, 10**6)[0],
        "degree_walk_final(1e7)": lambda k: k.degree_walk_final(12345, th, ld, 10**7)[0],
        "lil_walk_extrema(1e6)": lambda k: k.lil_walk_extrema(12345, th, ld, 10**6, fam.log_delta, sigma)[:4],
        "log_chain(400 x 200)": lambda k: [
            k.log_chain(state, seq, degs, ratios, [0.0, 0.0], [1, 1]) for _ in range(200)
        ][-1],
    }


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    a, b = list(a), list(b)
    return len(a) == len(b) and all(
        x == y or (isinstance(x, float) and math.isclose(x, y, rel_tol=1e-12)) for x, y in zip(a, b)
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':28s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  match")
    for name, fn in cases().items():
        t_py, out_py = _best(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:28s} {t_py:10.4f} {'n/a':>10s}")
            continue
        t_cy, out_cy = _best(lambda: fn(cy), args.repeat)
        print(f"{name:28s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:8.1f}x  {_same(out_py, out_cy)}")


if __name__ == "__main__":
    main()
