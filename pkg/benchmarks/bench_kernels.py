"""Time the compiled kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Prints one line per kernel and problem size with the best-of-N time of each
backend and the speedup. The compiled extension must be built
(``pip install -e . --no-build-isolation``) for the cython column.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from coupled_logistic import _kernels_py as py

try:
    from coupled_logistic import _kernels as cy
except ImportError:
    cy = None


def cases(n: int, rng: np.random.Generator):
    u = rng.standard_normal(n)
    v = rng.standard_normal(n)
    m = int(np.sqrt(n))
    f2 = rng.standard_normal(m * m)
    diag = 2.0 + rng.random(n)
    off = -np.ones(n - 1)
    return {
        "neg_lap_1d": (u, 0.01),
        "neg_lap_2d": (f2, m, m, 0.05, 0.05),
        "power_sums p=3": (u, v, 3.0),
        "nonlinear_grad p=3": (u, v, 3.0, -10.0),
        "sturm_count": (diag, off, 1.0),
    }


def kernel(mod, label: str):
    return getattr(mod, label.split()[0])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[199, 4096, 65536])
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>8}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        for label, a in cases(n, rng).items():
            t_py = min(timeit.repeat(lambda: kernel(py, label)(*a), number=10, repeat=args.repeat)) / 10
            if cy is None:
                print(f"{label:<22}{n:>8}{t_py * 1e6:>14.2f}{'-':>14}{'-':>10}")
                continue
            t_cy = min(timeit.repeat(lambda: kernel(cy, label)(*a), number=10, repeat=args.repeat)) / 10
            print(f"{label:<22}{n:>8}{t_py * 1e6:>14.2f}{t_cy * 1e6:>14.2f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
