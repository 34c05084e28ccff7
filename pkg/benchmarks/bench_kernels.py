#!/usr/bin/env python3
"""Compare the jitted Gauss-Seidel sweep against the pure-Python fallback.

Builds a representative coupled 2x2 node system from the gaussian_shift
fixture (the same quantities the gc solver assembles) and times repeated
sweeps through both implementations at several grid sizes.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64 128 256] [--sweeps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from curvreg import _kernels
from curvreg.fields import VectorField2, laplacian_bands_1d
from curvreg.fixtures import make_fixture
from curvreg.similarity import force, linearize_force

SWEEP_ARGS = ("u1", "u2", "b1", "b2", "s11", "s12", "s22")


def build_problem(n: int) -> dict[str, np.ndarray]:
    pair = make_fixture("gaussian_shift", n)
    T = pair.template
    u = VectorField2.zeros_like(T)
    lin = linearize_force(T, u)
    f = force(T, pair.reference, u)
    return {
        "u1": np.zeros((n, n)),
        "u2": np.zeros((n, n)),
        "b1": -f.x_comp.data,
        "b2": -f.y_comp.data,
        "s11": lin.sigma11.data,
        "s12": lin.sigma12.data,
        "s22": lin.sigma22.data,
        "cx": laplacian_bands_1d(n, 1.0),
        "cy": laplacian_bands_1d(n, 1.0),
    }


def time_impl(impl, prob: dict[str, np.ndarray], sweeps: int) -> float:
    u1 = prob["u1"].copy()
    u2 = prob["u2"].copy()

    def sweep():
        impl(u1, u2, prob["b1"], prob["b2"], prob["s11"], prob["s12"],
             prob["s22"], prob["cx"], prob["cy"], 0.1, 0.9725, 1e-9)

    sweep()   # absorb one-time dispatch/compile-cache cost
    start = time.perf_counter()
    for _ in range(sweeps):
        sweep()
    return (time.perf_counter() - start) / sweeps


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[64, 128, 256])
    parser.add_argument("--sweeps", type=int, default=20,
                        help="sweeps per timing (python fallback runs "
                             "one tenth of this)")
    args = parser.parse_args()

    if not _kernels.HAS_NUMBA:
        print("numba is not installed; timing the pure-Python path only")
    else:
        _kernels.warmup()

    print(f"{'size':>6} {'python ms/sweep':>16} {'numba ms/sweep':>15} "
          f"{'speedup':>8}")
    for n in args.sizes:
        prob = build_problem(n)
        py = time_impl(_kernels.gs_sweep_python, prob,
                       max(1, args.sweeps // 10))
        if _kernels.HAS_NUMBA:
            nb = time_impl(_kernels.gs_sweep_numba, prob, args.sweeps)
            print(f"{n:>6} {py * 1e3:>16.3f} {nb * 1e3:>15.4f} "
                  f"{py / nb:>7.0f}x")
        else:
            print(f"{n:>6} {py * 1e3:>16.3f} {'-':>15} {'-':>8}")


if __name__ == "__main__":
    main()
