"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Sizes follow the workloads the optimizer actually sees: a 3000-point kriging
training set in 7 dimensions, a few hundred archive members, and a 721-sample
array pattern.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from mosbd import _kernels as k


def cases(rng):
    X = rng.random((3000, 7))
    x = rng.random(7)
    theta = 10.0 ** rng.uniform(-1, 1, 7)
    F = rng.random((400, 3))
    boxes = np.floor(F / 0.02)
    dist = rng.random(400)
    theta_grid = np.radians(np.linspace(-90, 90, 721))
    amps = rng.random(6)
    return {
        "corr_matrix (3000x7)": ("corr_matrix", (X, theta)),
        "corr_vector (3000x7)": ("corr_vector", (X, x, theta)),
        "dominance_matrix (400x3)": ("dominance_matrix", (F,)),
        "eps_dominance_matrix (400x3)": ("eps_dominance_matrix", (boxes, dist)),
        "max_interior_crowding (400x3)": ("max_interior_crowding", (F,)),
        "array_power (721 angles)": ("array_power", (amps, 0.3, 2.9, theta_grid)),
    }


def best_of(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not k.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speed-up':>9s}")
    for label, (name, fargs) in cases(rng).items():
        nb = getattr(k, f"{name}_nb")
        npy = getattr(k, f"{name}_np")
        nb(*fargs)  # compile outside the timing
        t_np = best_of(npy, fargs, args.repeat)
        t_nb = best_of(nb, fargs, args.repeat)
        print(f"{label:32s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
