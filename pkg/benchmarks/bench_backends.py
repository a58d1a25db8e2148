#!/usr/bin/env python3
"""Compare the numba and numpy kernels for full branch enumeration and batched evolution.

Usage:
    python3 benchmarks/bench_backends.py [--q 6] [--steps 8 12 16 20] [--samples 100000]

Each timing is the best of ``--repeat`` runs after one warm-up call (the
warm-up also absorbs numba compilation).  The script checks that both
backends agree before reporting.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from maecpolar import _kernels
from maecpolar.channel import random_distribution
from maecpolar.lattice import lattice_for
from maecpolar.polar import sample_signs


def best_of(fn, repeat: int) -> float:
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=6)
    ap.add_argument("--steps", type=int, nargs="+", default=[8, 12, 16, 20])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--sample-steps", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    lat = lattice_for(args.q)
    import random

    eps = random_distribution(lat, random.Random(args.seed)).to_float().as_array()
    deltas = np.array([0.01])
    weights = np.log(np.array(lat.divisors, dtype=np.float64))
    g, l = lat.gcd_table, lat.lcm_table

    print(f"q={args.q} tau={lat.tau}")
    print(f"{'task':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for n in args.steps:
        res = {}
        times = {}
        for b in ("numba", "numpy"):
            times[b] = best_of(lambda b=b: res.__setitem__(
                b, _kernels.enumerate_stats(eps, n, g, l, deltas, weights, False, b)), args.repeat)
        diff = float(np.max(np.abs(res["numba"][0] - res["numpy"][0]))) / 2**n
        if not (np.array_equal(res["numba"][1], res["numpy"][1]) and diff < 1e-12):
            raise SystemExit(f"backends disagree at n={n}")
        print(f"{'enumerate n=' + str(n):<22}{times['numba']:>12.4f}{times['numpy']:>12.4f}"
              f"{times['numpy'] / times['numba']:>10.1f}{diff:>14.2e}")

    signs = sample_signs(args.seed, 0, args.samples, args.sample_steps)
    res, times = {}, {}
    for b in ("numba", "numpy"):
        times[b] = best_of(lambda b=b: res.__setitem__(b, _kernels.evolve_batch(eps, signs, g, l, b)), args.repeat)
    diff = float(np.max(np.abs(res["numba"] - res["numpy"])))
    label = f"evolve N={args.samples} n={args.sample_steps}"
    print(f"{label:<22}{times['numba']:>12.4f}{times['numpy']:>12.4f}"
          f"{times['numpy'] / times['numba']:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
