#!/usr/bin/env python3
"""Benchmark the compiled Monte-Carlo kernel against the NumPy fallback.

Both backends draw from the same counter-based stream and must produce
identical count tables; this script checks that while timing them at a few
trial counts and prints the throughput ratio.

Usage: python benchmarks/bench_kernels.py [--trials N ...]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dlczsim._kernels import available_backends  # noqa: E402

DEFAULT_TRIALS = (1_000_000, 10_000_000)

ARGS = dict(
    chi=0.01,
    p_mfs=0.5,
    eta_s=0.3,
    marginal_s1=0.5,
    survival=np.array([0.1198, 0.1199, 0.1198]),
    eta_t=0.7,
    cond_t1=np.array([0.9419, 0.0581]),
)


def run(backend_fn, n, seed=2024):
    start = time.perf_counter()
    counts = backend_fn(
        seed, 0, n, ARGS["chi"], ARGS["p_mfs"], ARGS["eta_s"],
        ARGS["marginal_s1"], ARGS["survival"], ARGS["eta_t"], ARGS["cond_t1"],
    )
    return counts, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, nargs="+", default=list(DEFAULT_TRIALS))
    options = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(sorted(backends))}")
    if "compiled" not in backends:
        print("compiled kernel not built; run `python setup.py build_ext --inplace`")

    print(f"{'trials':>12}  {'backend':>9}  {'time':>10}  {'Mtrials/s':>10}")
    for n in options.trials:
        results = {}
        for name in sorted(backends):
            counts, elapsed = run(backends[name], n)
            results[name] = counts
            print(f"{n:>12,}  {name:>9}  {elapsed:>9.3f}s  {n / elapsed / 1e6:>10.2f}")
        if len(results) == 2:
            identical = np.array_equal(results["python"], results["compiled"])
            print(f"{'':>12}  tables identical: {identical}")
            if not identical:
                raise SystemExit("backend mismatch: count tables differ")


if __name__ == "__main__":
    main()
