"""Timing comparison of the jit and pure-numpy kernel paths.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Production code picks one path at import time from the
QCSCHED_DISABLE_NUMBA environment flag; this script calls both
implementations directly so a single process reports the ratio. Numbers
are min-of-repeats after one warmup call (the warmup also absorbs jit
compilation).
"""

import argparse
import time

import numpy as np

from qcsched._kernels import (
    HAS_NUMBA,
    _batch_objectives_jit,
    _batch_objectives_np,
    _crowding_jit,
    _crowding_np,
    _nd_ranks_jit,
    _nd_ranks_np,
)


def best_of(fn, args, repeats: int) -> float:
    fn(*args)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def objective_inputs(rng, pop: int, n_jobs: int, n_qpus: int):
    offsets = np.arange(n_jobs, dtype=np.int64) * n_qpus
    feas_flat = np.tile(np.arange(n_qpus, dtype=np.int64), n_jobs)
    t_flat = rng.uniform(1.0, 10.0, size=n_jobs * n_qpus)
    f_flat = rng.uniform(0.5, 0.999, size=n_jobs * n_qpus)
    wait = rng.uniform(0.0, 30.0, size=n_qpus)
    genomes = rng.integers(0, n_qpus, size=(pop, n_jobs), dtype=np.int64)
    return genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    rows = []
    for pop, n_jobs in ((100, 100), (256, 256)):
        inputs = objective_inputs(rng, pop, n_jobs, 8)
        jit_s = best_of(_batch_objectives_jit, inputs, args.repeats)
        np_s = best_of(_batch_objectives_np, inputs, args.repeats)
        rows.append((f"batch_objectives {pop}x{n_jobs}", jit_s, np_s))

    for n in (200, 1000):
        pts = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(n, 2)))
        jit_s = best_of(_nd_ranks_jit, (pts,), args.repeats)
        np_s = best_of(_nd_ranks_np, (pts,), args.repeats)
        rows.append((f"nd_ranks n={n}", jit_s, np_s))

    for n in (200, 5000):
        pts = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(n, 2)))
        jit_s = best_of(_crowding_jit, (pts,), args.repeats)
        np_s = best_of(_crowding_np, (pts,), args.repeats)
        rows.append((f"crowding n={n}", jit_s, np_s))

    label = "numba" if HAS_NUMBA else "python-loop (numba not installed)"
    print(f"jit path: {label}; {args.repeats} repeats, min shown")
    print(f"{'kernel':32} {'jit s':>12} {'numpy s':>12} {'numpy/jit':>10}")
    for name, jit_s, np_s in rows:
        print(f"{name:32} {jit_s:12.3e} {np_s:12.3e} {np_s / jit_s:10.1f}")


if __name__ == "__main__":
    main()
