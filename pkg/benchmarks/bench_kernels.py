"""Compiled vs pure-Python kernels.

Times ``simulate_cell`` on synthetic cells and ``max_free_run`` on random
occupancy vectors with both backends, checks that the outputs agree, and
optionally times a small end-to-end capacity sweep under each backend.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from redcap_dim import _kernels_py
from redcap_dim.kernels import PF, RR, compiled


def make_cell(rng, n_users, n_tti, rate_per_tti):
    bits_per_prb = rng.uniform(50.0, 1200.0, n_users)
    max_prb = np.full(n_users, 273, dtype=np.int64)
    arrivals, sizes, starts = [], [], [0]
    for _ in range(n_users):
        t = np.cumsum(rng.exponential(1.0 / rate_per_tti, size=int(n_tti * rate_per_tti * 2) + 1))
        t = np.ceil(t[t < n_tti]).astype(np.int64)
        arrivals.append(t)
        sizes.append(np.full(t.size, 4e6))
        starts.append(starts[-1] + t.size)
    return (bits_per_prb, max_prb, np.array(starts, dtype=np.int64),
            np.concatenate(arrivals), np.concatenate(sizes))


def best_of(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def same(a, b):
    return all(np.array_equal(x, y) if isinstance(x, np.ndarray) else x == y
               for x, y in zip(a, b))


def bench_kernels(repeat):
    ext = compiled()
    if ext is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
        return
    rng = np.random.default_rng(7)
    print(f"{'kernel':<34}{'python s':>11}{'cython s':>11}{'speedup':>9}  equal")
    for n_users, rate in ((10, 1 / 400), (30, 1 / 400), (60, 1 / 800)):
        cell = make_cell(rng, n_users, 8000, rate)
        for name, sched in (("RR", RR), ("PF", PF)):
            args = cell + (273, 8000, sched, 100.0)
            tp, rp = best_of(lambda: _kernels_py.simulate_cell(*args), repeat)
            tc, rc = best_of(lambda: ext.simulate_cell(*args), repeat)
            label = f"simulate_cell {name} users={n_users}"
            print(f"{label:<34}{tp:>11.4f}{tc:>11.5f}{tp / tc:>9.0f}x  {same(rp, rc)}")
    occ = [rng.integers(0, 2, 273).astype(np.uint8) for _ in range(2000)]
    tp, rp = best_of(lambda: [_kernels_py.max_free_run(o) for o in occ], repeat)
    tc, rc = best_of(lambda: [ext.max_free_run(o) for o in occ], repeat)
    print(f"{'max_free_run x2000':<34}{tp:>11.4f}{tc:>11.5f}{tp / tc:>9.0f}x  {rp == rc}")


E2E = """
import hashlib
import time
from redcap_dim import kernels
from redcap_dim.capacity import CapacityScenario, run_capacity_sim, report_rows
t0 = time.perf_counter()
rows = report_rows(run_capacity_sim(CapacityScenario(drops=2, redcap_fraction=0.4)))
print(kernels.BACKEND, round(time.perf_counter() - t0, 3), hashlib.sha256(repr(rows).encode()).hexdigest()[:16])
"""


def bench_end_to_end():
    print("\nend-to-end capacity sweep (7 cells x 30 users x 2 drops, fraction 0.4)")
    outputs = []
    for pure in ("1", ""):
        env = dict(os.environ, REDCAP_DIM_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        outputs.append(out)
        print(f"  backend={out[0]:<7} {float(out[1]):8.2f} s")
    print(f"  identical reports: {outputs[0][2] == outputs[1][2]}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()
