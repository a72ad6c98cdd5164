"""Compiled kernels vs the numpy fallback on representative workloads.

Run ``python3 benchmarks/bench_kernels.py``. Each workload runs on both
backends, is checked for identical output, and reports the best of
``--repeat`` wall-clock timings. The execution-tree workload runs in a child
process per backend because the backend is fixed at import.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from lloydspp import DistributionConfig
from lloydspp._backend import load

TREE_SNIPPET = """
import json, sys, time
from lloydspp import BACKEND, AlphaInterval, DistributionConfig, enumerate_execution_tree
n, reps = int(sys.argv[1]), int(sys.argv[2])
inst, Z = DistributionConfig(n=n).sample(0, 0)
best, leaves = float("inf"), None
for _ in range(reps):
    t = time.perf_counter()
    tree = enumerate_execution_tree(inst, Z, AlphaInterval(0.0, 20.0, True))
    best = min(best, time.perf_counter() - t)
    leaves = [(lf.centers, lf.lo_idx) for lf in tree.leaves]
print(json.dumps({"backend": BACKEND, "seconds": best, "leaves": leaves}))
"""


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def kernel_workloads(n):
    inst, Z = DistributionConfig(n=n).sample(0, 0)
    X = np.ascontiguousarray(inst.points)
    z = np.ascontiguousarray(Z.z)
    alphas = np.linspace(0.0, 20.0, 200)
    init = np.arange(inst.k, dtype=np.int64) * (n // inst.k)
    W = np.random.default_rng(0).integers(0, 50, size=(6, 6))
    return {
        "seed_batch (200 alphas)": lambda K: K.seed_batch(X, z, alphas),
        "lloyds_medoid (beta=2, T=3)": lambda K: K.lloyds_medoid(X, init, 2.0, 3, False)[0],
        "lloyds_mean (T=3)": lambda K: K.lloyds_mean(X, np.ascontiguousarray(X[init]), 3)[0],
        "hungarian_max (6x6)": lambda K: K.hungarian_max(W),
    }


def tree_timing(backend, n, repeat):
    env = dict(os.environ, LLOYDSPP_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", TREE_SNIPPET, str(n), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=480)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py, cy = load("python"), load("cython")
    rows = []
    for name, fn in kernel_workloads(args.n).items():
        t_py, out_py = best_of(lambda: fn(py), args.repeat)
        t_cy, out_cy = best_of(lambda: fn(cy), args.repeat)
        rows.append((name, t_py, t_cy, np.array_equal(np.asarray(out_py), np.asarray(out_cy))))
    tp, tc = tree_timing("python", args.n, args.repeat), tree_timing("cython", args.n, args.repeat)
    rows.append((f"execution tree ({len(tc['leaves'])} leaves)", tp["seconds"], tc["seconds"],
                 tp["leaves"] == tc["leaves"]))

    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'workload':<34}{'python s':>11}{'cython s':>11}{'speedup':>9}  same")
    for name, t_py, t_cy, same in rows:
        print(f"{name:<34}{t_py:>11.5f}{t_cy:>11.5f}{t_py / t_cy:>9.1f}  {same}")
    return 0 if all(r[3] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
