#!/usr/bin/env python3
"""Compiled vs numpy kernels: Chamfer (two NN passes) and farthest point sampling.

Usage::

    python3 benchmarks/bench_kernels.py --sizes 2048 8192 --repeat 3 --out bench.csv

Both backends must agree exactly; a mismatch aborts the run. Rows report the
best of ``--repeat`` wall-clock timings.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from cpccd import _kernels
from cpccd.metrics import chamfer_terms
from cpccd.pcgeom.ops import fps_indices

FPS_K = 2048


def best_of(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="CSV path (default: stdout only)")
    args = ap.parse_args(argv)

    if "cython" not in _kernels.BACKENDS:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    rows = []
    for n in args.sizes:
        a = rng.normal(size=(n, 3))
        b = rng.normal(size=(n, 3)) + 0.05
        k = min(FPS_K, n)
        tasks = {
            "chamfer": lambda be: chamfer_terms(a, b, backend=be)[:2],
            "fps": lambda be: fps_indices(a, k, 0, backend=be).tolist(),
        }
        for task, fn in tasks.items():
            timings = {}
            results = {}
            for be in ("cython", "python"):
                timings[be], results[be] = best_of(lambda: fn(be), args.repeat)
            if results["cython"] != results["python"]:
                print(f"backends disagree on {task} n={n}", file=sys.stderr)
                return 2
            row = {"task": task, "n": n, "cython_s": f"{timings['cython']:.6f}",
                   "python_s": f"{timings['python']:.6f}",
                   "speedup": f"{timings['python'] / timings['cython']:.2f}"}
            rows.append(row)
            print(f"{task:8s} n={n:<6d} cython={row['cython_s']}s python={row['python_s']}s "
                  f"x{row['speedup']}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
