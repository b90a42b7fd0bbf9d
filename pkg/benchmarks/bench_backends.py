#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against the pure-numpy fallback.

Workloads mirror the shipped experiment scenarios: a 10-harmonic run with
the frequency estimate supplied externally, and the same run with the
banded frequency loop in closed loop.  Also reports the worst deviation
between the two backends on identical inputs.

Usage: python benchmarks/bench_backends.py [--steps N] [--repeat R]
"""
import argparse
import math
import time

import numpy as np

from harmest._core import available_backends
from harmest.fll import lambda_vector
from harmest.observer import ObserverGains
from harmest.signals import (FrequencySchedule, HarmonicSchedule, HarmonicSet,
                             sample)


def build_workloads(n_steps):
    hs = HarmonicSet(range(1, 11))
    gains = ObserverGains.msogi(hs)
    h = 1e-4
    omega = 2 * math.pi * 50
    hsched = HarmonicSchedule.constant(hs, 325.0 * np.array(
        [1.0, 0.3, 0.25, 0.2, 0.15, 0.12, 0.1, 0.08, 0.06, 0.05]))
    fsched = FrequencySchedule.constant(omega)
    t_half = np.arange(2 * n_steps + 1) * (h / 2.0)
    y_half = sample(hs, hsched, fsched, t_half)
    base = (hs.as_array(), gains.l, lambda_vector(gains), y_half)
    open_loop = base + (np.full(n_steps + 1, omega), np.zeros(20), h,
                        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1e12)
    closed_loop = base + (np.zeros(1), np.zeros(20), h,
                          1, 60.0, 0.1, 2 * math.pi * 39, 2 * math.pi * 61,
                          -2e4 * math.pi, 2e4 * math.pi,
                          200.0, 2 * math.pi * 61, 200.0, 1, 1e12)
    return {"open-loop (external frequency)": open_loop,
            "closed-loop (frequency loop)": closed_loop}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=8000,
                        help="simulation steps per run (default 8000 = 0.8 s)")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions, best time wins (default 5)")
    args = parser.parse_args()

    backends = available_backends()
    workloads = build_workloads(args.steps)
    print(f"backends: {', '.join(backends)}   steps: {args.steps}   "
          f"repeats: {args.repeat}\n")
    print(f"{'workload':<36} " + " ".join(f"{name:>12}" for name in backends)
          + f" {'speedup':>9} {'max |dx|':>10}")
    for wname, wargs in workloads.items():
        times = {}
        results = {}
        for bname, fn in backends.items():
            best = math.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = fn(*wargs)
                best = min(best, time.perf_counter() - t0)
            assert out[0] == 0
            times[bname] = best
            results[bname] = out[3]
        row = f"{wname:<36} " + " ".join(f"{times[b] * 1e3:>9.2f} ms" for b in backends)
        if len(backends) == 2:
            py, cy = times["python"], times["cython"]
            names = list(results)
            dev = np.abs(results[names[0]] - results[names[1]]).max()
            row += f" {py / cy:>8.1f}x {dev:>10.2e}"
        print(row)


if __name__ == "__main__":
    main()
