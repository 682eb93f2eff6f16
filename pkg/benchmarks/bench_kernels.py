"""Throughput of the compiled and pure-Python integration kernels.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Each backend integrates the same filtered spiral start; the table reports
RK4 steps per second and the compiled speed-up.
"""
import argparse
import time

import numpy as np

from blackstart import _layout as L
from blackstart import kernels
from blackstart.sim import kernel_params, default_scenario

CASES = [
    ("spiral, filter", L.SRC_SPIRAL, True),
    ("hard, no filter", L.SRC_HARD, False),
]


def time_backend(mod, source, with_filter, steps, repeat):
    sc = default_scenario("spiral", with_filter)
    par = kernel_params(sc)
    best = float("inf")
    for _ in range(repeat):
        x = np.zeros(L.N_STATE)
        out = np.zeros((steps // 100 + 2, L.N_COL))
        peaks = np.zeros(L.N_PEAK)
        ctl = np.zeros(L.N_CTL)
        t0 = time.perf_counter()
        mod.integrate(x, par, source, with_filter, 0.0, 0.0, sc.dt, steps, 0, out, 100, peaks, ctl)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        cy = None
        print("compiled kernels not built; timing the Python fallback only")

    print(f"{'case':18s} {'python steps/s':>15s} {'cython steps/s':>15s} {'speed-up':>9s}")
    for label, source, with_filter in CASES:
        t_py = time_backend(py, source, with_filter, args.steps, args.repeat)
        line = f"{label:18s} {args.steps / t_py:15.3g}"
        if cy is not None:
            t_cy = time_backend(cy, source, with_filter, args.steps, args.repeat)
            line += f" {args.steps / t_cy:15.3g} {t_py / t_cy:8.0f}x"
        print(line)


if __name__ == "__main__":
    main()
