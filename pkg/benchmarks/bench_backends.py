#!/usr/bin/env python3
"""Benchmark the numba kernel against the pure-numpy fallback.

Times the batched collision-stream kernel on both backends for the
full-reset and finite-reset presets and prints cycles/second plus the
speedup.  Run after installing the package:

    python benchmarks/bench_backends.py --n 200000
"""

import argparse
import math
import time

import numpy as np

from demon_battery.engine import EngineConfig
from demon_battery.experiments import _angles_from_uniforms
from demon_battery.kernels import HAVE_NUMBA, simulate_stream, warmup


def time_backend(backend, cfg, thetas, phis, u, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        simulate_stream(thetas, phis, u, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000,
                        help="cycles per timed run")
    parser.add_argument("--repeat", type=int, default=3,
                        help="repetitions; best time is reported")
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    u = rng.random((args.n, 3))
    thetas, phis = _angles_from_uniforms(u[:, 0], u[:, 1])

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    for backend in backends:
        warmup(backend)

    print(f"n = {args.n} cycles, best of {args.repeat}")
    print(f"{'mode':<8} {'backend':<8} {'time [s]':>10} {'cycles/s':>12}")
    for mode, gamma_tau in (("full", 8.0), ("finite", 1.0)):
        cfg = EngineConfig.default(reset_mode=mode, gamma_tau_se=gamma_tau)
        times = {}
        for backend in backends:
            dt = time_backend(backend, cfg, thetas, phis, u[:, 2], args.repeat)
            times[backend] = dt
            print(f"{mode:<8} {backend:<8} {dt:>10.4f} {args.n / dt:>12.0f}")
        if "numba" in times:
            print(f"{mode:<8} speedup numba/numpy: "
                  f"{times['numpy'] / times['numba']:.1f}x")


if __name__ == "__main__":
    main()
