"""Time the compiled kernel against the pure-Python fallback, and a full 2D map.

Usage: python3 benchmarks/bench_kernels.py [--map] [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from lzsgate import _backend
from lzsgate.core import DriveParams
from lzsgate.hamiltonians import LAB, kernel_model
from lzsgate.numerics import IntegratorConfig
from lzsgate.presets import get_preset
from lzsgate.sweeps import scan_2d


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def bench_single(repeat):
    p = DriveParams(1, 13, 12, 0.75)
    model = kernel_model(p, LAB, None)
    cfg = IntegratorConfig()
    t_end = [2 * math.pi * 4]
    rows = {}
    for name in ("compiled", "python"):
        try:
            wall, (_, steps) = best_of(
                lambda: _backend.run_model(model, (1.0, 0.0), 0.0, t_end, cfg, name),
                1 if name == "python" else repeat)
        except ImportError:
            print(f"{name:9s} unavailable")
            continue
        rows[name] = wall
        print(f"{name:9s} {wall * 1e3:10.2f} ms  {steps} steps  "
              f"{wall / steps * 1e6:.3f} us/step")
    if len(rows) == 2:
        print(f"speed-up  {rows['python'] / rows['compiled']:.0f}x")


def bench_map():
    pr = get_preset("cs_robust_base")
    start = time.perf_counter()
    grid = scan_2d(pr.params, pr.duration, ("a", "delta0"), ((-0.1, 0.1), (-0.1, 0.1)),
                   (200, 200), decay=pr.decay)
    wall = time.perf_counter() - start
    print(f"200x200 map ({_backend.BACKEND}): {wall:.1f} s, "
          f"{wall / grid.data.size * 1e3:.2f} ms/cell, max F {np.nanmax(grid.data):.4f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--map", action="store_true", help="also time a 200x200 map")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_single(args.repeat)
    if args.map:
        bench_map()


if __name__ == "__main__":
    main()
