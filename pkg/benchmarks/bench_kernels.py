"""Benchmark the compiled enumeration kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--radius R] [--cmax C] [--points N]

Also times one end-to-end engine run per backend (ORTHOCOUNT_PURE=1 in a
subprocess selects the fallback for the engine comparison).
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from orthocount._backend import backends


def timeit(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kernels(radius, cmax, points):
    impls = backends()
    rows = {}
    rng = np.random.default_rng(0)
    xs = rng.uniform(-5, 5, points)
    ys = np.exp(rng.uniform(-9, 1, points))
    norm2 = 2 * math.cosh(radius)
    for name, impl in impls.items():
        t_ball, ball = timeit(lambda: impl.sl2z_ball(norm2))
        t_coset, cosets = timeit(lambda: impl.sl2z_cusp_cosets(cmax))
        t_red, _ = timeit(lambda: impl.modular_reduce(xs, ys))
        rows[name] = (t_ball, len(ball), t_coset, len(cosets), t_red)
    print(f"{'backend':<10} {'sl2z_ball':>12} {'elements':>10} {'cusp_cosets':>12} {'witnesses':>10} {'reduce':>10}")
    for name, (tb, nb, tc, nc, tr) in rows.items():
        print(f"{name:<10} {tb:>10.3f}s {nb:>10d} {tc:>10.3f}s {nc:>10d} {tr:>8.3f}s")
    if len(rows) == 2:
        p, c = rows["pure"], rows["compiled"]
        print(
            f"{'speedup':<10} {p[0] / c[0]:>11.1f}x {'':>10} {p[2] / c[2]:>11.1f}x {'':>10} {p[4] / c[4]:>7.1f}x"
        )


ENGINE_SNIPPET = r"""
import math, time
from orthocount import geom, groups, perp
G = groups.preset_modular()
fam = perp.make_cusp_family(G, geom.Horoball(geom.INF2, 1.0))
t0 = time.perf_counter()
spec = perp.find_common_perpendiculars(fam, fam, G, 2*math.log(80)+1e-9, force_generic=True)
print(f"generic engine Q=80: {len(spec)} records in {time.perf_counter()-t0:.2f}s")
"""


def bench_engine():
    for pure in ("0", "1"):
        env = dict(os.environ, ORTHOCOUNT_PURE=pure)
        label = "pure" if pure == "1" else "selected"
        t0 = time.perf_counter()
        out = subprocess.run([sys.executable, "-c", ENGINE_SNIPPET], env=env, capture_output=True, text=True)
        wall = time.perf_counter() - t0
        print(f"[{label:<8}] {out.stdout.strip()}  (wall {wall:.2f}s)")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--radius", type=float, default=13.0)
    ap.add_argument("--cmax", type=int, default=2000)
    ap.add_argument("--points", type=int, default=200000)
    ap.add_argument("--engine", action="store_true", help="also time an end-to-end engine run per backend")
    args = ap.parse_args()
    bench_kernels(args.radius, args.cmax, args.points)
    if args.engine:
        bench_engine()
