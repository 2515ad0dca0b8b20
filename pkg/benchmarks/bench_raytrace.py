#!/usr/bin/env python3
"""Benchmark the compiled ray kernel against the numpy fallback.

Traces the same bundles through the analytic classical profile and the
synthesized voxel field with both backends, reports wall time and speedup,
and cross-checks that exit directions agree.
"""

import argparse
import time

import numpy as np

import zonelens.raytrace as rt
from zonelens.lens import LensConfig, synthesize_field


def bench(medium, label, n_rays, step, repeats):
    rows = {}
    for backend in ("compiled", "python"):
        if backend == "compiled" and not rt.compiled_available():
            print(f"{label:>10} {backend:>9}: extension not built, skipped")
            continue
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            stats, exits = rt.trace_bundle(
                medium, [0.0, 0.0, -medium.radius], 30.0, n_rays,
                step=step, backend=backend, return_exits=True)
            times.append(time.perf_counter() - t0)
        best = min(times)
        rows[backend] = (best, exits)
        print(f"{label:>10} {backend:>9}: {best * 1e3:8.1f} ms   "
              f"spread={stats.angular_spread_rms_deg:.3g} deg   "
              f"trapped={stats.trapped_fraction:.2f}")
    if len(rows) == 2:
        speedup = rows["python"][0] / rows["compiled"][0]
        dots = np.clip(np.einsum("ij,ij->i", rows["python"][1][1],
                                 rows["compiled"][1][1]), -1, 1)
        worst = float(np.degrees(np.arccos(dots)).max())
        print(f"{label:>10}   speedup: {speedup:6.1f}x   "
              f"max exit-direction disagreement: {worst:.2e} deg")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rays", type=int, default=500)
    ap.add_argument("--step", type=float, default=0.1)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    cfg = LensConfig()
    print(f"bundle: {args.rays} rays, step {args.step} mm, "
          f"best of {args.repeats}")
    bench(rt.LuneburgProfile(cfg.radius_mm), "analytic",
          args.rays, args.step, args.repeats)
    bench(rt.VoxelMedium(synthesize_field(cfg)), "voxel",
          args.rays, args.step, args.repeats)


if __name__ == "__main__":
    main()
