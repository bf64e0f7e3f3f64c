"""
Time the compiled and numpy implementations of each hot kernel.

    python3 benchmarks/bench_kernels.py [--points 20000] [--repeat 3]

The first numba call of each kernel is run once untimed so compilation (or
cache loading) is not counted.
"""
import argparse
import time

import numpy as np

from hotspots import _accel
from hotspots.dbscan import DbscanParams, dbscan
from hotspots.geo import bounding_box
from hotspots.heatmap import HeatmapParams, render
from hotspots.markers import MarkerParams, cluster_markers
from hotspots.quality import silhouette


def synthetic(n, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform([35.1, -80.95], [35.35, -80.7], size=(8, 2))
    k = rng.integers(0, 9, n)
    pts = np.empty((n, 2))
    blob = k < 8
    pts[blob] = centers[k[blob]] + rng.normal(0, 0.002, (blob.sum(), 2))
    pts[~blob] = rng.uniform([35.0, -81.0], [35.45, -80.6], ((~blob).sum(), 2))
    return pts


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    pts = synthetic(args.points)
    clustering = dbscan(pts, DbscanParams(0.05, 30))
    # silhouette is quadratic, so it gets a subsample
    sub = pts[: min(args.points, 3000)]
    sub_clustering = dbscan(sub, DbscanParams(0.05, 5))
    heat = HeatmapParams(width=512, height=512, bbox=bounding_box(pts, 0.05))

    cases = {
        "dbscan": lambda: dbscan(pts, DbscanParams(0.05, 30)),
        "heatmap": lambda: render(pts, heat),
        "markers z12": lambda: cluster_markers(pts, MarkerParams(12)),
        "markers z22": lambda: cluster_markers(pts, MarkerParams(22)),
        f"silhouette n={len(sub)}": lambda: silhouette(sub, sub_clustering),
    }
    print(f"{args.points} points, {clustering.cluster_count} clusters, best of {args.repeat}")
    print(f"{'kernel':<22}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    prev = _accel.backend()
    try:
        for name, fn in cases.items():
            result = {}
            for backend in ("numba", "numpy"):
                _accel.set_backend(backend)
                fn()  # warm-up
                result[backend] = best_of(fn, args.repeat)
            ratio = result["numpy"] / result["numba"] if result["numba"] > 0 else float("inf")
            print(f"{name:<22}{result['numba']:>10.4f}{result['numpy']:>10.4f}{ratio:>9.1f}x")
    finally:
        _accel.set_backend(prev)


if __name__ == "__main__":
    main()
