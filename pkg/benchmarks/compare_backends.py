#!/usr/bin/env python3
"""Times the per-bin percentile kernel through each available backend.

The kernel dominates descriptor computation, so this is the number that
matters for batch conversion throughput.  End-to-end MLH timings (grid
projection + kernel) are reported as well.
"""

import argparse
import statistics
import time

import numpy as np

from gridshape import GridSpec, PointCloud, compute_mlh, z_ring_orientations
from gridshape import backend
from gridshape.descriptors import _binned_heights


def time_callable(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return times


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=100_000)
    parser.add_argument("--res", type=int, default=256)
    parser.add_argument("--layers", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cloud = PointCloud(rng.uniform(-1, 1, (args.points, 3)))
    frame = z_ring_orientations(12)[0]
    spec = GridSpec(args.res, args.res, args.layers)
    flat, heights, _ = _binned_heights(cloud, frame, spec)

    print(
        f"{args.points} points, {args.res}x{args.res} grid, "
        f"{args.layers} layers, best of {args.repeats}"
    )
    print(f"available backends: {', '.join(backend.available_backends())}")
    print()
    print(f"{'backend':<10} {'kernel ms':>12} {'median ms':>12} {'speedup':>9}")

    names = ["numpy"] + [n for n in backend.available_backends() if n != "numpy"]
    baseline = None
    for name in names:
        def run(n=name):
            backend.bin_percentiles(
                flat, heights, spec.n_bins, spec.layers, fill=-2.0, backend=n
            )

        run()  # warm-up
        times = time_callable(run, args.repeats)
        best = min(times) * 1000
        median = statistics.median(times) * 1000
        if name == "numpy":
            baseline = best
        speedup = f"{baseline / best:.1f}x" if baseline else "-"
        print(f"{name:<10} {best:>12.2f} {median:>12.2f} {speedup:>9}")

    print()
    active = backend.active_backend()
    compute_mlh(cloud, frame, spec)  # warm-up
    times = time_callable(lambda: compute_mlh(cloud, frame, spec), args.repeats)
    print(f"end-to-end compute_mlh ({active} backend): {min(times) * 1000:.2f} ms best")


if __name__ == "__main__":
    main()
