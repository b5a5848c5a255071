"""Time the compiled guidance kernel against the NumPy fallback.

    python3 benchmarks/bench_kernels.py --particles 20000 --repeat 5
"""
import argparse
import json
import time

import numpy as np

from pilotwave import kernels
from pilotwave.grid import WaveFunction, gaussian, make_grid, normalize
from pilotwave.guidance import GuidanceField, IntegratorConfig, integrate_ensemble
from pilotwave.propagator import PropagatorConfig, evolve


def random_field(dims: int, points: int, seed: int) -> GuidanceField:
    rng = np.random.default_rng(seed)
    g = make_grid([(-8, 8)] * dims, [points] * dims)
    amps = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape) + 2.0
    return GuidanceField(normalize(WaveFunction(g, amps)))


def time_evaluate(field, other, pts, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        field.evaluate(pts, other=other, alpha=0.3, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def time_ensemble(backend, n, repeat):
    g = make_grid([(-40, 40)], [2048])
    frames = evolve(gaussian(g, 0.0, 1.0, 0.5), None, 2.0, PropagatorConfig(dt=0.02), 2)
    x0 = np.random.default_rng(0).normal(size=(n, 1))
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        integrate_ensemble(frames, None, x0, IntegratorConfig(), backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--particles", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", action="store_true", help="print results as JSON")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(1)
    rows = []
    for dims, points in ((1, 4096), (2, 256), (3, 48)):
        fa, fb = random_field(dims, points, 2), random_field(dims, points, 3)
        pts = rng.uniform(-7.9, 7.9, size=(args.particles, dims))
        row = {"case": f"evaluate {dims}D {points}^{dims}", "particles": args.particles}
        for backend in kernels.AVAILABLE:
            row[backend] = time_evaluate(fa, fb, pts, backend, args.repeat)
        rows.append(row)
    row = {"case": "integrate 1D free packet, 100 frames", "particles": args.particles}
    for backend in kernels.AVAILABLE:
        row[backend] = time_ensemble(backend, args.particles, max(1, args.repeat // 2))
    rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'case':40s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for r in rows:
        cy = r.get("cython", float("nan"))
        print(f"{r['case']:40s} {r['python']:11.4f} {cy:11.4f} {r['python'] / cy:9.1f}")


if __name__ == "__main__":
    main()
