"""Compare numba and pure-numpy kernel timings on desk-scale workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so no environment flag is needed;
the first numba call (JIT compile) is excluded from the timings.
"""
import argparse
import time

import numpy as np

from eqdegree.kernels import numba_impl, numpy_impl
from eqdegree.scenarios import scenario


def _workloads():
    rng = np.random.default_rng(0)
    S4 = scenario("S4")
    f = S4.map()
    expr = f.pieces[0].expr
    exps, coefs, rows = expr.compiled
    dexps, dcoefs, drows = expr.compiled_jacobian
    X = rng.uniform(-3, 3, size=(20000, 2))
    U0 = rng.uniform(-3, 3, size=(4000, 2))
    B = np.eye(2)
    S5 = scenario("S5")
    mats = S5.group.mats.copy()
    omega = S5.omega
    projs = np.array([np.outer(v, v) / (v @ v) for v in (np.array([1.0, 0]), np.array([1.0, 1.0]))])
    n = 40000
    edges = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    edges = edges[rng.random(n - 1) > 0.01]
    angles = np.stack([np.cos(np.linspace(0, 20, 50000)), np.sin(np.linspace(0, 20, 50000))], axis=1)
    return {
        "poly_eval": lambda m: m.poly_eval(X, exps, coefs, rows, 2),
        "newton_poly": lambda m: m.newton_poly(U0, B, exps, coefs, rows, dexps, dcoefs, drows, 50, 1e-12, 100.0),
        "contains_boxes": lambda m: m.contains_boxes(X, omega.inv_mats, omega.lo, omega.hi),
        "orbit_defects": lambda m: m.orbit_defects(X, mats),
        "subspace_distances": lambda m: m.subspace_distances(X, projs),
        "label_components": lambda m: m.label_components(n, edges),
        "angle_increments": lambda m: m.angle_increments(angles),
    }


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, work in _workloads().items():
        work(numba_impl)  # compile
        t_np = _time(lambda: work(numpy_impl), args.repeat)
        t_nb = _time(lambda: work(numba_impl), args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
