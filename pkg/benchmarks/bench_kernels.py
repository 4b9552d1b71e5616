"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--sites N] [--repeat R]

Both backends are imported directly, so the ``SOVLAB_PURE_PYTHON``
switch does not matter here. Outputs are compared before timing.
"""
import argparse
import timeit

import numpy as np

from sovlab._kernels import _pykernels
from sovlab.chain import diagonal_twist, make_params
from sovlab.gl12 import GL12, build_system, sample_points
from sovlab.polysolve import ball_starts

try:
    from sovlab._kernels import _ckernels
except ImportError:
    _ckernels = None


def fixture(sites: int):
    rng = np.random.default_rng(11)
    xi = rng.normal(size=sites) + 1j * rng.normal(size=sites)
    k = rng.normal(size=3) + 1j * rng.normal(size=3)
    p = make_params(GL12, 0.7 + 0.2j, xi, diagonal_twist(GL12, k))
    return build_system(p, sample_points(p, sites, rng))


def cases(sites: int):
    system = fixture(sites)
    starts = ball_starts(sites, 2000, 3.0, 0)
    return {
        "graded_swap_table": lambda mod: mod.graded_swap_table(3, 1, 8, 1, 6),
        "tower_system": lambda mod: mod.tower_system(starts, system.coeffs, False),
        "newton_batch": lambda mod: mod.newton_batch(starts, system.coeffs, False, 60, 1e-13, 1e6),
    }


def distinct(x, status):
    kept = []
    for r in x[status == 1]:
        if all(np.max(np.abs(r - q)) > 1e-6 * (1 + np.max(np.abs(q))) for q in kept):
            kept.append(r)
    return np.array(kept)


def same_roots(a, b):
    ra, rb = distinct(*a), distinct(*b)
    if len(ra) != len(rb):
        return False
    return all(np.min(np.max(np.abs(rb - r), axis=1)) <= 1e-6 * (1 + np.max(np.abs(r))) for r in ra)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sites", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return
    print(f"{'kernel':<20}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    for name, call in cases(args.sites).items():
        a, b = call(_pykernels), call(_ckernels)
        if name == "newton_batch":
            # individual starts may land on different roots; the root sets must agree
            assert same_roots(a, b), name
        else:
            assert all(np.allclose(u, v, rtol=1e-10, atol=1e-12) for u, v in zip(a, b)), name
        tp = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: call(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:<20}{tp:>12.4f}{tc:>14.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
