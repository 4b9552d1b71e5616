import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sovlab._kernels import _pykernels
from sovlab.chain import diagonal_twist, make_params
from sovlab.gl12 import GL12, build_system, sample_points
from sovlab.polysolve import ball_starts

ckernels = pytest.importorskip("sovlab._kernels._ckernels")


def system(sites, kernel=False, cubic=False):
    rng = np.random.default_rng(3 + sites)
    k = rng.normal(size=3) + 1j * rng.normal(size=3)
    if kernel:
        k[0] = 0
    p = make_params(GL12, 0.7 + 0.2j, rng.normal(size=sites) + 1j * rng.normal(size=sites), diagonal_twist(GL12, k))
    return build_system(p, sample_points(p, sites, rng), cubic=cubic)


@pytest.mark.parametrize("d, m, sites, a, b", [(3, 1, 4, 0, 3), (3, 1, 5, 1, 2), (2, 1, 6, 0, 5), (4, 2, 3, 0, 2)])
def test_swap_table_parity(d, m, sites, a, b):
    pp, ps = _pykernels.graded_swap_table(d, m, sites, a, b)
    cp, cs = ckernels.graded_swap_table(d, m, sites, a, b)
    assert np.array_equal(pp, cp) and np.array_equal(ps, cs)


@pytest.mark.parametrize("cubic", [False, True])
def test_tower_system_parity(cubic):
    sys_ = system(3, kernel=cubic, cubic=cubic)
    x = ball_starts(3, 50, 3.0, 1)
    for u, v in zip(_pykernels.tower_system(x, sys_.coeffs, cubic), ckernels.tower_system(x, sys_.coeffs, cubic)):
        assert np.allclose(u, v, rtol=1e-12, atol=1e-12)


def test_newton_batch_parity():
    sys_ = system(2)
    x0 = ball_starts(2, 200, 3.0, 2)
    px, pst = _pykernels.newton_batch(x0, sys_.coeffs, False, 60, 1e-13, 1e6)
    cx, cst = ckernels.newton_batch(x0, sys_.coeffs, False, 60, 1e-13, 1e6)

    def roots(x, st):
        out = []
        for r in x[st == 1]:
            if all(np.abs(r - q).max() > 1e-6 * (1 + np.abs(q).max()) for q in out):
                out.append(r)
        return np.array(out)

    a, b = roots(px, pst), roots(cx, cst)
    assert len(a) == len(b)
    for r in a:
        assert np.min(np.abs(b - r).max(axis=1)) < 1e-8 * (1 + np.abs(r).max())


SCRIPT = """
import json, numpy as np
from sovlab._kernels import BACKEND
from sovlab.twosite import default_fixture
from sovlab.gl12 import solve_spectrum
res = solve_spectrum(default_fixture(), "homotopy", seed=0)
xs = sorted(res.solutions.tolist(), key=lambda r: (round(r[0].real, 6), round(r[0].imag, 6)))
print(json.dumps({"backend": BACKEND, "x": [[z.real, z.imag] for r in xs for z in r]}))
"""


def backend_run(pure):
    env = dict(os.environ)
    env.pop("SOVLAB_PURE_PYTHON", None)
    if pure:
        env["SOVLAB_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_backends_agree_end_to_end():
    pure, compiled = backend_run(True), backend_run(False)
    assert pure["backend"] == "python" and compiled["backend"] == "compiled"
    assert np.allclose(pure["x"], compiled["x"], atol=1e-9)
