import numpy as np
import pytest

from sovlab.chain import diagonal_twist, make_params, validate_twist
from sovlab.graded import GradingSignature

SIGNATURES = [GradingSignature(1, 1), GradingSignature(1, 2), GradingSignature(2, 1), GradingSignature(2, 2)]
GL12 = GradingSignature(1, 2)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_block_twist(sig, rng):
    k = np.zeros((sig.dim, sig.dim), dtype=complex)
    k[: sig.m, : sig.m] = crandn(rng, sig.m, sig.m)
    k[sig.m :, sig.m :] = crandn(rng, sig.n, sig.n)
    return validate_twist(sig, k)


def random_chain(sig, sites, rng, twist=None, eta=None):
    eta = complex(rng.normal(), rng.normal()) if eta is None else eta
    xi = crandn(rng, sites)
    tw = random_block_twist(sig, rng) if twist is None else twist
    return make_params(sig, eta, xi, tw)


@pytest.fixture
def rng():
    return np.random.default_rng(20241)


@pytest.fixture
def two_site_chain():
    return make_params(GL12, 0.7 + 0.2j, np.array([0.0, 1.1 - 0.3j]), diagonal_twist(GL12, [1.3, -0.8 + 0.5j, 2.1j]))


@pytest.fixture
def kernel_chain():
    return make_params(GL12, 0.7 + 0.2j, np.array([0.0, 1.1 - 0.3j]), diagonal_twist(GL12, [0.0, -0.8 + 0.5j, 2.1j]))


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
