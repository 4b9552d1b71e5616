import numpy as np
import pytest

from sovlab.twosite import closed_form_polynomials
from sovlab.chain import diagonal_twist, make_params, transfer
from sovlab.errors import ArgumentError
from sovlab.fusion import TransferTower
from sovlab.gl12 import (
    ScalarTower,
    closure_residual,
    diag_spectrum,
    fused_eigenvalue_residual,
    is_kernel_twist,
    match_spectra,
    null_level_residual,
    null_out_residual,
    solve_spectrum,
    t1_poly,
)
from sovlab.graded import GradingSignature
from sovlab.polysolve import ball_starts

from conftest import GL12, crandn

SAMPLES = np.array([0.37 - 0.21j, -0.83 + 0.44j, 1.21 + 0.73j, 0.05 + 1.3j])


def random_gl12(rng, sites, kernel=False):
    k = crandn(rng, 3)
    if kernel:
        k[0] = 0
    return make_params(GL12, 0.7 + 0.2j, crandn(rng, sites), diagonal_twist(GL12, k))


def test_t1_matches_closed_form_polynomials(two_site_chain, rng):
    p = two_site_chain
    xs, _ = diag_spectrum(p)
    polys = closed_form_polynomials(p.eta, p.xi[1], np.diagonal(p.twist.matrix))
    for x in xs:
        # identify the closed form by its value at 0 = xi_1
        a, b, c = min(polys, key=lambda q: abs(q[2] - x[0]))
        for lam in crandn(rng, 10):
            assert abs(t1_poly(p, x, lam) - (a * lam ** 2 + b * lam + c)) < 1e-9 * max(1, abs(t1_poly(p, x, lam)))


def test_t1_interpolates_nodes_and_asymptotics(rng):
    p = random_gl12(rng, 3)
    x = crandn(rng, 3)
    for a in range(3):
        assert np.isclose(t1_poly(p, x, p.xi[a]), x[a])
    k = np.diagonal(p.twist.matrix)
    strk = k[0] - k[1] - k[2]
    assert np.isclose(t1_poly(p, np.zeros(3), 0.4j), strk * np.prod(0.4j - p.xi))
    lam = 1e6 * np.exp(0.2j)
    assert abs(t1_poly(p, x, lam) / lam ** 3 - strk) < 1e-4


def test_tower_central_factor(rng):
    p = random_gl12(rng, 2)
    st = ScalarTower(p, crandn(rng, 2))
    for n in (2, 3):
        for b in range(2):
            for r in range(1, n):
                assert abs(st.t(n, p.xi[b] - r * p.eta)) < 1e-10


def test_tower_fusion_at_nodes(rng):
    p = random_gl12(rng, 2)
    x = crandn(rng, 2)
    st = ScalarTower(p, x)
    for a in range(2):
        assert np.isclose(st.t(2, p.xi[a]), x[a] * st.t(1, p.xi[a] + p.eta))


def test_level_two_asymptotic_constant(rng):
    p = random_gl12(rng, 2)
    k1, k2, k3 = np.diagonal(p.twist.matrix)
    st = ScalarTower(p, np.zeros(2))
    strk, strk2 = k1 - k2 - k3, k1 ** 2 - k2 ** 2 - k3 ** 2
    assert np.isclose(st.asymptotic(2), (k1 - k3) * (k1 - k2))
    assert np.isclose(st.asymptotic(2), (strk ** 2 + strk2) / 2)
    for n in (3, 4):
        assert np.isclose(st.asymptotic(n), k1 ** (n - 2) * (k1 - k3) * (k1 - k2))


def test_scalar_tower_matches_operator_tower(rng):
    p = random_gl12(rng, 2)
    xs, vecs = diag_spectrum(p)
    for x, v in zip(xs, vecs.T):
        assert fused_eigenvalue_residual(p, x, v, SAMPLES[:2], levels=(1, 2, 3)) < 1e-8


@pytest.mark.parametrize("kernel", [False, True])
def test_eigenvalues_pass_both_filters(kernel, rng):
    p = random_gl12(rng, 2, kernel)
    xs, _ = diag_spectrum(p)
    for x in xs:
        assert closure_residual(p, x, SAMPLES) < 1e-9
        assert null_out_residual(p, x, SAMPLES) < 1e-9


def test_random_values_fail_closure(rng):
    p = random_gl12(rng, 2)
    assert closure_residual(p, crandn(rng, 2), SAMPLES) > 1e-2
    assert null_out_residual(p, np.zeros(2), SAMPLES) < 1e-12


def test_kernel_twist_tower_vanishes_at_level_three(rng):
    p = random_gl12(rng, 2, kernel=True)
    assert is_kernel_twist(p)
    for lam in crandn(rng, 5):
        assert null_level_residual(p, lam) < 1e-10
        assert np.abs(TransferTower(p).column(3, lam)).max() < 1e-10


def test_diag_spectrum_pairs_node_eigenvalues(rng):
    from sovlab.chain import transfer_at_inhomogeneity

    p = random_gl12(rng, 2)
    xs, vecs = diag_spectrum(p)
    assert xs.shape == (9, 2)
    for x, v in zip(xs, vecs.T):
        for a in range(2):
            t = transfer_at_inhomogeneity(p, a)
            assert np.linalg.norm(t @ v - x[a] * v) < 1e-9 * np.linalg.norm(t, 2)


@pytest.mark.parametrize("method", ["homotopy", "newton"])
def test_solver_recovers_spectrum(method, rng):
    p = random_gl12(rng, 2)
    res = solve_spectrum(p, method, seed=1)
    assert res.complete and len(res.solutions) == 9
    pairs, worst = match_spectra(res.solutions, diag_spectrum(p)[0], 1e-7)
    assert len(pairs) == 9 and worst < 1e-7


def test_null_out_rejects_spurious_closure_roots(two_site_chain):
    res = solve_spectrum(two_site_chain, "homotopy", seed=0)
    spurious = res.info.get("null_rejected", [])
    assert res.rejected_null == len(spurious) >= 1
    checks = np.array([0.9 + 0.1j, -0.4 - 0.7j])
    for x in spurious:
        assert closure_residual(two_site_chain, x, checks) < 1e-8
        assert null_out_residual(two_site_chain, x, checks) > 1e-3


def test_cubic_and_quartic_agree_for_kernel_twist(kernel_chain):
    cubic = solve_spectrum(kernel_chain, "cubic", seed=0)
    quartic = solve_spectrum(kernel_chain, "homotopy", seed=0)
    diag = diag_spectrum(kernel_chain)[0]
    assert len(cubic.solutions) == len(quartic.solutions) == 9
    for sol in (cubic.solutions, quartic.solutions):
        pairs, worst = match_spectra(sol, diag, 1e-8)
        assert len(pairs) == 9
    # the kernel twist keeps x = 0 because it is a genuine eigenvalue
    assert any(np.all(np.abs(x) < 1e-10) for x in cubic.solutions)


def test_cubic_needs_kernel_twist(two_site_chain):
    with pytest.raises(ArgumentError):
        solve_spectrum(two_site_chain, "cubic")
    with pytest.raises(ArgumentError):
        solve_spectrum(two_site_chain, "bisection")


def test_diag_method(two_site_chain):
    res = solve_spectrum(two_site_chain, "diag")
    assert len(res.solutions) == 9


def test_requires_gl12(rng):
    sig = GradingSignature(2, 1)
    p = make_params(sig, 0.7, crandn(rng, 1), diagonal_twist(sig, crandn(rng, 3)))
    with pytest.raises(Exception):
        solve_spectrum(p, "homotopy")


def test_newton_starts_depend_only_on_index():
    a = ball_starts(2, 10, 3.0, seed=5)
    b = ball_starts(2, 25, 3.0, seed=5)
    assert np.array_equal(a, b[:10])
    assert np.all(np.linalg.norm(b, axis=1) <= 3.0 + 1e-12)


def test_solver_is_deterministic(two_site_chain):
    a = solve_spectrum(two_site_chain, "newton", seed=3).solutions
    b = solve_spectrum(two_site_chain, "newton", seed=3).solutions
    assert np.array_equal(a, b)
