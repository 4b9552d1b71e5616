import numpy as np
import pytest

from sovlab.chain import diagonal_twist, make_params, transfer, validate_twist
from sovlab.errors import ArgumentError, BasisError, CapacityError
from sovlab.gl12 import diag_spectrum, t1_poly
from sovlab.graded import linear_to_digits
from sovlab.sov import (
    default_source,
    eigenvector_residual,
    factorized_criterion,
    left_right_overlaps,
    nonvanishing_condition,
    reconstruct_eigenvector,
    sov_covectors,
    sov_wavefunction,
)

from conftest import GL12, crandn

PROBES = [0.37 - 0.21j, -0.83 + 0.44j, 1.21 + 0.73j]


def chain(rng, sites, k=None):
    k = crandn(rng, 3) if k is None else k
    return make_params(GL12, 0.7 + 0.2j, crandn(rng, sites), diagonal_twist(GL12, k))


def test_default_source_condition(rng):
    tw = diagonal_twist(GL12, crandn(rng, 3))
    src = default_source(tw, 2)
    assert nonvanishing_condition(tw, src)
    assert np.allclose(src[0], np.ones(3))
    bad = [np.array([0.0, 1.0, 1.0]), np.ones(3)]
    assert not nonvanishing_condition(tw, bad)
    assert nonvanishing_condition(tw, [crandn(rng, 3) for _ in range(3)])


def test_criterion_is_vandermonde():
    k = np.array([1.3, -0.8 + 0.5j, 2.1j])
    tw = diagonal_twist(GL12, k)
    # rows <S| K^i with <S| = (1,1,1): det = prod_{i<j} (k_j - k_i)
    vdm = (k[1] - k[0]) * (k[2] - k[0]) * (k[2] - k[1])
    assert np.isclose(factorized_criterion(tw, [np.ones(3)]), vdm)
    assert np.isclose(factorized_criterion(tw, [np.ones(3)] * 2), vdm ** 2)
    assert factorized_criterion(diagonal_twist(GL12, [1.0, 2.0, 2.0]), [np.ones(3)]) == 0
    assert factorized_criterion(tw, [np.array([0.0, 1.0, 1.0])]) == 0
    with pytest.raises(ArgumentError):
        factorized_criterion(tw, np.ones(3))


@pytest.mark.parametrize("kernel", [False, True])
def test_basis_rank_two_sites(kernel, rng):
    k = crandn(rng, 3)
    if kernel:
        k[0] = 0
    basis = sov_covectors(chain(rng, 2, k))
    assert basis.rank_ratio > 1e-8
    assert basis.rows.shape == (9, 9)


def test_rows_follow_definition(rng):
    from sovlab.chain import transfer_at_inhomogeneity

    p = chain(rng, 3)
    basis = sov_covectors(p)
    nodes = [transfer_at_inhomogeneity(p, a) for a in range(3)]
    for i in rng.choice(27, size=5, replace=False):
        h = basis.labels[i]
        row = basis.rows[0]
        for a, e in enumerate(h):
            row = row @ np.linalg.matrix_power(nodes[a], e)
        assert np.allclose(row, basis.rows[i], atol=1e-10 * np.abs(row).max())
    assert basis.labels[0] == (0, 0, 0)


def test_degenerate_twist_fails(rng):
    k = crandn(rng, 3)
    k[2] = k[1]
    p = chain(rng, 2, k)
    with pytest.raises(BasisError):
        sov_covectors(p, [crandn(rng, 3) for _ in range(2)])


def test_capacity_guard(rng):
    p = chain(rng, 8)
    with pytest.raises(CapacityError):
        sov_covectors(p)


def test_wavefunction_examples():
    labels = [linear_to_digits(i, 3, 2) for i in range(9)]
    assert np.allclose(sov_wavefunction([1, 1], labels), np.ones(9))
    w = sov_wavefunction([0.0, 2.0], labels)
    for h, v in zip(labels, w):
        assert (v == 0) == (h[0] >= 1)


def test_eigenvectors_from_diagonalization(rng):
    p = chain(rng, 2)
    basis = sov_covectors(p)
    xs, vecs = diag_spectrum(p)
    for x, v in zip(xs, vecs.T):
        t = reconstruct_eigenvector(basis, x)
        for lam in PROBES:
            assert eigenvector_residual(transfer(p, lam), t, t1_poly(p, x, lam)) < 1e-7
        coords = basis.rows @ v
        w = sov_wavefunction(x, basis.labels)
        a, b = coords / np.linalg.norm(coords), w / np.linalg.norm(w)
        assert np.linalg.norm(a - np.vdot(b, a) * b) < 1e-7


def test_random_values_are_not_eigenvalues(rng):
    p = chain(rng, 2)
    basis = sov_covectors(p)
    x = crandn(rng, 2)
    t = reconstruct_eigenvector(basis, x)
    assert eigenvector_residual(transfer(p, PROBES[0]), t, t1_poly(p, x, PROBES[0])) > 1e-3


def test_spectrum_is_simple_and_non_orthogonal(rng):
    p = chain(rng, 2)
    ev = np.linalg.eigvals(transfer(p, PROBES[1]))
    gaps = np.abs(ev[:, None] - ev[None, :]) + np.eye(9)
    assert gaps.min() > 1e-8
    assert left_right_overlaps(transfer(p, PROBES[1])).min() > 1e-8


def test_common_shift_of_inhomogeneities(rng):
    p = chain(rng, 2)
    shifted = make_params(GL12, p.eta, p.xi + 0.9 - 0.4j, p.twist)
    a, b = sov_covectors(p), sov_covectors(shifted)
    assert abs(a.rank_ratio / b.rank_ratio - 1) < 0.1


def test_non_diagonal_twist_basis(rng):
    w = np.eye(3, dtype=complex)
    w[1:, 1:] = crandn(rng, 2, 2)
    k = w @ np.diag(crandn(rng, 3)) @ np.linalg.inv(w)
    p = make_params(GL12, 0.7 + 0.2j, crandn(rng, 2), validate_twist(GL12, k))
    assert nonvanishing_condition(p.twist, default_source(p.twist, 2))
    assert sov_covectors(p).rank_ratio > 1e-8
