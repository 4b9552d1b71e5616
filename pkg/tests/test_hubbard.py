import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sovlab.errors import ArgumentError, BasisError, CapacityError, EvaluationError, StructureError
from sovlab.hubbard import (
    SHIFTED,
    embed_qubits,
    embed_sites,
    family_is_simple,
    h_of,
    hubbard_sov_rank,
    hubbard_transfer,
    large_lambda_profile,
    lax,
    make_hubbard,
    node_identity_residual,
    commutator_residual,
    partial_transpose,
    shastry_checks,
    shastry_r,
    site_swap,
    twist_family,
    unitarity_scalar,
    xx_r,
)

from conftest import crandn

ETA = -1.6j
SMALL = st.complex_numbers(max_magnitude=0.8, allow_nan=False, allow_infinity=False)


def small(rng, n):
    return 0.4 * crandn(rng, n)


def test_h_at_zero_and_free_coupling():
    assert h_of(0.0, ETA) == 0
    assert h_of(0.7 + 0.1j, 0.0) == 0
    assert np.isclose(h_of(0.7, 0.0, SHIFTED), 0.5j * np.pi)


@given(SMALL, SMALL)
def test_h_solves_its_defining_relation(lam, eta):
    for branch in ("principal", SHIFTED):
        h = h_of(lam, eta, branch)
        assert abs(np.sinh(2 * h) - 0.5j * eta * np.sin(2 * lam)) < 1e-12


def test_unknown_branch():
    with pytest.raises(ArgumentError):
        h_of(0.3, ETA, "other")


def test_coincident_points_give_site_swap(rng):
    for lam in small(rng, 10):
        assert np.abs(shastry_r(lam, lam, ETA) - site_swap()).max() < 1e-12


def test_free_coupling_factorizes(rng):
    lam, mu = small(rng, 2)
    r13 = embed_qubits(xx_r(lam - mu), [0, 2], 4)
    r24 = embed_qubits(xx_r(lam - mu), [1, 3], 4)
    assert np.abs(shastry_r(lam, mu, 0.0) - r13 @ r24).max() < 1e-12


def test_zero_spectral_point_gives_lax(rng):
    lam = small(rng, 1)[0]
    h = h_of(lam, ETA)
    assert np.allclose(shastry_r(lam, 0.0, ETA), lax(lam, ETA) / np.cosh(h), atol=1e-12)


def test_pole_is_an_evaluation_error():
    with pytest.raises(EvaluationError):
        shastry_r(0.3 + 0.1j, -0.3 - 0.1j, ETA)


def test_inconsistent_h_pair_is_refused():
    with pytest.raises(EvaluationError):
        shastry_r(0.3, 0.2, ETA, h_pair=(0.1, 0.2))


def test_shastry_properties_at_random_triples(rng):
    for _ in range(10):
        lam, mu, xi = small(rng, 3)
        rep = shastry_checks(lam, mu, xi, ETA)
        assert rep.coincident < 1e-12
        assert rep.ybe < 1e-10
        assert rep.unitarity < 1e-10
        assert rep.lax_limit < 1e-10
        assert max(rep.crossing_aux, rep.crossing_quantum) < 1e-8


def test_shifted_branch_keeps_properties(rng):
    lam, mu, xi = small(rng, 3)
    rep = shastry_checks(lam, mu, xi, ETA, branch=SHIFTED)
    assert rep.ybe < 1e-10 and rep.unitarity < 1e-10


def test_unitarity_scalar_at_coincidence():
    assert np.isclose(unitarity_scalar(0.4, 0.4, ETA), 1.0)
    r = shastry_r(0.4, 0.4, ETA)
    p = site_swap()
    assert np.allclose(r @ p @ r @ p, np.eye(16))


@pytest.mark.parametrize("family", [1, 2, 3, 4])
def test_twists_are_symmetries(family, rng):
    k = twist_family(family, *crandn(rng, 3))
    kk = np.kron(k, k)
    lam, mu = small(rng, 2)
    r = shastry_r(lam, mu, ETA)
    assert np.abs(kk @ r - r @ kk).max() < 1e-10 * np.abs(kk).max()


def test_twist_family_shapes():
    k = twist_family(1, 2.0, 3.0, 5.0)
    assert np.allclose(np.diagonal(k), [2, 3, 5, 7.5])
    k4 = twist_family(4, 2.0, 3.0, 5.0)
    assert np.allclose(np.sort(np.linalg.eigvals(k4).real), [-np.sqrt(15)] * 2 + [np.sqrt(15)] * 2)
    with pytest.raises(ArgumentError):
        twist_family(5, 1, 1, 1)
    with pytest.raises(ArgumentError):
        twist_family(1, 0, 1, 1)


def test_simplicity_flags():
    assert family_is_simple(1, 1.0, 2.0, 3.0)
    assert not family_is_simple(1, 2.0, 2.0, 3.0)
    assert not family_is_simple(1, 1.0, 2.0, 0.5)  # beta gamma / alpha = alpha
    assert family_is_simple(2, 1.0, 2.0, 3.0)
    assert not family_is_simple(2, 1.0, 1.0, 1.0)
    assert family_is_simple(3, 1.0, 2.0, 3.0)
    assert not family_is_simple(3, 1.0, 2.0, 2.0)
    assert not family_is_simple(3, 1.0, 0.0, 2.0)
    assert not family_is_simple(4, 1.0, 2.0, 3.0)


def hubbard(rng, sites, family=1):
    return make_hubbard(ETA, small(rng, sites), family, *(crandn(rng, 3)))


@pytest.mark.parametrize("family", [1, 2, 3])
def test_transfer_commutes_and_matches_node_product(family, rng):
    p = hubbard(rng, 2, family)
    lam, mu = small(rng, 2)
    assert commutator_residual(p, lam, mu) < 1e-9
    for n in range(2):
        assert node_identity_residual(p, n) < 1e-9


def test_single_site_transfer_at_node_is_twist(rng):
    p = hubbard(rng, 1)
    assert np.allclose(hubbard_transfer(p, p.xi[0]), p.twist)


def test_large_lambda_limit_is_diagonal_constant(rng):
    mu = small(rng, 1)[0]
    a = large_lambda_profile(mu, depth=25.0)
    b = large_lambda_profile(mu, depth=30.0)
    assert np.abs(a - b).max() < 1e-9
    assert np.abs(a - np.diag(np.diagonal(a))).max() < 1e-9
    # not a multiple of the identity: the diagonal takes more than one value
    assert np.abs(np.diagonal(a) - a[0, 0]).max() > 0.1


@pytest.mark.parametrize("family", [1, 2, 3])
def test_sov_rank_random_draws(family):
    rng = np.random.default_rng([7, family])
    for sites in (1, 2):
        for _ in range(3):
            p = hubbard(rng, sites, family)
            basis = hubbard_sov_rank(p)
            assert basis.rows.shape == (4 ** sites, 4 ** sites)
            assert basis.rank_ratio > 1e-8


def test_sov_rank_with_overlap_probe(rng):
    p = hubbard(rng, 1, 3)
    basis = hubbard_sov_rank(p, xyzw=[1, 2, -1, 0.5j], probe=0.3 + 0.1j)
    assert np.all(np.abs(basis.overlaps) > 1e-10)


def test_degenerate_twists_rejected(rng):
    with pytest.raises(StructureError, match="degenerate"):
        hubbard_sov_rank(hubbard(rng, 1, 4))
    p = make_hubbard(ETA, [0.2], 1, 1.0, 1.0, 2.0)
    with pytest.raises(StructureError):
        hubbard_sov_rank(p)


def test_zero_source_component(rng):
    with pytest.raises(ArgumentError):
        hubbard_sov_rank(hubbard(rng, 1), xyzw=[1, 0, 1, 1])


def test_param_guards():
    with pytest.raises(CapacityError):
        make_hubbard(ETA, np.arange(5) * 0.1 + 0.05, 1, 1, 2, 3)
    with pytest.raises(ArgumentError):
        make_hubbard(ETA, [0.2, 0.2 + np.pi], 1, 1, 2, 3)
    with pytest.raises(ArgumentError):
        make_hubbard(ETA, [], 1, 1, 2, 3)


def test_embedding_helpers(rng):
    a = crandn(rng, 16).reshape(4, 4)
    assert np.allclose(embed_sites(a, [0], 1), a)
    assert np.allclose(embed_sites(a, [1], 2), np.kron(a, np.eye(4)))
    b = crandn(rng, 256).reshape(16, 16)
    assert np.allclose(partial_transpose(partial_transpose(b, 0), 0), b)
    assert np.allclose(partial_transpose(partial_transpose(b, 1), 0), b.T)
