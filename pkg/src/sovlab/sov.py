"""Separated-variable covector basis for twisted gl(M|N) chains.

Covectors are ``<S| prod_n T(xi_n)^{h_n}`` for ``h`` in ``{0..d-1}^N``,
stored as rows in the order of :func:`sovlab.graded.digits_to_linear`.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import graded
from .chain import ChainParams, TwistMatrix, transfer_at_inhomogeneity
from .errors import ArgumentError, BasisError, StructureError


@dataclass
class SovBasis:
    rows: np.ndarray
    labels: List[tuple]
    singular_values: np.ndarray

    @property
    def rank_ratio(self) -> float:
        s = self.singular_values
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0

    @property
    def log_abs_det(self) -> float:
        return float(np.sum(np.log(self.singular_values)))


def default_source(twist: TwistMatrix, sites: int, rng: Optional[np.random.Generator] = None) -> List[np.ndarray]:
    """One-site states whose rotated components are all one.

    With a generator, or for a twist without eigenbasis, random states
    are drawn instead.
    """
    d = twist.sig.dim
    if rng is None and twist.diagonalizable:
        row = np.ones(d) @ twist.similarity
        return [np.conj(row) for _ in range(sites)]
    rng = rng if rng is not None else np.random.default_rng(0)
    return [rng.normal(size=d) + 1j * rng.normal(size=d) for _ in range(sites)]


def _as_states(source) -> List[np.ndarray]:
    if isinstance(source, np.ndarray) and source.ndim == 1:
        raise ArgumentError("source must be given as a list of one-site states, not a flat covector")
    states = [np.asarray(s, dtype=complex) for s in source]
    if any(s.ndim != 1 for s in states):
        raise ArgumentError("each one-site state must be a 1-d array")
    return states


def rotated_components(twist: TwistMatrix, source) -> np.ndarray:
    """Rows ``<S,a| W^{-1}`` for every site, one row per site."""
    if not twist.diagonalizable:
        raise StructureError("rotated components need a diagonalizable twist")
    states = _as_states(source)
    return np.array([np.conj(s) @ twist.similarity_inv for s in states])


def nonvanishing_condition(twist: TwistMatrix, source, tol: float = 1e-12) -> bool:
    """Every rotated component nonzero (eigenvalue blocks are all 1x1 here)."""
    comps = rotated_components(twist, source)
    scale = max(1.0, float(np.abs(comps).max()))
    return bool(np.all(np.abs(comps) > tol * scale))


def factorized_criterion(twist: TwistMatrix, source) -> complex:
    """``prod_a det(<S,a| K^i |e_j>)`` over sites, with ``i, j`` in ``0..d-1``."""
    states = _as_states(source)
    k = twist.matrix
    d = twist.sig.dim
    out = 1.0 + 0j
    for s in states:
        if s.shape != (d,):
            raise ArgumentError(f"one-site states must have length {d}")
        rows = [np.conj(s)]
        for _ in range(d - 1):
            rows.append(rows[-1] @ k)
        out *= np.linalg.det(np.array(rows))
    return complex(out)


def sov_covectors(params: ChainParams, source=None, rank_tol: Optional[float] = 1e-8) -> SovBasis:
    """Build the covector family and certify its rank.

    Raises :class:`BasisError` when ``sigma_min / sigma_max`` is not above
    ``rank_tol``; pass ``rank_tol=None`` to skip the certificate.
    """
    sig = params.sig
    d, n = sig.dim, params.sites
    states = default_source(params.twist, n) if source is None else _as_states(source)
    if len(states) != n:
        raise ArgumentError(f"need {n} one-site states, got {len(states)}")
    graded.check_capacity(d, n)
    start = graded.dual_covector(sig, states)
    mats = [transfer_at_inhomogeneity(params, a) for a in range(n)]
    powers = []
    for m in mats:
        p = [np.eye(m.shape[0], dtype=complex)]
        for _ in range(d - 1):
            p.append(p[-1] @ m)
        powers.append(p)
    labels = [graded.linear_to_digits(i, d, n) for i in range(d ** n)]
    rows = np.empty((d ** n, d ** n), dtype=complex)
    for i, h in enumerate(labels):
        r = start
        for a, e in enumerate(h):
            r = r @ powers[a][e]
        rows[i] = r
    sv = np.linalg.svd(rows, compute_uv=False)
    basis = SovBasis(rows, labels, sv)
    if rank_tol is not None and not basis.rank_ratio > rank_tol:
        raise BasisError(f"SoV covectors are not a basis: sigma_min/sigma_max = {basis.rank_ratio:.3e}")
    return basis


def sov_wavefunction(x: Sequence[complex], labels: Sequence[tuple]) -> np.ndarray:
    """``prod_a x_a^{h_a}`` for every label ``h``."""
    x = np.asarray(x, dtype=complex)
    return np.array([np.prod(x ** np.asarray(h)) for h in labels])


def reconstruct_eigenvector(basis: SovBasis, x: Sequence[complex]) -> np.ndarray:
    """Solve ``<h|t> = prod x^h`` for ``|t>`` and normalise it."""
    w = sov_wavefunction(x, basis.labels)
    v = np.linalg.solve(basis.rows, w)
    return v / np.linalg.norm(v)


def eigenvector_residual(op: np.ndarray, v: np.ndarray, value: complex) -> float:
    scale = max(1.0, float(np.linalg.norm(op, 2)))
    return float(np.linalg.norm(op @ v - value * v) / (scale * np.linalg.norm(v)))


def left_right_overlaps(op: np.ndarray) -> np.ndarray:
    """Normalised ``|<t|t>|`` for matched left and right eigenvectors of ``op``."""
    import scipy.linalg

    vals, left, right = scipy.linalg.eig(op, left=True, right=True)
    out = np.empty(len(vals))
    for i in range(len(vals)):
        l, r = left[:, i], right[:, i]
        out[i] = abs(np.vdot(l, r)) / (np.linalg.norm(l) * np.linalg.norm(r))
    return out
