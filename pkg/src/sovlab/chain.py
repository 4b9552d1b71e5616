"""Inhomogeneous gl(M|N) fundamental chain with a twist.

Site 0 is the auxiliary space of the monodromy; quantum sites sit at
positions ``1 .. N`` of the ``N + 1`` site space. Inhomogeneities are a
0-based array, so ``xi[n]`` belongs to quantum site ``n``.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import graded
from .errors import ArgumentError, ParameterError, StructureError
from .graded import GradingSignature

JORDAN_COND = 1e10


@dataclass(frozen=True)
class TwistMatrix:
    """Even twist with cached spectral data.

    ``eigenvalues`` lists the even block first, then the odd block, so
    for gl(1|2) and a diagonalizable twist they read ``(k1, k2, k3)``.
    """

    sig: GradingSignature
    matrix: np.ndarray
    eigenvalues: np.ndarray
    diagonalizable: bool
    simple: bool
    invertible: bool
    similarity: Optional[np.ndarray] = field(default=None, repr=False)
    similarity_inv: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def even_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.sig.m]

    @property
    def odd_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.sig.m:]

    @property
    def jordan(self) -> np.ndarray:
        if not self.diagonalizable:
            raise StructureError("twist is not diagonalizable")
        return np.diag(self.eigenvalues)


def _block_eig(block):
    if block.shape[0] == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex), True
    vals, vecs = np.linalg.eig(block)
    ok = np.linalg.cond(vecs) < JORDAN_COND
    return vals, vecs, ok


def validate_twist(sig: GradingSignature, matrix, tol: float = 1e-12) -> TwistMatrix:
    k = np.array(matrix, dtype=complex)
    d = sig.dim
    if k.shape != (d, d):
        raise StructureError(f"twist must be {d}x{d}, got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise StructureError("twist has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(k))))
    if not graded.is_even(sig, k, tol * scale):
        raise StructureError("twist has nonzero off-diagonal blocks")
    m = sig.m
    k[:m, m:] = 0.0
    k[m:, :m] = 0.0
    ev, wv, ok_even = _block_eig(k[:m, :m])
    od, wo, ok_odd = _block_eig(k[m:, m:])
    vals = np.concatenate([ev, od])
    diagonalizable = bool(ok_even and ok_odd)
    gaps = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(gaps, np.inf)
    simple = bool(diagonalizable and np.all(gaps > 1e-10 * scale))
    invertible = bool(np.all(np.abs(vals) > 1e-14 * scale))
    w = w_inv = None
    if diagonalizable:
        w = np.zeros((d, d), dtype=complex)
        w[:m, :m] = wv
        w[m:, m:] = wo
        w_inv = np.linalg.inv(w)
    return TwistMatrix(sig, k, vals, diagonalizable, simple, invertible, w, w_inv)


def diagonal_twist(sig: GradingSignature, values) -> TwistMatrix:
    return validate_twist(sig, np.diag(np.asarray(values, dtype=complex)))


@dataclass(frozen=True)
class ChainParams:
    sig: GradingSignature
    eta: complex
    xi: np.ndarray
    twist: TwistMatrix

    @property
    def sites(self) -> int:
        return len(self.xi)

    @property
    def dim(self) -> int:
        return self.sig.dim


def default_window(sig: GradingSignature) -> int:
    return 2 * (sig.m + sig.n + 2)


def make_params(sig: GradingSignature, eta, xi, twist, window: Optional[int] = None, tol: float = 1e-8) -> ChainParams:
    """Validate and bundle chain parameters.

    Rejects ``eta == 0`` and pairs of inhomogeneities whose difference is
    an integer multiple of ``eta`` with ``|k| <= window``; the default
    window covers every fused level the package builds.
    """
    eta = complex(eta)
    if eta == 0 or not np.isfinite(eta):
        raise ParameterError("eta must be finite and nonzero")
    xi = np.atleast_1d(np.array(xi, dtype=complex))
    if xi.ndim != 1 or len(xi) < 1:
        raise ParameterError("need at least one inhomogeneity")
    if not np.all(np.isfinite(xi)):
        raise ParameterError("inhomogeneities must be finite")
    if not isinstance(twist, TwistMatrix):
        twist = validate_twist(sig, twist)
    elif twist.sig != sig:
        raise ArgumentError("twist grading does not match the chain")
    window = default_window(sig) if window is None else window
    for a in range(len(xi)):
        for b in range(a + 1, len(xi)):
            for k in range(-window, window + 1):
                if abs(xi[a] - xi[b] - k * eta) <= tol * abs(eta):
                    raise ParameterError(
                        f"xi[{a}] - xi[{b}] = {k} * eta: inhomogeneities are not generic"
                    )
    return ChainParams(sig, eta, xi, twist)


def central_d(params: ChainParams, lam) -> complex:
    return complex(np.prod(lam - params.xi))


def r_matrix(sig: GradingSignature, lam, mu, eta) -> np.ndarray:
    """Rational R-matrix ``(lam - mu) I + eta P`` on two sites."""
    d = sig.dim
    return (lam - mu) * np.eye(d * d, dtype=complex) + eta * graded.graded_permutation(sig, 2, 0, 1)


def apply_r(sig, sites, a, b, spectral, eta, x):
    """``x -> R_ab(spectral) x`` with R on sites ``a``, ``b`` of a ``sites`` space."""
    return spectral * x + eta * graded.apply_swap(sig, sites, a, b, x)


def monodromy(params: ChainParams, lam, aux: int = 0, sites: Optional[int] = None, first_quantum: Optional[int] = None, x=None) -> np.ndarray:
    """Monodromy ``K_0 R_{0N}(lam - xi_N) ... R_{01}(lam - xi_1)``.

    With the optional arguments the same product is applied on the left
    of ``x`` inside a larger space, with the auxiliary at position
    ``aux`` and the quantum sites starting at ``first_quantum``; the fused
    constructions use this to stack several auxiliary copies.
    """
    sig = params.sig
    n = params.sites
    if sites is None:
        sites = n + 1
        first_quantum = 1
    if x is None:
        x = np.eye(graded.check_capacity(sig.dim, sites), dtype=complex)
    for q in range(n):
        x = apply_r(sig, sites, aux, first_quantum + q, lam - params.xi[q], params.eta, x)
    return graded.apply_local(sig, sites, aux, params.twist.matrix, x)


def transfer(params: ChainParams, lam) -> np.ndarray:
    lam = complex(lam)
    return graded.partial_supertrace0(params.sig, monodromy(params, lam), params.sites + 1)


def transfer_at_inhomogeneity(params: ChainParams, n: int) -> np.ndarray:
    """Transfer matrix at ``xi[n]`` as a product of quantum-space R-matrices.

    The auxiliary flip produced by ``R(0) = eta P`` leaves the overall
    factor ``eta`` in front.
    """
    sig, xi, eta = params.sig, params.xi, params.eta
    size = params.sites
    if not 0 <= n < size:
        raise ArgumentError(f"site {n} outside 0..{size - 1}")
    x = np.eye(graded.check_capacity(sig.dim, size), dtype=complex)
    for q in range(n + 1, size):
        x = apply_r(sig, size, n, q, xi[n] - xi[q], eta, x)
    x = graded.apply_local(sig, size, n, params.twist.matrix, x)
    for q in range(n):
        x = apply_r(sig, size, n, q, xi[n] - xi[q], eta, x)
    return eta * x


def ybe_residual(sig: GradingSignature, lam, mu, eta) -> float:
    """``R12(l-m) R13(l) R23(m) - R23(m) R13(l) R12(l-m)`` relative to its terms."""
    size = sig.dim ** 3

    def r(a, b, s, x):
        return apply_r(sig, 3, a, b, s, eta, x)

    eye = np.eye(size, dtype=complex)
    lhs = r(0, 1, lam - mu, r(0, 2, lam, r(1, 2, mu, eye)))
    rhs = r(1, 2, mu, r(0, 2, lam, r(0, 1, lam - mu, eye)))
    scale = max(1.0, np.abs(lhs).max(), np.abs(rhs).max())
    return float(np.abs(lhs - rhs).max() / scale)


def scalar_ybe_residual(sig: GradingSignature, twist: np.ndarray, lam, eta) -> float:
    r = r_matrix(sig, lam, 0.0, eta)
    kk = np.kron(twist, twist)
    scale = max(1.0, np.abs(r).max() * np.abs(kk).max())
    return float(np.abs(r @ kk - kk @ r).max() / scale)
