"""Graded tensor calculus on (C^(m|n))^{⊗s}.

Conventions used throughout the package:

* basis vectors are indexed ``0 .. d-1`` with ``d = m + n``; indices below
  ``m`` are even, the rest odd;
* a product state on ``s`` sites is stored at linear index
  ``sum(k[a] * d**a)``, so site 0 is the least significant digit;
* operators are dense complex ``ndarray`` of shape ``(d**s, d**s)`` acting
  on column vectors, covectors are 1-d rows paired by plain contraction.

Odd operators pick up the Koszul sign of every odd vector they pass on
their left. Even operators embed without signs, which is what the chain
and fusion code rely on.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ArgumentError, CapacityError

MAX_DIM = 4096


@dataclass(frozen=True)
class GradingSignature:
    """Numbers of even (``m``) and odd (``n``) basis vectors."""

    m: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and isinstance(self.n, (int, np.integer))):
            raise ArgumentError("grading counts must be integers")
        if self.m < 0 or self.n < 0 or self.m + self.n < 1:
            raise ArgumentError(f"invalid grading ({self.m}|{self.n})")

    @property
    def dim(self) -> int:
        return self.m + self.n

    @property
    def parities(self) -> np.ndarray:
        p = np.zeros(self.dim, dtype=np.int64)
        p[self.m:] = 1
        return p

    def parity(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise ArgumentError(f"basis index {i} outside 0..{self.dim - 1}")
        return int(i >= self.m)

    def __str__(self):
        return f"({self.m}|{self.n})"


def check_capacity(d: int, sites: int) -> int:
    if sites < 1:
        raise ArgumentError("need at least one site")
    size = d ** sites
    if size > MAX_DIM:
        raise CapacityError(f"{d}^{sites} = {size} exceeds the dense cap {MAX_DIM}")
    return size


def digits_to_linear(digits: Sequence[int], d: int) -> int:
    """Linear index of a product state; ``digits[0]`` is site 0."""
    idx = 0
    for a in reversed(range(len(digits))):
        k = int(digits[a])
        if not 0 <= k < d:
            raise ArgumentError(f"digit {k} outside 0..{d - 1}")
        idx = idx * d + k
    return idx


def linear_to_digits(idx: int, d: int, sites: int) -> tuple:
    if not 0 <= idx < d ** sites:
        raise ArgumentError(f"linear index {idx} outside 0..{d ** sites - 1}")
    out = []
    for _ in range(sites):
        idx, k = divmod(idx, d)
        out.append(k)
    return tuple(out)


@lru_cache(maxsize=64)
def basis_digits(d: int, sites: int) -> np.ndarray:
    """Array of shape ``(d**sites, sites)``; row ``k`` holds the digits of state ``k``."""
    idx = np.arange(d ** sites)
    digits = np.empty((d ** sites, sites), dtype=np.int64)
    for a in range(sites):
        idx, digits[:, a] = np.divmod(idx, d)
    digits.setflags(write=False)
    return digits


def _site_parities(sig: GradingSignature, sites: int) -> np.ndarray:
    return sig.parities[basis_digits(sig.dim, sites)]


def embed_elementary(sig: GradingSignature, sites: int, a: int, i: int, j: int) -> np.ndarray:
    """Matrix of the unit ``e^j_i`` (``v_j -> v_i``) placed at site ``a``."""
    d = sig.dim
    size = check_capacity(d, sites)
    if not 0 <= a < sites:
        raise ArgumentError(f"site {a} outside 0..{sites - 1}")
    pi, pj = sig.parity(i), sig.parity(j)
    digits = basis_digits(d, sites)
    src = np.nonzero(digits[:, a] == j)[0]
    dst = src + (i - j) * d ** a
    left = _site_parities(sig, sites)[src, :a].sum(axis=1)
    out = np.zeros((size, size), dtype=complex)
    out[dst, src] = np.where(((pi + pj) * left) % 2, -1.0, 1.0)
    return out


def graded_permutation(sig: GradingSignature, sites: int, a: int, b: int) -> np.ndarray:
    """Graded flip of sites ``a`` and ``b`` assembled from embedded units."""
    if a == b:
        raise ArgumentError("graded permutation needs two distinct sites")
    a, b = min(a, b), max(a, b)
    d = sig.dim
    size = check_capacity(d, sites)
    out = np.zeros((size, size), dtype=complex)
    for alpha in range(d):
        for beta in range(d):
            sign = -1.0 if sig.parity(beta) else 1.0
            out += sign * embed_elementary(sig, sites, a, alpha, beta) @ embed_elementary(
                sig, sites, b, beta, alpha
            )
    return out


@lru_cache(maxsize=256)
def swap_table(m: int, n: int, sites: int, a: int, b: int):
    """Signed permutation realising the graded flip of sites ``a``, ``b``.

    Returns ``(perm, sign)`` with ``(P @ X) == sign[:, None] * X[perm]``.
    """
    from ._kernels import graded_swap_table

    if a == b:
        raise ArgumentError("graded permutation needs two distinct sites")
    sig = GradingSignature(m, n)
    check_capacity(sig.dim, sites)
    a, b = min(a, b), max(a, b)
    if b >= sites:
        raise ArgumentError(f"site {b} outside 0..{sites - 1}")
    perm, sign = graded_swap_table(sig.dim, m, sites, a, b)
    perm.setflags(write=False)
    sign.setflags(write=False)
    return perm, sign


def apply_swap(sig: GradingSignature, sites: int, a: int, b: int, x: np.ndarray) -> np.ndarray:
    """Left-multiply ``x`` (vector or matrix) by the graded flip of ``a``, ``b``."""
    perm, sign = swap_table(sig.m, sig.n, sites, a, b)
    if x.ndim == 1:
        return sign * x[perm]
    return sign[:, None] * x[perm]


def is_even(sig: GradingSignature, op: np.ndarray, tol: float = 0.0) -> bool:
    p = sig.parities
    mixed = p[:, None] != p[None, :]
    return bool(np.all(np.abs(op[mixed]) <= tol))


def apply_local(sig: GradingSignature, sites: int, a: int, op: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Left-multiply ``x`` by the even one-site operator ``op`` placed at site ``a``."""
    d = sig.dim
    if op.shape != (d, d):
        raise ArgumentError(f"one-site operator must be {d}x{d}")
    if not is_even(sig, op):
        raise ArgumentError("apply_local only embeds even operators; use embed_elementary")
    cols = x.shape[1] if x.ndim == 2 else 1
    t = x.reshape(d ** (sites - a - 1), d, d ** a, cols)
    t = np.einsum("ij,ajbc->aibc", op, t)
    return t.reshape(x.shape)


def embed_local(sig: GradingSignature, sites: int, a: int, op: np.ndarray) -> np.ndarray:
    size = check_capacity(sig.dim, sites)
    return apply_local(sig, sites, a, op, np.eye(size, dtype=complex))


def supertrace(sig: GradingSignature, op: np.ndarray) -> complex:
    p = sig.parities
    return complex(np.sum(np.where(p, -1.0, 1.0) * np.diagonal(op)))


def partial_supertrace(sig: GradingSignature, op: np.ndarray, sites: int, traced: int = 1) -> np.ndarray:
    """Supertrace over the ``traced`` least significant sites of an even operator."""
    d = sig.dim
    if not 0 < traced <= sites:
        raise ArgumentError("traced sites must be between 1 and the number of sites")
    inner = d ** traced
    outer = d ** (sites - traced)
    if op.shape != (inner * outer, inner * outer):
        raise ArgumentError("operator shape does not match the site count")
    weights = np.where(_site_parities(sig, traced).sum(axis=1) % 2, -1.0, 1.0)
    t = op.reshape(outer, inner, outer, inner)
    return np.einsum("i,kili->kl", weights, t)


def partial_supertrace0(sig: GradingSignature, op: np.ndarray, sites: int) -> np.ndarray:
    return partial_supertrace(sig, op, sites, 1)


def graded_commutator(a: np.ndarray, b: np.ndarray, pa: int, pb: int) -> np.ndarray:
    return a @ b - (-1) ** (pa * pb) * (b @ a)


def dual_sign(sig: GradingSignature, digits: Sequence[int]) -> int:
    """Sign attached to the dual of a product basis vector."""
    p = [sig.parity(int(k)) for k in digits]
    acc, total = 0, 0
    for pk in p:
        total += pk * acc
        acc += pk
    return -1 if total % 2 else 1


def graded_pairing(sig: GradingSignature, covector_digits: Sequence[int], vector_digits: Sequence[int]) -> int:
    """Pair the dual of one basis state against another basis state.

    The covector factors pass the vector factors on their left, producing
    a Koszul sign that cancels the dual sign on the diagonal.
    """
    if len(covector_digits) != len(vector_digits):
        raise ArgumentError("site counts differ")
    if tuple(covector_digits) != tuple(vector_digits):
        return 0
    koszul = 0
    for k, i in enumerate(covector_digits):
        pi = sig.parity(int(i))
        koszul += pi * sum(sig.parity(int(j)) for j in vector_digits[:k])
    return dual_sign(sig, covector_digits) * (-1 if koszul % 2 else 1)


def dual_covector(sig: GradingSignature, one_site_states: Sequence[np.ndarray]) -> np.ndarray:
    """Row vector of the dual of ``⊗ one_site_states``.

    Coefficients are conjugated. Because each dual basis element pairs to
    one against its own vector, the row is the plain Kronecker product of
    the conjugated one-site rows in site order.
    """
    d = sig.dim
    states = [np.asarray(s, dtype=complex) for s in one_site_states]
    if not states:
        raise ArgumentError("need at least one site")
    for s in states:
        if s.shape != (d,):
            raise ArgumentError(f"one-site states must have length {d}")
    check_capacity(d, len(states))
    row = np.ones(1, dtype=complex)
    for s in states:
        row = np.kron(np.conj(s), row)
    return row
