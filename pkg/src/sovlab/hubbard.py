"""Shastry R-matrix, twisted inhomogeneous Hubbard transfer matrices and their SoV basis.

Each 4-dimensional site is a pair of qubits; site ``s`` holds qubits
``2s`` (low bit) and ``2s+1``. Operators use the same least-significant-first
index convention as :mod:`sovlab.graded`, so site 0 is the auxiliary space
of a monodromy and quantum sites are ``1..N``. The local space is ungraded.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .errors import ArgumentError, BasisError, CapacityError, EvaluationError, StructureError

PRINCIPAL = "principal"
SHIFTED = "shifted"
MAX_SITES = 4

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.diag([1.0, -1.0])
YY = np.kron(SIGMA_Y, SIGMA_Y)
ZZ = np.kron(SIGMA_Z, SIGMA_Z)


def h_of(lam, eta, branch: str = PRINCIPAL) -> complex:
    """Solution of ``sinh 2h = (i eta / 2) sin 2 lam``.

    ``principal`` uses the principal ``arcsinh``; ``shifted`` returns
    ``i pi / 2 - h``, the other determination.
    """
    h = 0.5 * np.arcsinh(0.5j * eta * np.sin(2 * complex(lam)))
    if branch == SHIFTED:
        return complex(0.5j * np.pi - h)
    if branch != PRINCIPAL:
        raise ArgumentError(f"unknown branch {branch!r}")
    return complex(h)


def big_lambda(lam, eta, branch: str = PRINCIPAL) -> complex:
    """``-i cot(2 lam) cosh(2h)``; provided for completeness, nothing below uses it."""
    return complex(-1j / np.tan(2 * lam) * np.cosh(2 * h_of(lam, eta, branch)))


def embed_qubits(op: np.ndarray, qubits: Sequence[int], total: int) -> np.ndarray:
    """Embed ``op`` acting on ``qubits`` (listed low bit first) into ``total`` qubits."""
    k = len(qubits)
    if op.shape != (2 ** k, 2 ** k):
        raise ArgumentError("operator size does not match the qubit list")
    if len(set(qubits)) != k or any(q < 0 or q >= total for q in qubits):
        raise ArgumentError(f"bad qubit list {list(qubits)}")
    rest = [q for q in range(total) if q not in qubits]
    # kron puts its first factor in the high bits
    order = list(reversed(qubits)) + list(reversed(rest))
    big = np.kron(op, np.eye(2 ** (total - k)))
    perm = [order.index(total - 1 - t) for t in range(total)]
    return big.reshape((2,) * (2 * total)).transpose(perm + [total + p for p in perm]).reshape(2 ** total, 2 ** total)


def xx_r(lam) -> np.ndarray:
    c, s = np.cos(lam), np.sin(lam)
    return np.array([[c, 0, 0, 0], [0, s, 1, 0], [0, 1, s, 0], [0, 0, 0, c]], dtype=complex)


def dressing(h) -> np.ndarray:
    """``exp(sigma^z x sigma^z h / 2)`` on one site.

    With ``sigma^y`` here the twists below stop being symmetries of the
    R-matrix, so the on-site coupling is taken along ``z``.
    """
    return np.cosh(h / 2) * np.eye(4) + np.sinh(h / 2) * ZZ


@lru_cache(maxsize=None)
def _frame():
    # qubits 0,1 form site A and 2,3 site B
    r13 = lambda z: embed_qubits(xx_r(z), [0, 2], 4)
    r24 = lambda z: embed_qubits(xx_r(z), [1, 3], 4)
    # sigma^y in the coupling term breaks Yang-Baxter
    sz1 = embed_qubits(SIGMA_Z, [0], 4)
    sz2 = embed_qubits(SIGMA_Z, [1], 4)
    return r13, r24, sz1, sz2


def shastry_r(lam, mu, eta, branch: str = PRINCIPAL, h_pair=None) -> np.ndarray:
    """Shastry R-matrix on two 4-dimensional sites (16 x 16).

    ``h_pair`` overrides the branch choice with explicit values of
    ``h(lam), h(mu)``; they must still solve the defining relation.
    """
    lam, mu = complex(lam), complex(mu)
    s_plus = np.sin(lam + mu)
    if abs(s_plus) < 1e-13:
        raise EvaluationError("sin(lam + mu) vanishes")
    if h_pair is None:
        hl, hm = h_of(lam, eta, branch), h_of(mu, eta, branch)
    else:
        hl, hm = complex(h_pair[0]), complex(h_pair[1])
    for h, z in ((hl, lam), (hm, mu)):
        if abs(np.sinh(2 * h) - 0.5j * eta * np.sin(2 * z)) > 1e-12 * max(1.0, abs(np.sinh(2 * h))):
            raise EvaluationError("branch of h does not satisfy its defining relation")
    r13, r24, sz1, sz2 = _frame()
    core = r13(lam - mu) @ r24(lam - mu) + np.sin(lam - mu) / s_plus * np.tanh(hl + hm) * (
        r13(lam + mu) @ sz1 @ r24(lam + mu) @ sz2
    )
    left = np.kron(dressing(hm), dressing(hl))
    right = np.kron(dressing(-hm), dressing(-hl))
    return left @ core @ right


def lax(lam, eta, branch: str = PRINCIPAL, dressed_site: int = 0, h=None) -> np.ndarray:
    """Homogeneous Hubbard Lax operator, dressed on site ``dressed_site`` of the pair."""
    r13, r24, _, _ = _frame()
    one = dressing(h_of(lam, eta, branch) if h is None else h)
    d = np.kron(np.eye(4), one) if dressed_site == 0 else np.kron(one, np.eye(4))
    return d @ r13(lam) @ r24(lam) @ d


def site_swap() -> np.ndarray:
    """``P_13 P_24``: exchange of the two sites."""
    p = np.zeros((16, 16))
    for i in range(4):
        for j in range(4):
            p[j + 4 * i, i + 4 * j] = 1.0
    return p


def embed_sites(op: np.ndarray, sites: Sequence[int], total: int) -> np.ndarray:
    qubits = [q for s in sites for q in (2 * s, 2 * s + 1)]
    return embed_qubits(op, qubits, 2 * total)


def partial_transpose(op16: np.ndarray, site: int) -> np.ndarray:
    """Transpose in site ``site`` (0 = low site) of a two-site operator."""
    t = op16.reshape(4, 4, 4, 4)  # (b, a, b', a')
    if site == 0:
        return t.transpose(0, 3, 2, 1).reshape(16, 16)
    return t.transpose(2, 1, 0, 3).reshape(16, 16)


def _rel(a, b) -> float:
    return float(np.abs(a - b).max() / max(1.0, np.abs(a).max(), np.abs(b).max()))


def unitarity_scalar(lam, mu, eta, branch: str = PRINCIPAL) -> complex:
    hl, hm = h_of(lam, eta, branch), h_of(mu, eta, branch)
    c2m, c2p = np.cos(lam - mu) ** 2, np.cos(lam + mu) ** 2
    return complex(c2m * (c2m - c2p * np.tanh(hl - hm) ** 2))


def proportionality_fit(a: np.ndarray, b: np.ndarray):
    """Least-squares ``c`` with ``a ~ c b`` and the relative misfit."""
    c = np.vdot(b, a) / np.vdot(b, b)
    return complex(c), float(np.linalg.norm(a - c * b) / np.linalg.norm(a))


@dataclass
class ShastryReport:
    coincident: float
    ybe: float
    unitarity: float
    crossing_aux: float
    crossing_quantum: float
    lax_limit: float

    @property
    def worst(self) -> float:
        return max(self.coincident, self.ybe, self.unitarity, self.crossing_aux, self.crossing_quantum, self.lax_limit)


def ybe_residual(lam, mu, xi, eta, branch: str = PRINCIPAL) -> float:
    rab = embed_sites(shastry_r(lam, mu, eta, branch), [0, 1], 3)
    rac = embed_sites(shastry_r(lam, xi, eta, branch), [0, 2], 3)
    rbc = embed_sites(shastry_r(mu, xi, eta, branch), [1, 2], 3)
    return _rel(rab @ rac @ rbc, rbc @ rac @ rab)


def unitarity_residual(lam, mu, eta, branch: str = PRINCIPAL) -> float:
    p = site_swap()
    prod = shastry_r(lam, mu, eta, branch) @ (p @ shastry_r(mu, lam, eta, branch) @ p)
    return _rel(prod, unitarity_scalar(lam, mu, eta, branch) * np.eye(16))


def crossing_residuals(lam, mu, eta, branch: str = PRINCIPAL):
    """Misfits of ``R^{-1}`` against the two conjugated partial transposes."""
    inv = np.linalg.inv(shastry_r(lam, mu, eta, branch))
    ya = embed_qubits(YY, [0, 1], 4)
    yb = embed_qubits(YY, [2, 3], 4)
    hl, hm = h_of(lam, eta, branch), h_of(mu, eta, branch)
    # the crossing point of this parametrisation is pi/2, where h continues to -h
    aux = ya @ partial_transpose(shastry_r(lam - np.pi / 2, mu, eta, h_pair=(-hl, hm)), 0) @ ya
    quantum = yb @ partial_transpose(shastry_r(lam, mu + np.pi / 2, eta, h_pair=(hl, -hm)), 1) @ yb
    return proportionality_fit(inv, aux)[1], proportionality_fit(inv, quantum)[1]


def shastry_checks(lam, mu, xi, eta, branch: str = PRINCIPAL) -> ShastryReport:
    cross_a, cross_q = crossing_residuals(lam, mu, eta, branch)
    hl = h_of(lam, eta, branch)
    lim = max(
        _rel(shastry_r(lam, 0.0, eta, h_pair=(hl, 0.0)), lax(lam, eta, branch) / np.cosh(hl)),
        _rel(shastry_r(0.0, lam, eta, h_pair=(0.0, hl)), lax(-lam, eta, dressed_site=1, h=-hl) / np.cosh(hl)),
    )
    return ShastryReport(
        _rel(shastry_r(lam, lam, eta, branch), site_swap()),
        ybe_residual(lam, mu, xi, eta, branch),
        unitarity_residual(lam, mu, eta, branch),
        cross_a,
        cross_q,
        lim,
    )


def twist_family(a: int, alpha, beta, gamma) -> np.ndarray:
    """The four-by-four twists compatible with the Shastry R-matrix."""
    alpha, beta, gamma = complex(alpha), complex(beta), complex(gamma)
    if alpha == 0:
        raise ArgumentError("alpha must be nonzero")
    last = beta * gamma / alpha
    k = np.zeros((4, 4), dtype=complex)
    if a == 1:
        k[0, 0], k[1, 1], k[2, 2], k[3, 3] = alpha, beta, gamma, last
    elif a == 2:
        k[0, 0], k[1, 2], k[2, 1], k[3, 3] = alpha, beta, gamma, last
    elif a == 3:
        k[0, 3], k[1, 1], k[2, 2], k[3, 0] = alpha, beta, gamma, last
    elif a == 4:
        k[0, 3], k[1, 2], k[2, 1], k[3, 0] = alpha, beta, gamma, last
    else:
        raise ArgumentError(f"twist family must be 1..4, got {a}")
    return k


def family_is_simple(a: int, alpha, beta, gamma, tol: float = 1e-10) -> bool:
    last = beta * gamma / alpha

    def apart(vals):
        vals = np.asarray(vals, dtype=complex)
        scale = max(1.0, float(np.abs(vals).max()))
        gaps = np.abs(vals[:, None] - vals[None, :])
        np.fill_diagonal(gaps, np.inf)
        return bool(gaps.min() > tol * scale)

    root = np.sqrt(complex(beta * gamma))
    if a == 1:
        return apart([alpha, beta, gamma, last])
    if a == 2:
        return abs(beta * gamma) > tol and apart([alpha, last, root, -root])
    if a == 3:
        return abs(beta) > tol and abs(gamma) > tol and apart([beta, gamma, root, -root])
    return False


@dataclass
class HubbardParams:
    eta: complex
    xi: np.ndarray
    family: int
    alpha: complex
    beta: complex
    gamma: complex
    branch: str = PRINCIPAL

    @property
    def sites(self) -> int:
        return len(self.xi)

    @property
    def twist(self) -> np.ndarray:
        return twist_family(self.family, self.alpha, self.beta, self.gamma)


def make_hubbard(eta, xi, family: int, alpha, beta, gamma, branch: str = PRINCIPAL, window: int = 4) -> HubbardParams:
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if len(xi) == 0:
        raise ArgumentError("need at least one site")
    if len(xi) > MAX_SITES:
        raise CapacityError(f"at most {MAX_SITES} sites are supported")
    if branch not in (PRINCIPAL, SHIFTED):
        raise ArgumentError(f"unknown branch {branch!r}")
    # trigonometric analogue of the shift condition: no xi_a - xi_b in the pi lattice
    for a in range(len(xi)):
        for b in range(a + 1, len(xi)):
            diff = xi[a] - xi[b]
            if abs(np.sin(diff)) < 1e-10:
                raise ArgumentError(f"inhomogeneities {a} and {b} coincide modulo pi")
            if abs(np.sin(xi[a] + xi[b])) < 1e-10:
                raise ArgumentError(f"inhomogeneities {a} and {b} sum to a pole")
    twist_family(family, alpha, beta, gamma)
    return HubbardParams(complex(eta), xi, family, complex(alpha), complex(beta), complex(gamma), branch)


def _r_on(p: HubbardParams, total: int, a: int, b: int, lam, mu) -> np.ndarray:
    return embed_sites(shastry_r(lam, mu, p.eta, p.branch), [a, b], total)


def hubbard_monodromy(p: HubbardParams, lam) -> np.ndarray:
    total = p.sites + 1
    out = embed_sites(p.twist, [0], total)
    for n in range(p.sites, 0, -1):
        out = out @ _r_on(p, total, 0, n, lam, p.xi[n - 1])
    return out


def hubbard_transfer(p: HubbardParams, lam) -> np.ndarray:
    m = hubbard_monodromy(p, lam)
    rest = 4 ** p.sites
    return np.einsum("iaja->ij", m.reshape(rest, 4, rest, 4))


def transfer_at_node(p: HubbardParams, n: int) -> np.ndarray:
    """Product of R-matrices and the twist that equals the transfer matrix at ``xi_n`` (0-based ``n``)."""
    total = p.sites
    z = p.xi[n]
    out = np.eye(4 ** total, dtype=complex)
    for m in range(n - 1, -1, -1):
        out = out @ _r_on(p, total, n, m, z, p.xi[m])
    out = out @ embed_sites(p.twist, [n], total)
    for m in range(total - 1, n, -1):
        out = out @ _r_on(p, total, n, m, z, p.xi[m])
    return out


def commutator_residual(p: HubbardParams, lam, mu) -> float:
    a, b = hubbard_transfer(p, lam), hubbard_transfer(p, mu)
    return float(np.abs(a @ b - b @ a).max() / max(1.0, np.abs(a).max() * np.abs(b).max()))


def node_identity_residual(p: HubbardParams, n: int) -> float:
    return _rel(hubbard_transfer(p, p.xi[n]), transfer_at_node(p, n))


def large_lambda_profile(mu, depth: float = 30.0) -> np.ndarray:
    """``e^{2 i lam} R(lam|mu)`` at ``eta = 0`` and ``lam = -i depth``, scaled by ``4 e^{-2 i mu}``.

    The XX factors grow like ``e^{i(lam - mu)} / 2`` each, so the limit is
    the constant diagonal matrix returned here.
    """
    lam = -1j * depth
    r = shastry_r(lam, mu, 0.0)
    return r * np.exp(-2j * (lam - mu)) * 4


@dataclass
class HubbardSovBasis:
    rows: np.ndarray
    labels: List[tuple]
    singular_values: np.ndarray
    overlaps: Optional[np.ndarray] = None

    @property
    def rank_ratio(self) -> float:
        s = self.singular_values
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def hubbard_source(p: HubbardParams, xyzw=None) -> np.ndarray:
    """``(x, y, z, w) W^{-1}`` per site as a row of length ``4^N``, site 1 lowest."""
    k = p.twist
    if p.family == 1:
        w_inv = np.eye(4)
    else:
        _, w = np.linalg.eig(k)
        w_inv = np.linalg.inv(w)
    comps = np.ones(4) if xyzw is None else np.asarray(xyzw, dtype=complex)
    if comps.shape != (4,):
        raise ArgumentError("source components must be four numbers")
    if np.any(comps == 0):
        raise ArgumentError("all source components must be nonzero")
    one = comps @ w_inv
    row = np.ones(1, dtype=complex)
    for _ in range(p.sites):
        row = np.kron(one, row)
    return row


def hubbard_sov_rank(p: HubbardParams, xyzw=None, rank_tol: float = 1e-8, probe=None) -> HubbardSovBasis:
    """Rank certificate for ``<S| prod T(xi_n)^{h_n}``, ``h`` in ``{0..3}^N``.

    Family 4 has a degenerate twist and is rejected; other families must
    have a simple twist spectrum.
    """
    if p.family == 4:
        root = np.sqrt(p.beta * p.gamma)
        raise StructureError(f"family 4 twist has degenerate eigenvalues +-{root:.6g}")
    if not family_is_simple(p.family, p.alpha, p.beta, p.gamma):
        raise StructureError(f"family {p.family} twist does not have simple spectrum for these parameters")
    n = p.sites
    start = hubbard_source(p, xyzw)
    mats = [transfer_at_node(p, a) for a in range(n)]
    powers = []
    for m in mats:
        seq = [np.eye(m.shape[0], dtype=complex)]
        for _ in range(3):
            seq.append(seq[-1] @ m)
        powers.append(seq)
    labels = [tuple((i // 4 ** a) % 4 for a in range(n)) for i in range(4 ** n)]
    rows = np.empty((4 ** n, 4 ** n), dtype=complex)
    for i, h in enumerate(labels):
        r = start
        for a, e in enumerate(h):
            r = r @ powers[a][e]
        rows[i] = r
    sv = np.linalg.svd(rows, compute_uv=False)
    basis = HubbardSovBasis(rows, labels, sv)
    if probe is not None:
        from .sov import left_right_overlaps

        basis.overlaps = left_right_overlaps(hubbard_transfer(p, probe))
    if not basis.rank_ratio > rank_tol:
        raise BasisError(f"Hubbard SoV covectors are not a basis: sigma_min/sigma_max = {basis.rank_ratio:.3e}")
    return basis
