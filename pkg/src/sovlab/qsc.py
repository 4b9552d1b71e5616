"""Quantum spectral curve, Bethe roots and isospectrality for gl(1|2).

For the twist with ``k1 = 0`` every eigenvalue has a monic polynomial
``phi`` of degree at most ``N`` solving a second-order difference
equation; its roots, with the zeros forced at ``xi + eta`` removed,
are the second-level Bethe roots. For a generic twist the Bethe
equations are solved directly and the nested Bethe ansatz eigenvalue is
checked against the interpolated tower.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .chain import ChainParams, make_params, transfer, validate_twist
from .errors import ArgumentError, InconsistencyError
from .gl12 import ScalarTower, closure_residual, null_out_residual, require_gl12, twist_constants
from .graded import GradingSignature
from .sov import SovBasis, sov_wavefunction


def poly_eval(coeffs_low_first, lam):
    return np.polynomial.polynomial.polyval(lam, coeffs_low_first)


def monic_from_roots(roots) -> np.ndarray:
    return np.polynomial.polynomial.polyfromroots(roots) if len(roots) else np.array([1.0 + 0j])


@dataclass
class QscSolution:
    """Monic ``phi`` (coefficients lowest first) and the ``alpha_bar`` it uses."""

    phi: np.ndarray
    alpha_bar: complex
    residual: float

    @property
    def degree(self) -> int:
        return len(self.phi) - 1

    def roots(self) -> np.ndarray:
        # companion-matrix eigenvalues
        return np.polynomial.polynomial.polyroots(self.phi) if self.degree else np.zeros(0, dtype=complex)


def qsc_alpha(params: ChainParams, alpha_bar: complex, lam) -> complex:
    return complex(-alpha_bar * np.prod(lam - 2 * params.eta - params.xi))


def qsc_residual(params: ChainParams, x, phi, alpha_bar, probes) -> float:
    """Max relative residual of the difference equation at ``probes``."""
    tower = ScalarTower(params, x)
    eta = params.eta
    worst = 0.0
    for lam in probes:
        al = qsc_alpha(params, alpha_bar, lam)
        be = al * qsc_alpha(params, alpha_bar, lam + eta)
        a = poly_eval(phi, lam - eta) * tower.t(2, lam - eta)
        b = al * poly_eval(phi, lam) * tower.t(1, lam)
        c = be * poly_eval(phi, lam + eta)
        worst = max(worst, abs(a + b + c) / max(1.0, abs(a), abs(b), abs(c)))
    return float(worst)


def probe_points(params: ChainParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """Probes at least ``0.1 |eta|`` from every ``xi`` and ``xi +- eta``."""
    from .gl12 import sample_points

    return sample_points(params, count, rng, reach=1)


def qsc_find(params: ChainParams, x, probes=None, tol: float = 1e-8, degree_tol: float = 1e-9) -> QscSolution:
    """Monic ``phi`` of degree at most ``N`` for the eigenvalue ``x``.

    The ``N`` interpolation conditions ``alpha(xi+eta) phi(xi+eta) = -x phi(xi)``,
    which are the functional equation evaluated at ``lam = xi``, are solved through the smallest right singular vector; ``alpha_bar``
    is tried at ``-k2`` first, then ``-k3``.
    """
    require_gl12(params)
    x = np.asarray(x, dtype=complex)
    n = params.sites
    if probes is None:
        probes = probe_points(params, 3 * n + 3, np.random.default_rng(17))
    odd = params.twist.odd_eigenvalues
    xi, eta = params.xi, params.eta
    best: Optional[QscSolution] = None
    for alpha_bar in (-odd[0], -odd[1]):
        rows = []
        for a in range(n):
            al = qsc_alpha(params, alpha_bar, xi[a] + eta)
            rows.append(al * (xi[a] + eta) ** np.arange(n + 1) + x[a] * xi[a] ** np.arange(n + 1))
        mat = np.array(rows)
        col_scale = np.maximum(1.0, np.abs(mat).max(axis=0))
        _, _, vh = np.linalg.svd(mat / col_scale)
        c = np.conj(vh[-1]) / col_scale
        mags = np.abs(c) * np.maximum(1.0, np.max(np.abs(np.concatenate([xi, xi + eta])))) ** np.arange(n + 1)
        top = int(np.max(np.nonzero(mags > degree_tol * mags.max())[0]))
        phi = c[: top + 1] / c[top]
        res = qsc_residual(params, x, phi, alpha_bar, probes)
        sol = QscSolution(phi, complex(alpha_bar), res)
        if res < tol:
            return sol
        if best is None or res < best.residual:
            best = sol
    raise InconsistencyError(f"no polynomial solution of the difference equation (best residual {best.residual:.2e})")


def qsc_wavefunction(params: ChainParams, sol: QscSolution, labels: Sequence[tuple]) -> np.ndarray:
    """``prod alpha^h(xi+eta) phi^h(xi+eta) phi^(2-h)(xi)`` per label.

    Equal to ``prod (-x)^h`` times ``prod phi(xi)^2``, i.e. the components
    in the basis built from powers of ``-T(xi_a)``.
    """
    xi, eta = params.xi, params.eta
    alpha = np.array([qsc_alpha(params, sol.alpha_bar, z + eta) for z in xi])
    at_shift = poly_eval(sol.phi, xi + eta)
    at_node = poly_eval(sol.phi, xi)
    out = []
    for h in labels:
        h = np.asarray(h)
        out.append(np.prod(alpha ** h * at_shift ** h * at_node ** (2 - h)))
    return np.array(out)


def proportionality_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Distance of ``a`` from the line through ``b`` after a least-squares fit."""
    c = np.vdot(b, a) / np.vdot(b, b)
    return float(np.linalg.norm(a - c * b) / np.linalg.norm(a))


@dataclass
class BetheRoots:
    lam: np.ndarray
    mu: np.ndarray
    k1: complex
    k2: complex
    k3: complex

    def q1(self, z):
        return complex(np.prod(z - self.lam))

    def q2(self, z):
        return complex(np.prod(z - self.mu))


def bethe_extract(params: ChainParams, x, sol: QscSolution, zero_tol: float = 1e-8, match_tol: float = 1e-6) -> BetheRoots:
    """Bethe roots for the ``k1 = 0`` twist from ``x`` and its ``phi``.

    First-level roots are the ``xi_a`` where ``x_a`` does not vanish;
    second-level roots are the roots of ``phi`` after removing one root
    near ``xi_a + eta`` for each vanishing ``x_a``.
    """
    x = np.asarray(x, dtype=complex)
    xi, eta = params.xi, params.eta
    scale = max(1.0, float(np.abs(x).max()))
    zero = np.abs(x) <= zero_tol * scale
    roots = list(sol.roots())
    for a in np.nonzero(zero)[0]:
        if not roots:
            raise InconsistencyError("phi has fewer roots than vanishing eigenvalue components")
        dist = [abs(r - xi[a] - eta) for r in roots]
        k = int(np.argmin(dist))
        if dist[k] > match_tol * max(1.0, abs(xi[a] + eta)):
            raise InconsistencyError(f"phi does not vanish at xi[{a}] + eta")
        roots.pop(k)
    k1, _, _ = twist_constants(params)
    k2 = -sol.alpha_bar
    odd = params.twist.odd_eigenvalues
    k3 = odd[1] if abs(odd[0] - k2) <= abs(odd[1] - k2) else odd[0]
    return BetheRoots(xi[~zero].copy(), np.array(roots, dtype=complex), k1, complex(k2), complex(k3))


def bethe_residuals(params: ChainParams, roots: BetheRoots) -> np.ndarray:
    """Relative residuals of both Bethe equation families, concatenated."""
    eta = params.eta

    def d(z):
        return complex(np.prod(z - params.xi))

    out = []
    for l in roots.lam:
        a = roots.k1 * roots.q2(l) * d(l + eta)
        b = roots.k2 * d(l) * roots.q2(l + eta)
        out.append(abs(a - b) / max(1.0, abs(a), abs(b)))
    for m in roots.mu:
        a = roots.k2 * roots.q2(m + eta) * roots.q1(m - eta)
        b = -roots.k3 * roots.q2(m - eta) * roots.q1(m)
        out.append(abs(a - b) / max(1.0, abs(a), abs(b)))
    return np.array(out)


def admissible(params: ChainParams, roots: BetheRoots, tol: float = 1e-8, first_level_on_nodes: bool = True) -> bool:
    """Root-set conditions: first level on the nodes (``k1 = 0``), second level away from them, all distinct."""
    xi, eta = params.xi, params.eta
    scale = max(1.0, float(np.abs(xi).max()), abs(eta))
    lam, mu = roots.lam, roots.mu
    if first_level_on_nodes and len(lam) and np.min(np.abs(lam[:, None] - xi[None, :]), axis=1).max() > tol * scale:
        return False
    forbidden = np.concatenate([xi, xi + eta])
    if len(mu) and np.min(np.abs(mu[:, None] - forbidden[None, :])) <= tol * scale:
        return False
    for r in (lam, mu):
        if len(r) > 1:
            gaps = np.abs(r[:, None] - r[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= tol * scale:
                return False
    if len(lam) and len(mu) and np.min(np.abs(lam[:, None] - mu[None, :])) <= tol * scale:
        return False
    return True


def bethe_t1(params: ChainParams, roots: BetheRoots, lam) -> complex:
    """Nested Bethe ansatz form of the first transfer-matrix eigenvalue."""
    eta = params.eta
    d = complex(np.prod(lam - params.xi))
    a = complex(np.prod(lam + eta - params.xi))
    q1, q1m = roots.q1(lam), roots.q1(lam - eta)
    q2, q2p, q2m = roots.q2(lam), roots.q2(lam + eta), roots.q2(lam - eta)
    return roots.k1 * a * q1m / q1 - d * (roots.k2 * q1m * q2p / (q1 * q2) + roots.k3 * q2m / q2)


def solve_bethe(params: ChainParams, first: int, second: int, seed: int = 0, starts: int = 200, tol: float = 1e-12) -> List[BetheRoots]:
    """Distinct solutions of the Bethe equations with the given root counts.

    Runs complex Newton with a finite-difference Jacobian from seeded
    random starts; only non-degenerate solutions are returned.
    """
    require_gl12(params)
    k1, _, _ = twist_constants(params)
    k2, k3 = params.twist.odd_eigenvalues
    eta = params.eta
    xi = params.xi
    size = first + second
    if size == 0:
        return [BetheRoots(np.zeros(0, complex), np.zeros(0, complex), k1, k2, k3)]

    def split(z):
        return BetheRoots(z[:first], z[first:], k1, k2, k3)

    def d(z):
        return np.prod(z - xi)

    def equations(z):
        r = split(z)
        out = np.empty(size, dtype=complex)
        for j, l in enumerate(r.lam):
            out[j] = k1 * r.q2(l) * d(l + eta) - k2 * d(l) * r.q2(l + eta)
        for j, m in enumerate(r.mu):
            out[first + j] = k2 * r.q2(m + eta) * r.q1(m - eta) + k3 * r.q2(m - eta) * r.q1(m)
        return out

    centre = np.mean(xi)
    radius = 2.0 * (np.max(np.abs(xi - centre)) + abs(eta))
    found: List[np.ndarray] = []
    for s in range(starts):
        rng = np.random.default_rng([seed, 23, s])
        z = centre + radius * (rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size))
        for _ in range(60):
            f = equations(z)
            jac = np.empty((size, size), dtype=complex)
            h = 1e-7 * max(1.0, float(np.abs(z).max()))
            for c in range(size):
                e = np.zeros(size, dtype=complex)
                e[c] = h
                jac[:, c] = (equations(z + e) - equations(z - e)) / (2 * h)
            try:
                step = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                break
            z = z + step
            if not np.all(np.isfinite(z)) or np.abs(z).max() > 1e6:
                break
            if np.abs(step).max() <= 1e-14 * max(1.0, float(np.abs(z).max())):
                break
        if not np.all(np.isfinite(z)):
            continue
        r = split(z)
        if np.max(bethe_residuals(params, r), initial=0.0) > tol:
            continue
        if not admissible(params, r, tol=1e-6, first_level_on_nodes=False):
            continue
        if len(r.lam) and np.min(np.abs(r.lam[:, None] - np.concatenate([xi, xi - eta])[None, :])) < 1e-6:
            continue
        key = np.concatenate([np.sort_complex(r.lam), np.sort_complex(r.mu)])
        if any(np.max(np.abs(key - k)) < 1e-6 * max(1.0, float(np.abs(k).max())) for k in found):
            continue
        found.append(key)
    return [split(k) for k in found]


@dataclass
class NabaReport:
    polynomial: float
    closure: float
    null_out: float
    t2_lambda_form: float
    t3_lambda_form: float

    @property
    def worst(self) -> float:
        return max(self.polynomial, self.closure, self.null_out, self.t2_lambda_form, self.t3_lambda_form)


def naba_checks(params: ChainParams, roots: BetheRoots, probes) -> NabaReport:
    """Nested Bethe ansatz eigenvalue against the interpolated scalar tower."""
    eta = params.eta
    k1, det2, _ = twist_constants(params)
    if k1 == 0:
        raise ArgumentError("the first-level factor form needs k1 != 0")
    x = np.array([bethe_t1(params, roots, z) for z in params.xi])
    tower = ScalarTower(params, x)

    def d(z):
        return complex(np.prod(z - params.xi))

    def big_lambda(z):
        return k1 * d(z + eta) * roots.q1(z - eta) / roots.q1(z)

    def rel(a, b):
        return abs(a - b) / max(1.0, abs(a), abs(b))

    poly = t2 = t3 = 0.0
    for z in probes:
        poly = max(poly, rel(bethe_t1(params, roots, z), tower.t(1, z)))
        t2_form = big_lambda(z) * (k1 * bethe_t1(params, roots, z + eta) + det2 * d(z)) / k1
        t2 = max(t2, rel(t2_form, tower.t(2, z)))
        t2_next = big_lambda(z + eta) * (k1 * bethe_t1(params, roots, z + 2 * eta) + det2 * d(z + eta)) / k1
        t3 = max(t3, rel(big_lambda(z) * t2_next, tower.t(3, z)))
    return NabaReport(
        poly,
        closure_residual(params, x, probes),
        null_out_residual(params, x, probes),
        t2,
        t3,
    )


def joint_eigenvalues(ops: Sequence[np.ndarray], rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Eigenvalues of commuting operators on a common eigenbasis, one column per operator."""
    rng = rng if rng is not None else np.random.default_rng(3)
    weights = rng.normal(size=len(ops)) + 1j * rng.normal(size=len(ops))
    combo = sum(w * o for w, o in zip(weights, ops))
    _, vecs = np.linalg.eig(combo)
    inv = np.linalg.inv(vecs)
    return np.array([np.diagonal(inv @ o @ vecs) for o in ops]).T


def gl3_partner(params: ChainParams) -> ChainParams:
    """The ungraded gl(3) chain with twist ``-K`` and ``-eta`` on the same sites."""
    require_gl12(params)
    sig3 = GradingSignature(3, 0)
    return make_params(sig3, -params.eta, params.xi, validate_twist(sig3, -params.twist.matrix))


def isospectrality_residual(params: ChainParams, probes, level: int = 1) -> float:
    """Spectral distance between the graded chain and its gl(3) partner.

    Level 1 compares the fundamental transfer matrices; level 2 compares
    the graded level-2 column with the partner's level-2 row. Only the
    ``k1 = 0`` twist has such a partner.
    """
    from .fusion import TransferTower
    from .gl12 import is_kernel_twist, match_spectra

    if not is_kernel_twist(params):
        raise ArgumentError("the gl(3) partner exists only for the k1 = 0 twist")

    partner = gl3_partner(params)
    if level == 1:
        ops_a = [transfer(params, z) for z in probes]
        ops_b = [transfer(partner, z) for z in probes]
    elif level == 2:
        ta, tb = TransferTower(params), TransferTower(partner)
        ops_a = [ta.column(2, z) for z in probes]
        ops_b = [tb.row(2, z) for z in probes]
    else:
        raise ArgumentError("level must be 1 or 2")
    ea, eb = joint_eigenvalues(ops_a), joint_eigenvalues(ops_b)
    pairs, worst = match_spectra(ea, eb, tol=1e-6)
    if len(pairs) != len(ea):
        return float("inf")
    return worst


__all__ = [
    "BetheRoots",
    "NabaReport",
    "QscSolution",
    "SovBasis",
    "admissible",
    "bethe_extract",
    "bethe_residuals",
    "bethe_t1",
    "isospectrality_residual",
    "naba_checks",
    "proportionality_residual",
    "qsc_find",
    "qsc_residual",
    "qsc_wavefunction",
    "solve_bethe",
    "sov_wavefunction",
]
