"""Transfer-matrix spectrum of the twisted gl(1|2) chain.

An eigenvalue is encoded by ``x[a] = t1(xi[a])``. Every fused eigenvalue
then follows by interpolation, and the spectrum is cut out by the
closure relation between the first three column levels together with
the null out-boundary condition.
"""
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import polysolve
from .chain import ChainParams, transfer, transfer_at_inhomogeneity
from .errors import ArgumentError, CapacityError, StructureError
from .fusion import COLUMN, ROW, character_constant, interpolation_weight
from .graded import GradingSignature

GL12 = GradingSignature(1, 2)


def require_gl12(params: ChainParams):
    if params.sig != GL12:
        raise ArgumentError(f"expected a (1|2) chain, got {params.sig}")


def twist_constants(params: ChainParams):
    """``(k1, k2 * k3, k2 + k3)`` from the blocks of the twist."""
    k = params.twist.matrix
    return complex(k[0, 0]), complex(np.linalg.det(k[1:, 1:])), complex(np.trace(k[1:, 1:]))


def is_kernel_twist(params: ChainParams, tol: float = 1e-14) -> bool:
    """True for the non-invertible twist with a vanishing even eigenvalue."""
    k1, det2, _ = twist_constants(params)
    scale = max(1.0, float(np.abs(params.twist.matrix).max()))
    return abs(k1) <= tol * scale and abs(det2) > tol * scale ** 2


class ScalarTower:
    """Fused eigenvalues generated from ``x`` by interpolation."""

    def __init__(self, params: ChainParams, x: Sequence[complex]):
        require_gl12(params)
        self.params = params
        self.x = np.asarray(x, dtype=complex)
        if self.x.shape != (params.sites,):
            raise ArgumentError(f"need {params.sites} values, got shape {self.x.shape}")
        tw = params.twist
        self._even, self._odd = tw.even_eigenvalues, tw.odd_eigenvalues
        self._cache: Dict[tuple, complex] = {}

    def asymptotic(self, n: int, kind: str = COLUMN) -> complex:
        key = ("inf", kind, n)
        if key not in self._cache:
            self._cache[key] = character_constant(self._even, self._odd, n, kind)
        return self._cache[key]

    def d(self, lam) -> complex:
        return complex(np.prod(lam - self.params.xi))

    def fused(self, n: int, lam, kind: str = COLUMN) -> complex:
        if n < 0:
            return 0.0 + 0j
        if n == 0:
            return 1.0 + 0j
        lam = complex(lam)
        key = (kind, n, lam)
        if key in self._cache:
            return self._cache[key]
        p = self.params
        s = 1.0 if kind == COLUMN else -1.0
        if n == 1:
            value = self.asymptotic(1) * self.d(lam)
            for a in range(p.sites):
                value += interpolation_weight(p, a, 1, lam) * self.x[a]
        else:
            inner = self.asymptotic(n, kind) * self.d(lam)
            for a, xa in enumerate(p.xi):
                inner += interpolation_weight(p, a, n, lam, kind) * self.fused(n - 1, xa + s * p.eta, kind) * self.x[a]
            prefactor = 1.0 + 0j
            for r in range(1, n):
                prefactor *= self.d(lam + s * r * p.eta)
            value = prefactor * inner
        self._cache[key] = value
        return value

    def t(self, n: int, lam) -> complex:
        return self.fused(n, lam, COLUMN)

    def magnitude(self, n: int, lam) -> float:
        """Sum of the absolute values of the terms making up ``t(n, lam)``.

        Roundoff in ``t`` is relative to this, not to ``|t|``, which can
        vanish through cancellation.
        """
        if n <= 0:
            return 1.0 if n == 0 else 0.0
        p = self.params
        lam = complex(lam)
        key = ("mag", n, lam)
        if key in self._cache:
            return self._cache[key]
        total = abs(self.asymptotic(n) * self.d(lam))
        for a, xa in enumerate(p.xi):
            total += abs(interpolation_weight(p, a, n, lam)) * self.magnitude(n - 1, xa + p.eta) * abs(self.x[a])
        for r in range(1, n):
            total *= abs(self.d(lam + r * p.eta))
        self._cache[key] = float(total)
        return float(total)

    def rect(self, a: int, b: int, lam) -> complex:
        """``t_b^(a)`` from the column determinant."""
        if a == 0 or b == 0:
            return 1.0 + 0j
        eta = self.params.eta
        m = np.array([[self.t(b + i - j, lam - i * eta) for j in range(a)] for i in range(a)])
        return complex(np.linalg.det(m)) if a > 1 else complex(m[0, 0])


def scalar_tower(params: ChainParams, x, n: int, lam, kind: str = COLUMN) -> complex:
    return ScalarTower(params, x).fused(n, lam, kind)


def t1_poly(params: ChainParams, x, lam) -> complex:
    return ScalarTower(params, x).t(1, lam)


def _rel(diff, *terms):
    return abs(diff) / max(1.0, *[abs(t) for t in terms])


def closure_residual(params: ChainParams, x, samples) -> float:
    """Max relative residual of ``k2 k3 d t3 = k1 (t2(l) t2(l+eta) - t3(l) t1(l+eta))``.

    Each term is measured against the product of its factors' term magnitudes.
    """
    k1, det2, _ = twist_constants(params)
    tower = ScalarTower(params, x)
    eta = params.eta
    worst = 0.0
    for lam in samples:
        lhs = det2 * tower.d(lam) * tower.t(3, lam)
        a = k1 * tower.t(2, lam) * tower.t(2, lam + eta)
        b = k1 * tower.t(3, lam) * tower.t(1, lam + eta)
        scale = (
            abs(det2 * tower.d(lam)) * tower.magnitude(3, lam)
            + abs(k1) * tower.magnitude(2, lam) * tower.magnitude(2, lam + eta)
            + abs(k1) * tower.magnitude(3, lam) * tower.magnitude(1, lam + eta)
        )
        worst = max(worst, abs(lhs - a + b) / max(1.0, scale))
    return worst


def null_out_residual(params: ChainParams, x, samples) -> float:
    """Max relative size of ``t3(l) t3(l-eta) - t2(l) t4(l-eta)``, scaled as in :func:`closure_residual`."""
    tower = ScalarTower(params, x)
    eta = params.eta
    worst = 0.0
    for lam in samples:
        a = tower.t(3, lam) * tower.t(3, lam - eta)
        b = tower.t(2, lam) * tower.t(4, lam - eta)
        scale = tower.magnitude(3, lam) * tower.magnitude(3, lam - eta) + tower.magnitude(2, lam) * tower.magnitude(4, lam - eta)
        worst = max(worst, abs(a - b) / max(1.0, scale))
    return worst


def sample_points(params: ChainParams, count: int, rng: np.random.Generator, reach: int = 3) -> np.ndarray:
    """Points at least ``0.1 |eta|`` away from every ``xi_a + k eta`` with ``|k| <= reach``."""
    eta = params.eta
    forbidden = np.array([x + k * eta for x in params.xi for k in range(-reach, reach + 1)])
    centre = np.mean(params.xi)
    radius = max(1.0, float(np.max(np.abs(params.xi - centre))) + abs(eta))
    out: List[complex] = []
    while len(out) < count:
        z = centre + radius * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        if np.min(np.abs(z - forbidden)) < 0.1 * abs(eta):
            continue
        if out and np.min(np.abs(z - np.array(out))) < 0.1 * abs(eta):
            continue
        out.append(z)
    return np.array(out)


@dataclass
class TowerSystem:
    """Coefficient arrays of the closure and cubic systems in ``x``.

    ``t1``, ``t2`` and ``t3`` at the needed points are affine in ``x``,
    ``x * t1(xi + eta)`` and ``x * t2(xi + eta)`` respectively, so the
    arrays below are all the kernels need.
    """

    params: ChainParams
    samples: np.ndarray
    coeffs: tuple = field(repr=False)
    cubic: bool = False

    def evaluate(self, x):
        from ._kernels import tower_system

        return tower_system(np.atleast_2d(np.asarray(x, dtype=complex)), self.coeffs, self.cubic)

    @property
    def degree(self) -> int:
        return 3 if self.cubic else 4


def build_system(params: ChainParams, samples, cubic: bool = False) -> TowerSystem:
    require_gl12(params)
    p = params
    n = p.sites
    eta, xi = p.eta, p.xi
    samples = np.asarray(samples, dtype=complex)
    if not cubic and len(samples) != n:
        raise ArgumentError(f"closure system needs {n} sample points")
    k1, det2, _ = twist_constants(p)
    t1inf = character_constant(p.twist.even_eigenvalues, p.twist.odd_eigenvalues, 1)
    t2inf = character_constant(p.twist.even_eigenvalues, p.twist.odd_eigenvalues, 2)
    t3inf = character_constant(p.twist.even_eigenvalues, p.twist.odd_eigenvalues, 3)

    def d(lam):
        return complex(np.prod(lam - xi))

    def f(m, lam):
        return np.array([interpolation_weight(p, a, m, lam) for a in range(n)])

    nodes = xi + eta
    A1 = np.array([t1inf * d(z) for z in nodes])
    B1 = np.array([f(1, z) for z in nodes])
    P2 = np.array([d(z + eta) * t2inf * d(z) for z in nodes])
    Q2 = np.array([d(z + eta) * f(2, z) for z in nodes])
    m = len(samples)
    a1 = np.array([t1inf * d(s + eta) for s in samples]) if m else np.zeros(0, complex)
    b1 = np.array([f(1, s + eta) for s in samples]).reshape(m, n)
    p2 = np.array([d(s + eta) * t2inf * d(s) for s in samples])
    q2 = np.array([d(s + eta) * f(2, s) for s in samples]).reshape(m, n)
    p2p = np.array([d(s + 2 * eta) * t2inf * d(s + eta) for s in samples])
    q2p = np.array([d(s + 2 * eta) * f(2, s + eta) for s in samples]).reshape(m, n)
    p3 = np.array([d(s + eta) * d(s + 2 * eta) * t3inf * d(s) for s in samples])
    q3 = np.array([d(s + eta) * d(s + 2 * eta) * f(3, s) for s in samples]).reshape(m, n)
    cL = np.array([det2 * d(s) for s in samples])
    ck = np.full(m, k1)
    cs = np.ones(n, dtype=complex)
    coeffs = tuple(np.ascontiguousarray(c, dtype=complex) for c in (A1, B1, P2, Q2, a1, b1, p2, q2, p2p, q2p, p3, q3, cL, ck, cs))
    return TowerSystem(p, samples, coeffs, cubic)


def rescale_rows(system: TowerSystem, x_scale: float, rng: np.random.Generator) -> TowerSystem:
    """Normalise equation rows by their typical size on a ball of radius ``x_scale``."""
    probe = x_scale * (rng.normal(size=(16, system.params.sites)) + 1j * rng.normal(size=(16, system.params.sites)))
    f, _ = system.evaluate(probe)
    row = 1.0 / np.maximum(np.mean(np.abs(f), axis=0), 1e-300)
    c = list(system.coeffs)
    if system.cubic:
        c[14] = c[14] * row
    else:
        c[12] = c[12] * row
        c[13] = c[13] * row
    return TowerSystem(system.params, system.samples, tuple(c), system.cubic)


@dataclass
class SpectrumResult:
    solutions: np.ndarray
    method: str
    candidates: int = 0
    rejected_closure: int = 0
    rejected_null: int = 0
    rejected_trivial: int = 0
    complete: bool = True
    seconds: float = 0.0
    info: dict = field(default_factory=dict)


def diag_spectrum(params: ChainParams, lam_probe: Optional[complex] = None):
    """``x`` for every common eigenvector, read off by diagonalisation.

    Returns ``(x, vectors)`` with ``x`` of shape ``(d^N, N)``.
    """
    if lam_probe is None:
        lam_probe = complex(np.mean(params.xi)) + (0.37 + 0.61j) * abs(params.eta)
    t = transfer(params, lam_probe)
    _, vecs = np.linalg.eig(t)
    inv = np.linalg.inv(vecs)
    x = np.empty((t.shape[0], params.sites), dtype=complex)
    for a in range(params.sites):
        x[:, a] = np.diagonal(inv @ transfer_at_inhomogeneity(params, a) @ vecs)
    return x, vecs


def x_scale(params: ChainParams) -> float:
    """Bound on ``|t1(xi_a)|`` from operator norms."""
    return max(float(np.linalg.norm(transfer_at_inhomogeneity(params, a), 2)) for a in range(params.sites))


def _cluster(points: np.ndarray, tol: float) -> np.ndarray:
    kept: List[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) > tol * (1.0 + np.max(np.abs(q))) for q in kept):
            kept.append(p)
    return np.array(kept).reshape(len(kept), points.shape[1] if points.ndim == 2 else 0)


def solve_spectrum(
    params: ChainParams,
    method: str = "homotopy",
    seed: int = 0,
    tol: float = 1e-8,
    cluster_tol: float = 1e-6,
    starts_per_root: int = 50,
    check_samples: int = 6,
) -> SpectrumResult:
    """Solve for every admissible ``x`` by the requested method.

    ``diag`` diagonalises the transfer matrix. ``newton`` and ``homotopy``
    solve the closure relation imposed at ``N`` sample points and keep the
    solutions that also satisfy the null out-boundary condition at fresh
    points. ``cubic`` handles the twist with ``k1 = 0``, where the system
    reduces to ``x_a t2(xi_a + eta) = 0``.
    """
    require_gl12(params)
    t0 = time.perf_counter()
    n = params.sites
    if method == "diag":
        x, _ = diag_spectrum(params)
        return SpectrumResult(x, method, candidates=len(x), seconds=time.perf_counter() - t0)
    if method not in ("newton", "homotopy", "cubic"):
        raise ArgumentError(f"unknown method {method!r}")
    rng = np.random.default_rng([seed, 0])
    kernel_twist = is_kernel_twist(params)
    if method == "cubic" and not kernel_twist:
        raise ArgumentError("the cubic system needs a twist with k1 = 0 and k2 k3 != 0")
    samples = sample_points(params, n, rng)
    checks = sample_points(params, check_samples, np.random.default_rng([seed, 1]))
    system = build_system(params, [] if method == "cubic" else samples, cubic=(method == "cubic"))
    scale = x_scale(params)
    system = rescale_rows(system, scale, rng)
    if method == "newton":
        count = starts_per_root * 3 ** n
        raw = polysolve.multistart_newton(system, n, count, 2.0 * scale, seed)
    else:
        raw = polysolve.total_degree_homotopy(system, n, system.degree, scale, seed)
    raw = raw[np.all(np.isfinite(raw), axis=1)] if len(raw) else raw.reshape(0, n)
    candidates = _cluster(raw, cluster_tol)
    result = SpectrumResult(np.zeros((0, n), dtype=complex), method, candidates=len(candidates))
    kept = []
    for x in candidates:
        if not kernel_twist and np.max(np.abs(x)) <= 1e-8 * scale:
            result.rejected_trivial += 1
            continue
        if closure_residual(params, x, checks) > tol:
            result.rejected_closure += 1
            continue
        if null_out_residual(params, x, checks) > tol:
            result.rejected_null += 1
            result.info.setdefault("null_rejected", []).append(x)
            continue
        kept.append(x)
    result.solutions = np.array(kept).reshape(len(kept), n)
    result.complete = len(kept) == 3 ** n
    result.seconds = time.perf_counter() - t0
    return result


def match_spectra(a: np.ndarray, b: np.ndarray, tol: float = 1e-8):
    """Greedy one-to-one matching of two lists of ``x`` vectors.

    Returns ``(pairs, worst)`` where ``worst`` is the largest relative
    distance among matched pairs; unmatched entries make ``pairs`` short.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) == 0 or len(b) == 0:
        return [], np.inf
    dist = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)
    scale = np.maximum(1.0, np.maximum(np.max(np.abs(a), axis=1)[:, None], np.max(np.abs(b), axis=1)[None, :]))
    rel = dist / scale
    order = np.dstack(np.unravel_index(np.argsort(rel, axis=None), rel.shape))[0]
    used_a, used_b, pairs = set(), set(), []
    worst = 0.0
    for i, j in order:
        if i in used_a or j in used_b or rel[i, j] > tol:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((int(i), int(j)))
        worst = max(worst, float(rel[i, j]))
    return pairs, worst


def spectra_match(a, b, tol: float = 1e-8) -> bool:
    pairs, _ = match_spectra(a, b, tol)
    return len(pairs) == len(a) == len(b)


def fused_eigenvalue_residual(params: ChainParams, x, vector, probes, levels=(1, 2, 3)) -> float:
    """Compare scalar tower values with operator action on ``vector``."""
    from .fusion import TransferTower

    tower = TransferTower(params)
    st = ScalarTower(params, x)
    worst = 0.0
    for lam in probes:
        for n in levels:
            op = tower.column(n, lam)
            val = st.t(n, lam)
            worst = max(worst, float(np.linalg.norm(op @ vector - val * vector) / max(1.0, np.linalg.norm(op, 2))))
    return worst


def kernel_twist_guard(params: ChainParams):
    if not is_kernel_twist(params):
        raise StructureError("expected the twist with k1 = 0 and an invertible odd block")
    if params.sites > 6:
        raise CapacityError("more than 6 sites is outside the supported range")


def null_level_residual(params: ChainParams, lam) -> float:
    """``|T_3(lam)|`` relative to ``|T_2(lam)|`` as operators; zero for the k1 = 0 twist."""
    from .fusion import TransferTower

    tower = TransferTower(params)
    t3 = tower.column(3, lam)
    t2 = tower.column(2, lam)
    return float(np.abs(t3).max() / max(1.0, np.abs(t2).max()))


__all__ = [
    "GL12",
    "ScalarTower",
    "SpectrumResult",
    "TowerSystem",
    "build_system",
    "closure_residual",
    "match_spectra",
    "null_out_residual",
    "sample_points",
    "scalar_tower",
    "solve_spectrum",
    "spectra_match",
    "t1_poly",
    "twist_constants",
    "ROW",
    "diag_spectrum",
    "fused_eigenvalue_residual",
    "is_kernel_twist",
    "kernel_twist_guard",
    "null_level_residual",
    "x_scale",
]
