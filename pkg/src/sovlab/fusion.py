"""Fused transfer matrices for rectangular Young diagrams.

A diagram with ``a`` columns and ``b`` rows labels ``T_b^(a)``. Columns of
height ``n`` (``a = 1``) use the graded symmetrizer, rows of length ``n``
(``b = 1``) the graded antisymmetrizer. Two independent routes build
them:

* projector route: project ``n`` stacked, shifted monodromies and take
  the supertrace over all auxiliary copies (dense, capped);
* interpolation route: rebuild the polynomial from its central zeros,
  its leading coefficient and its values at the inhomogeneities, which
  reduce to lower levels.

General rectangles come from Bazhanov-Reshetikhin determinants of
columns or of rows.
"""
import itertools
import threading
from typing import Dict, Tuple

import numpy as np

from . import graded
from .chain import ChainParams, apply_r, monodromy, transfer
from .errors import ArgumentError, EvaluationError
from .graded import GradingSignature

COLUMN = "column"
ROW = "row"


def _check_kind(kind):
    if kind not in (COLUMN, ROW):
        raise ArgumentError(f"kind must be '{COLUMN}' or '{ROW}', got {kind!r}")


def projector(sig: GradingSignature, n: int, kind: str = COLUMN, eta: complex = 1.0) -> np.ndarray:
    """Graded (anti)symmetrizer on ``n`` sites built by the R-matrix recursion."""
    _check_kind(kind)
    if n < 1:
        raise ArgumentError("projector needs at least one site")
    d = sig.dim
    graded.check_capacity(d, n)
    p = np.eye(d, dtype=complex)
    sgn = 1.0 if kind == COLUMN else -1.0
    for a in range(2, n + 1):
        lower = np.kron(np.eye(d), p)  # sites 0 .. a-2
        upper = np.kron(p, np.eye(d))  # sites 1 .. a-1
        r = apply_r(sig, a, 0, a - 1, sgn * (a - 1) * eta, eta, upper)
        p = sgn * (lower @ r) / (a * eta)
    return p


def asymptotic_constant(sig: GradingSignature, twist: np.ndarray, n: int, kind: str = COLUMN) -> complex:
    """Supertrace of the projected ``n``-fold twist."""
    if n == 0:
        return 1.0 + 0j
    p = projector(sig, n, kind)
    kn = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        kn = np.kron(twist, kn)
    weights = np.where(graded._site_parities(sig, n).sum(axis=1) % 2, -1.0, 1.0)
    return complex(np.sum(weights * np.diagonal(p @ kn @ p)))


def character_constant(even_values, odd_values, n: int, kind: str = COLUMN) -> complex:
    """Same constant from twist eigenvalues via a supersymmetric generating series.

    Columns: coefficient of ``t^n`` in ``prod(1 - y t) / prod(1 - x t)``.
    Rows: coefficient of ``t^n`` in ``prod(1 + x t) / prod(1 + y t)``.
    """
    _check_kind(kind)
    if kind == COLUMN:
        top, bottom, s = odd_values, even_values, -1.0
    else:
        top, bottom, s = even_values, odd_values, 1.0
    num = np.array([1.0 + 0j])
    for y in top:
        num = np.convolve(num, [1.0, s * y])
    den = np.array([1.0 + 0j])
    for x in bottom:
        den = np.convolve(den, [1.0, s * x])
    num = np.concatenate([num, np.zeros(n + 1)])[: n + 1]
    den = np.concatenate([den, np.zeros(n + 1)])[: n + 1]
    series = np.zeros(n + 1, dtype=complex)
    for k in range(n + 1):
        series[k] = num[k] - sum(den[j] * series[k - j] for j in range(1, k + 1))
    return complex(series[n])


def fused_transfer_projector(params: ChainParams, a: int, b: int, lam) -> np.ndarray:
    """Pure row or column fused transfer matrix from projected monodromies.

    Boxes are read top to bottom, left to right; box ``k`` sits on
    auxiliary copy ``k`` with spectral shift ``eta * (row - column)`` and
    its monodromy multiplies on the left of the earlier boxes.
    """
    if a < 1 or b < 1:
        raise ArgumentError("diagram needs a >= 1 and b >= 1")
    if a > 1 and b > 1:
        raise ArgumentError("projector route covers rows and columns only; use a determinant form")
    sig = params.sig
    kind = COLUMN if a == 1 else ROW
    boxes = b if a == 1 else a
    sites = boxes + params.sites
    size = graded.check_capacity(sig.dim, sites)
    lam = complex(lam)
    step = params.eta if kind == COLUMN else -params.eta
    x = np.eye(size, dtype=complex)
    for k in range(boxes):
        x = monodromy(params, lam + k * step, aux=k, sites=sites, first_quantum=boxes, x=x)
    return projected_supertrace(sig, x, projector(sig, boxes, kind, params.eta), sites, boxes)


def projected_supertrace(sig: GradingSignature, x: np.ndarray, proj: np.ndarray, sites: int, traced: int) -> np.ndarray:
    """Supertrace over the first ``traced`` sites of ``P x P`` for an even projector ``P`` on them.

    Cyclicity under the auxiliary supertrace turns ``P x P`` into ``x P``,
    which contracts without forming dense products on the full space.
    """
    inner = sig.dim ** traced
    outer = sig.dim ** (sites - traced)
    weights = np.where(graded._site_parities(sig, traced).sum(axis=1) % 2, -1.0, 1.0)
    t = x.reshape(outer, inner, outer, inner)
    return np.einsum("kilj,ji,i->kl", t, proj, weights, optimize=True)


def interpolation_weight(params: ChainParams, a: int, m: int, lam, kind: str = COLUMN) -> complex:
    """Lagrange weight at node ``a`` divided by the level-``m`` central zeros at that node."""
    xi, eta = params.xi, params.eta
    s = 1.0 if kind == COLUMN else -1.0
    out = 1.0 + 0j
    for b in range(len(xi)):
        if b != a:
            out *= (lam - xi[b]) / (xi[a] - xi[b])
        for r in range(1, m):
            out /= xi[a] - xi[b] + s * r * eta
    return complex(out)


def central_zeros(params: ChainParams, a: int, b: int, lam) -> complex:
    """Scalar polynomial carried by every ``T_b^(a)``."""
    if a < 1 or b < 1:
        raise ArgumentError("central zeros need a, b >= 1")
    shifts = [l - m for l in range(1, b + 1) for m in range(1, a + 1)]
    shifts.remove(0)
    out = 1.0 + 0j
    for x in params.xi:
        for k in shifts:
            out *= lam - x + k * params.eta
    return complex(out)


def berezinian(params: ChainParams, lam) -> complex:
    """Quantum Berezinian of the twisted monodromy as a scalar function."""
    sig, eta = params.sig, params.eta
    m, n = sig.m, sig.n
    k = params.twist.matrix
    det_even = np.linalg.det(k[:m, :m]) if m else 1.0
    det_odd = np.linalg.det(k[m:, m:]) if n else 1.0

    def d(x):
        return complex(np.prod(x - params.xi))

    num = d(lam + eta)
    for j in range(1, m):
        num *= d(lam - j * eta)
    den = 1.0 + 0j
    for l in range(1 - m, n - m + 1):
        den *= d(lam + l * eta)
    if den == 0 or det_odd == 0:
        raise EvaluationError(f"Berezinian has a pole at lambda={lam}")
    return complex(det_even / det_odd * num / den)


def in_extended_hook(sig: GradingSignature, a: int, b: int) -> bool:
    return not (a > sig.m and b > sig.n)


def saturated_character(sig: GradingSignature, g, a: int, b: int) -> complex:
    """Character of a diagram touching the corner of the fat hook.

    ``g`` lists the diagonal group element, even entries first. Only
    ``(a, b) = (M, N + k)`` or ``(M + k, N)`` with ``k >= 0`` are accepted.
    """
    m, n = sig.m, sig.n
    g = np.asarray(g, dtype=complex)
    if g.shape != (m + n,):
        raise ArgumentError(f"group element needs {m + n} diagonal entries")
    x, y = g[:m], g[m:]
    base = complex(np.prod(x[:, None] - y[None, :])) if m and n else 1.0 + 0j
    if a == m and b >= n:
        return complex(np.prod(x) ** (b - n) * base)
    if b == n and a >= m:
        return complex(np.prod(-y) ** (a - m) * base)
    raise ArgumentError(f"diagram ({a},{b}) does not saturate the ({m}|{n}) hook")


def _leibniz(entries):
    """Determinant of a small matrix of commuting operators."""
    size = len(entries)
    dim = next(e.shape[0] for row in entries for e in row if e is not None)
    total = np.zeros((dim, dim), dtype=complex)
    for perm in itertools.permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        prod = None
        for i, j in enumerate(perm):
            e = entries[i][j]
            if e is None:
                prod = None
                break
            prod = e if prod is None else prod @ e
        else:
            total += (-1) ** inversions * prod
    return total


class TransferTower:
    """Memoised fused transfer matrices for one set of chain parameters.

    ``route`` picks how pure rows and columns are produced; rectangles
    always go through a determinant. Cache access is guarded by a lock so
    one tower can be shared between threads.
    """

    def __init__(self, params: ChainParams, route: str = "interpolation"):
        if route not in ("interpolation", "projector"):
            raise ArgumentError(f"unknown route {route!r}")
        self.params = params
        self.route = route
        self._cache: Dict[Tuple, np.ndarray] = {}
        self._lock = threading.RLock()
        self.size = params.dim ** params.sites

    def _memo(self, key, build):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = build()
        with self._lock:
            self._cache.setdefault(key, value)
            return self._cache[key]

    def identity(self):
        return np.eye(self.size, dtype=complex)

    def t1(self, lam) -> np.ndarray:
        lam = complex(lam)
        return self._memo(("t1", lam), lambda: transfer(self.params, lam))

    def asymptotic(self, n: int, kind: str = COLUMN) -> complex:
        return self._memo(
            ("inf", kind, n),
            lambda: asymptotic_constant(self.params.sig, self.params.twist.matrix, n, kind),
        )

    def fused(self, n: int, lam, kind: str = COLUMN) -> np.ndarray:
        """``T_n`` (column) or ``T_(n)`` (row); ``n = 0`` is the identity."""
        _check_kind(kind)
        if n < 0:
            raise ArgumentError("level must be non-negative")
        lam = complex(lam)
        if n == 0:
            return self.identity()
        if n == 1:
            return self.t1(lam)
        if self.route == "projector":
            a, b = (1, n) if kind == COLUMN else (n, 1)
            return self._memo(("proj", kind, n, lam), lambda: fused_transfer_projector(self.params, a, b, lam))
        return self._memo(("interp", kind, n, lam), lambda: self._interpolate(n, lam, kind))

    def column(self, n: int, lam) -> np.ndarray:
        return self.fused(n, lam, COLUMN)

    def row(self, n: int, lam) -> np.ndarray:
        return self.fused(n, lam, ROW)

    def _interpolate(self, n: int, lam, kind: str) -> np.ndarray:
        p = self.params
        s = 1.0 if kind == COLUMN else -1.0
        prefactor = 1.0 + 0j
        for r in range(1, n):
            prefactor *= np.prod(lam + s * r * p.eta - p.xi)
        out = self.asymptotic(n, kind) * np.prod(lam - p.xi) * self.identity()
        for a, x in enumerate(p.xi):
            w = interpolation_weight(p, a, n, lam, kind)
            out = out + w * (self.fused(n - 1, x + s * p.eta, kind) @ self.t1(x))
        return prefactor * out

    def rect(self, a: int, b: int, lam, form: int = 1) -> np.ndarray:
        """``T_b^(a)`` from the column (``form=1``) or row (``form=2``) determinant."""
        if a < 0 or b < 0:
            raise ArgumentError("diagram sizes must be non-negative")
        if a == 0 and b == 0:
            raise ArgumentError("the empty diagram (0,0) is not defined")
        if a == 0 or b == 0:
            return self.identity()
        lam = complex(lam)
        eta = self.params.eta
        if form == 1:
            def entry(i, j):
                k = b + i - j
                return None if k < 0 else self.fused(k, lam - i * eta, COLUMN)
            size = a
        elif form == 2:
            def entry(i, j):
                k = a + i - j
                return None if k < 0 else self.fused(k, lam + i * eta, ROW)
            size = b
        else:
            raise ArgumentError("form must be 1 or 2")
        return _leibniz([[entry(i, j) for j in range(size)] for i in range(size)])


def _relative(diff, *terms):
    scale = max([1.0] + [float(np.abs(t).max()) for t in terms])
    return float(np.abs(diff).max() / scale)


def bilinear_residual(tower: TransferTower, a: int, b: int, lam, form: int = 1) -> float:
    """Residual of ``T(l-eta)T(l) = T_{b+1}(l-eta)T_{b-1}(l) + T^{(a-1)}(l-eta)T^{(a+1)}(l)``."""
    if a < 1 or b < 1:
        raise ArgumentError("bilinear identity needs a, b >= 1")
    eta = tower.params.eta

    def t(aa, bb, x):
        return tower.rect(aa, bb, x, form)

    lhs = t(a, b, lam - eta) @ t(a, b, lam)
    r1 = t(a, b + 1, lam - eta) @ t(a, b - 1, lam)
    r2 = t(a - 1, b, lam - eta) @ t(a + 1, b, lam)
    return _relative(lhs - r1 - r2, lhs, r1, r2)


def inner_boundary_residual(tower: TransferTower, lam) -> float:
    """Residual of ``(-1)^N Ber(l) T_N^(M+1)(l+eta) = T_{N+1}^(M)(l)``."""
    sig = tower.params.sig
    m, n = sig.m, sig.n
    eta = tower.params.eta
    form_left = 1 if m + 1 <= n else 2
    form_right = 1 if m <= n + 1 else 2
    lhs = (-1) ** n * berezinian(tower.params, lam) * tower.rect(m + 1, n, lam + eta, form_left)
    rhs = tower.rect(m, n + 1, lam, form_right)
    return _relative(lhs - rhs, lhs, rhs)


def determinant_forms_residual(tower: TransferTower, a: int, b: int, lam) -> float:
    t1 = tower.rect(a, b, lam, 1)
    t2 = tower.rect(a, b, lam, 2)
    return _relative(t1 - t2, t1, t2)


def superdeterminant(sig: GradingSignature, g) -> complex:
    g = np.asarray(g, dtype=complex)
    return complex(np.prod(g[: sig.m]) / np.prod(g[sig.m :]))


def character_relation_residual(sig: GradingSignature, g, k: int) -> float:
    """Relative gap in ``chi^(M)_{N+k} = (-1)^{kN} sdet(g)^k chi^(M+k)_N``."""
    if k < 1:
        raise ArgumentError("the relation needs k >= 1")
    lhs = saturated_character(sig, g, sig.m, sig.n + k)
    rhs = (-1) ** (k * sig.n) * superdeterminant(sig, g) ** k * saturated_character(sig, g, sig.m + k, sig.n)
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))
