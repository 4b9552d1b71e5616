"""Closed-form gl(1|2) spectrum for two sites with ``xi_1 = 0``.

Each eigenvalue of the transfer matrix is a quadratic
``strK lam^2 + b lam + c``. The nine values of ``(t(xi_2), t(0))``
follow from it, since ``t(xi_2) = strK xi_2^2 + b xi_2 + c``.
"""
import time
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .chain import ChainParams, diagonal_twist, make_params, transfer
from .gl12 import GL12, diag_spectrum, match_spectra, solve_spectrum


def _mixed(ka, kb, eta, xi2, root_sign):
    disc = np.sqrt(4 * ka * kb * eta ** 2 + (ka - kb) ** 2 * xi2 ** 2)
    return (ka + kb) * eta, 0.5 * eta * (-(ka + kb) * xi2 + root_sign * disc)


def closed_form_polynomials(eta, xi2, k) -> List[Tuple[complex, complex, complex]]:
    """``(strK, b, c)`` for the nine eigenvalues, in a fixed order."""
    k1, k2, k3 = (complex(v) for v in k)
    eta, xi2 = complex(eta), complex(xi2)
    strk = k1 - k2 - k3
    out = [
        (strk, 2 * eta * k1 - strk * xi2, k1 * eta * (eta - xi2)),
        (strk, 2 * eta * k2 - strk * xi2, -k2 * eta * (eta + xi2)),
        (strk, 2 * eta * k3 - strk * xi2, -k3 * eta * (eta + xi2)),
    ]
    for ka, kb in ((k1, k2), (k1, k3), (k2, k3)):
        for sign in (-1, 1):
            lin, const = _mixed(ka, kb, eta, xi2, sign)
            out.append((strk, lin - strk * xi2, const))
    return out


def closed_form_pairs(eta, xi2, k) -> np.ndarray:
    """``(t(xi_2), t(0))`` for the nine eigenvalues, written out directly.

    Same order as :func:`closed_form_polynomials`. The single-``k`` rows
    for ``k2``, ``k3`` carry a minus sign on both entries.
    """
    k1, k2, k3 = (complex(v) for v in k)
    eta, xi2 = complex(eta), complex(xi2)
    rows = [
        (k1 * eta * (eta + xi2), k1 * eta * (eta - xi2)),
        (-k2 * eta * (eta - xi2), -k2 * eta * (eta + xi2)),
        (-k3 * eta * (eta - xi2), -k3 * eta * (eta + xi2)),
    ]
    for ka, kb in ((k1, k2), (k1, k3), (k2, k3)):
        disc = np.sqrt(4 * ka * kb * eta ** 2 + (ka - kb) ** 2 * xi2 ** 2)
        for sign in (-1, 1):
            s = (ka + kb) * xi2
            rows.append((0.5 * eta * (s + sign * disc), -0.5 * eta * (s - sign * disc)))
    return np.array(rows)


def pairs_from_polynomials(polys, xi2) -> np.ndarray:
    return np.array([(a * xi2 ** 2 + b * xi2 + c, c) for a, b, c in polys])


@dataclass
class TwoSiteReport:
    pair_consistency: float
    diag_vs_closed: float
    solver_vs_closed: float
    polynomial_vs_operator: float
    matched_diag: int
    matched_solver: int
    seconds: float
    rows: list = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max(self.pair_consistency, self.diag_vs_closed, self.solver_vs_closed, self.polynomial_vs_operator)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.worst < tol and self.matched_diag == 9 and self.matched_solver == 9


def default_fixture() -> ChainParams:
    return make_params(GL12, 0.7 + 0.2j, np.array([0.0, 1.1 - 0.3j]), diagonal_twist(GL12, [1.3, -0.8 + 0.5j, 2.1j]))


def reproduce(params: ChainParams = None, method: str = "homotopy", seed: int = 0, probes=None) -> TwoSiteReport:
    """Compare the closed forms with diagonalisation and with the polynomial solver.

    ``params`` must be a two-site gl(1|2) chain with ``xi_1 = 0`` and a
    diagonal twist.
    """
    t0 = time.perf_counter()
    p = default_fixture() if params is None else params
    if p.sites != 2 or abs(p.xi[0]) != 0:
        raise ValueError("closed forms need two sites with xi_1 = 0")
    if not np.allclose(p.twist.matrix, np.diag(np.diagonal(p.twist.matrix))):
        raise ValueError("closed forms need a diagonal twist")
    k = np.diagonal(p.twist.matrix)
    xi2 = p.xi[1]
    polys = closed_form_polynomials(p.eta, xi2, k)
    pairs = closed_form_pairs(p.eta, xi2, k)
    from_polys = pairs_from_polynomials(polys, xi2)
    scale = max(1.0, float(np.abs(pairs).max()))
    consistency = float(np.abs(pairs - from_polys).max() / scale)
    # solver order is (t(xi_1), t(xi_2)); closed forms list t(xi_2) first
    closed = pairs[:, ::-1]
    diag_x, _ = diag_spectrum(p)
    dpairs, dworst = match_spectra(closed, diag_x, tol=1e-6)
    sol = solve_spectrum(p, method, seed=seed)
    spairs, sworst = match_spectra(closed, sol.solutions, tol=1e-6) if len(sol.solutions) else ([], np.inf)
    if probes is None:
        probes = [0.37 - 0.2j, -0.9 + 0.45j, 1.3 + 0.8j]
    op_worst = 0.0
    for lam in probes:
        ev = np.linalg.eigvals(transfer(p, lam))
        vals = np.array([[a * lam ** 2 + b * lam + c] for a, b, c in polys])
        mp, w = match_spectra(vals, ev[:, None], tol=1e-6)
        op_worst = max(op_worst, w if len(mp) == 9 else np.inf)
    rows = [
        {"t_xi2": complex(pairs[i, 0]), "t_0": complex(pairs[i, 1]), "strK": polys[i][0], "b": polys[i][1], "c": polys[i][2]}
        for i in range(9)
    ]
    return TwoSiteReport(
        consistency,
        float(dworst) if len(dpairs) == 9 else float("inf"),
        float(sworst) if len(spairs) == 9 else float("inf"),
        float(op_worst),
        len(dpairs),
        len(spairs),
        time.perf_counter() - t0,
        rows,
    )
