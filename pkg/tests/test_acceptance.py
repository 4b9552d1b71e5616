"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed at the end of the pytest run, and also when this
file is executed directly.
"""
import time

import numpy as np
import pytest

from sovlab.twosite import reproduce
from sovlab.chain import diagonal_twist, make_params, scalar_ybe_residual, transfer, ybe_residual
from sovlab.errors import StructureError
from sovlab.fusion import (
    TransferTower,
    bilinear_residual,
    character_relation_residual,
    determinant_forms_residual,
    inner_boundary_residual,
)
from sovlab.gl12 import diag_spectrum, match_spectra, solve_spectrum, t1_poly
from sovlab.graded import GradingSignature, linear_to_digits
from sovlab.hubbard import (
    commutator_residual,
    crossing_residuals,
    hubbard_sov_rank,
    make_hubbard,
    shastry_r,
    site_swap,
    twist_family,
    unitarity_residual,
)
from sovlab.hubbard import ybe_residual as shastry_ybe
from sovlab.qsc import (
    admissible,
    bethe_extract,
    bethe_residuals,
    isospectrality_residual,
    naba_checks,
    probe_points,
    proportionality_residual,
    qsc_find,
    qsc_wavefunction,
    solve_bethe,
)
from sovlab.sov import eigenvector_residual, reconstruct_eigenvector, sov_covectors, sov_wavefunction

from conftest import ACCEPTANCE, GL12, SIGNATURES, crandn, random_chain

ETA = 0.7 + 0.2j


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def gen(n):
    return np.random.default_rng([2024, n])


def kernel_chain(rng, sites):
    k = crandn(rng, 3)
    k[0] = 0
    return make_params(GL12, ETA, crandn(rng, sites), diagonal_twist(GL12, k))


def rel(a, b):
    return float(np.abs(a - b).max() / max(1.0, np.abs(a).max(), np.abs(b).max()))


def test_criterion_01_graded_ybe():
    rng = gen(1)
    worst = 0.0
    for sig in SIGNATURES:
        for lam, mu in crandn(rng, 20, 2):
            worst = max(worst, ybe_residual(sig, lam, mu, ETA))
    record(1, worst < 1e-12, f"graded YBE worst {worst:.1e} over 4 signatures x 20 pairs")


def test_criterion_02_two_site_closed_forms():
    t0 = time.perf_counter()
    rep = reproduce()
    dt = time.perf_counter() - t0
    ok = rep.passed(1e-9) and dt < 5
    record(2, ok, f"closed forms vs solver/diag worst {rep.worst:.1e}, matched {rep.matched_solver}/9, {dt:.2f}s")


def test_criterion_03_closure_and_null_out():
    rng = gen(3)
    lines, ok, n3_time = [], True, 0.0
    for sites in (1, 2, 3):
        for draw in range(3):
            p = random_chain(GL12, sites, rng, eta=ETA)
            t0 = time.perf_counter()
            res = solve_spectrum(p, "homotopy", seed=draw)
            dt = time.perf_counter() - t0
            if sites == 3:
                n3_time += dt
            pairs, worst = match_spectra(res.solutions, diag_spectrum(p)[0], 1e-7)
            good = res.complete and len(res.solutions) == 3 ** sites and len(pairs) == 3 ** sites and worst < 1e-7
            ok &= good
            lines.append(f"N={sites}:{len(res.solutions)}")
    ok &= n3_time < 120
    record(3, ok, f"accepted counts {' '.join(lines)}; N=3 total {n3_time:.1f}s")


def test_criterion_04_kernel_twist_cubic_and_eigenvectors():
    rng = gen(4)
    ok, worst_vec, worst_t3 = True, 0.0, 0.0
    for sites in (1, 2, 3):
        p = kernel_chain(rng, sites)
        res = solve_spectrum(p, "cubic", seed=0)
        pairs, _ = match_spectra(res.solutions, diag_spectrum(p)[0], 1e-8)
        ok &= len(res.solutions) == len(pairs) == 3 ** sites
        tower = TransferTower(p)
        for lam in crandn(rng, 5):
            worst_t3 = max(worst_t3, float(np.linalg.norm(tower.column(3, lam), 2)))
        basis = sov_covectors(p)
        probes = crandn(rng, 2)
        for x in res.solutions:
            v = reconstruct_eigenvector(basis, x)
            for lam in probes:
                worst_vec = max(worst_vec, eigenvector_residual(transfer(p, lam), v, t1_poly(p, x, lam)))
    ok &= worst_t3 < 1e-10 and worst_vec < 1e-7
    record(4, ok, f"cubic counts ok={ok}, |T3| max {worst_t3:.1e}, eigenvector residual {worst_vec:.1e}")


def _kernel_spectra():
    rng = gen(5)
    for sites in (1, 2, 3):
        p = kernel_chain(rng, sites)
        yield p, diag_spectrum(p)[0], probe_points(p, 3 * sites + 3, rng)


def test_criterion_05_difference_equation():
    worst_q, worst_w, ok = 0.0, 0.0, True
    for p, xs, probes in _kernel_spectra():
        labels = [linear_to_digits(i, 3, p.sites) for i in range(3 ** p.sites)]
        for x in xs:
            sol = qsc_find(p, x, probes=probes)
            roots = sol.roots()
            ok &= sol.degree <= p.sites
            if len(roots):
                ok &= np.min(np.abs(roots[:, None] - p.xi[None, :])) > 1e-8
            worst_q = max(worst_q, sol.residual)
            worst_w = max(worst_w, proportionality_residual(qsc_wavefunction(p, sol, labels), sov_wavefunction(-x, labels)))
    ok &= worst_q < 1e-8 and worst_w < 1e-7
    record(5, ok, f"difference equation {worst_q:.1e}, wavefunction {worst_w:.1e}")


def test_criterion_06_bethe_completeness():
    ok, worst, counts = True, 0.0, []
    for p, xs, probes in _kernel_spectra():
        keys = set()
        for x in xs:
            roots = bethe_extract(p, x, qsc_find(p, x, probes=probes))
            worst = max(worst, float(np.max(bethe_residuals(p, roots), initial=0.0)))
            ok &= admissible(p, roots)
            keys.add((tuple(np.round(np.sort_complex(roots.lam), 8)), tuple(np.round(np.sort_complex(roots.mu), 8))))
        counts.append(f"{len(keys)}/{3 ** p.sites}")
        ok &= len(keys) == 3 ** p.sites
    ok &= worst < 1e-8
    record(6, ok, f"Bethe residual {worst:.1e}, distinct {' '.join(counts)}")


def test_criterion_07_sov_basis_rank():
    # fixed seeded draws; see the README note on conditioning
    rng = gen(7)
    worst, ratios = np.inf, []
    for sites in (1, 2, 3):
        for kernel in (False, True):
            k = crandn(rng, 3)
            if kernel:
                k[0] = 0
            xi = crandn(rng, sites)
            p = make_params(GL12, ETA, xi, diagonal_twist(GL12, k))
            worst = min(worst, sov_covectors(p, rank_tol=None).rank_ratio)
            generic = sov_covectors(p, rank_tol=None).log_abs_det
            k_deg = k.copy()
            k_deg[2] = k_deg[1]
            q = make_params(GL12, ETA, xi, diagonal_twist(GL12, k_deg))
            ratios.append(sov_covectors(q, rank_tol=None).log_abs_det - generic)
    drop = max(ratios) / np.log(10)
    ok = worst > 1e-8 and drop < -10
    record(7, ok, f"min sigma ratio {worst:.1e}; degenerate |det| / generic <= 1e{drop:.0f}")


def test_criterion_08_fusion():
    rng = gen(8)
    routes = bil = inner = forms = 0.0
    for sites in (1, 2):
        p = random_chain(GL12, sites, rng)
        interp, proj = TransferTower(p, "interpolation"), TransferTower(p, "projector")
        for lam in crandn(rng, 3):
            routes = max(routes, rel(interp.column(2, lam), proj.column(2, lam)), rel(interp.row(2, lam), proj.row(2, lam)))
            for a, b in [(1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]:
                for form in (1, 2):
                    bil = max(bil, bilinear_residual(interp, a, b, lam, form))
            inner = max(inner, inner_boundary_residual(interp, lam))
            for a, b in [(2, 2), (2, 1), (3, 2)]:
                forms = max(forms, determinant_forms_residual(interp, a, b, lam))
    char = max(character_relation_residual(sig, crandn(rng, sig.dim), k) for sig in SIGNATURES for k in (1, 2, 3))
    ok = max(routes, bil, inner, forms) < 1e-8 and char < 1e-12
    record(8, ok, f"routes {routes:.1e}, bilinear {bil:.1e}, inner {inner:.1e}, forms {forms:.1e}, character {char:.1e}")


def test_criterion_09_nested_bethe_general_twist():
    rng = gen(9)
    p = make_params(GL12, ETA, crandn(rng, 2), diagonal_twist(GL12, crandn(rng, 3)))
    sols = solve_bethe(p, 1, 1, seed=0, starts=60)
    if not sols:
        record(9, False, "no converged Bethe solution")
    rep = naba_checks(p, sols[0], crandn(rng, 4))
    ok = max(rep.closure, rep.null_out, rep.t2_lambda_form, rep.t3_lambda_form) < 1e-8
    record(9, ok, f"closure {rep.closure:.1e}, null-out {rep.null_out:.1e}, t2 {rep.t2_lambda_form:.1e}, t3 {rep.t3_lambda_form:.1e}")


def test_criterion_10_gl3_isospectrality():
    rng = gen(10)
    worst = 0.0
    for sites in (1, 2):
        p = kernel_chain(rng, sites)
        probes = crandn(rng, 3)
        worst = max(worst, isospectrality_residual(p, probes, 1), isospectrality_residual(p, probes, 2))
    record(10, worst < 1e-8, f"spectral mismatch {worst:.1e} at levels 1 and 2")


def test_criterion_11_hubbard():
    rng = gen(11)
    eta = -1.6j
    swap = ybe = uni = scal = cross = 0.0
    for lam, mu, xi in 0.4 * crandn(rng, 10, 3):
        swap = max(swap, float(np.abs(shastry_r(lam, lam, eta) - site_swap()).max()))
        ybe = max(ybe, shastry_ybe(lam, mu, xi, eta))
        uni = max(uni, unitarity_residual(lam, mu, eta))
        cross = max(cross, *crossing_residuals(lam, mu, eta))
        kk = np.kron(*(2 * [twist_family(1, *crandn(rng, 3))]))
        r = shastry_r(lam, mu, eta)
        scal = max(scal, rel(kk @ r, r @ kk))
    p2 = make_hubbard(eta, 0.4 * crandn(rng, 2), 1, *crandn(rng, 3))
    comm = commutator_residual(p2, *(0.4 * crandn(rng, 2)))
    ranks = []
    for family in (1, 2, 3):
        for sites in (1, 2):
            ranks.append(hubbard_sov_rank(make_hubbard(eta, 0.4 * crandn(rng, sites), family, *crandn(rng, 3))).rank_ratio)
    try:
        hubbard_sov_rank(make_hubbard(eta, [0.2], 4, *crandn(rng, 3)))
        rejected = False
    except StructureError:
        rejected = True
    ok = swap < 1e-12 and max(ybe, uni, scal) < 1e-10 and cross < 1e-8 and comm < 1e-9 and min(ranks) > 1e-8 and rejected
    record(
        11,
        ok,
        f"swap {swap:.1e}, YBE {ybe:.1e}, unitarity {uni:.1e}, twist symmetry {scal:.1e}, crossing {cross:.1e}, "
        f"commutator {comm:.1e}, min rank ratio {min(ranks):.1e}, family 4 rejected={rejected}",
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
