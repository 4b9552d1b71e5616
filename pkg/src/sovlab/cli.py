"""Command line entry point: ``sovlab <command> [options]``.

Every run writes ``<out>/<run-id>/config.json``, ``report.json`` and
``tables/*.csv``. Exit status: 0 all checks pass, 1 a residual check
failed, 2 bad configuration, 3 capacity exceeded or incomplete solve.
"""
import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import config as cfgmod
from .errors import (
    ArgumentError,
    BasisError,
    CapacityError,
    ConfigError,
    EvaluationError,
    InconsistencyError,
    ParameterError,
    StructureError,
)

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3

VERIFY_TARGETS = ("ybe", "fusion", "inner-boundary", "shastry")
METHODS = ("auto", "homotopy", "newton", "cubic", "diag")


@dataclass
class Outcome:
    """Checks, tables and extra facts gathered by one command."""

    checks: Dict[str, dict] = field(default_factory=dict)
    tables: Dict[str, tuple] = field(default_factory=dict)
    info: Dict[str, object] = field(default_factory=dict)
    complete: bool = True
    timings: Dict[str, float] = field(default_factory=dict)

    def check(self, name: str, value: float, tol: float, below: bool = True):
        """Record ``value`` against ``tol``; ``below=False`` means the value must exceed it."""
        value = float(value)
        ok = value < tol if below else value > tol
        self.checks[name] = {"value": value, "tol": tol, "passed": bool(ok and not math.isnan(value))}

    def flag(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = {"passed": bool(ok), "detail": detail}

    def table(self, name: str, header: Sequence[str], rows: List[Sequence]):
        self.tables[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def format_csv_value(v) -> str:
    if isinstance(v, (complex, np.complexfloating)):
        z = complex(v)
        return f"{z.real:.17g}{z.imag:+.17g}j"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def jsonable(v):
    """Report values: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return [jsonable(float(v.real)), jsonable(float(v.imag))]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _triples(points: np.ndarray):
    return [tuple(points[i : i + 3]) for i in range(0, len(points) - 2, 3)]


# commands ------------------------------------------------------------


def run_verify(cfg: cfgmod.RunConfig, args) -> Outcome:
    target = args.target
    out = Outcome()
    tol = cfg.tolerances["residual"]
    pts = cfg.probes
    if target == "shastry":
        from .hubbard import shastry_checks

        p = cfg.hubbard_params()
        rows = []
        for lam, mu, nu in _triples(pts):
            try:
                r = shastry_checks(lam, mu, nu, p.eta, p.branch)
            except EvaluationError as exc:
                raise EvaluationError(f"{exc} at (lambda, mu) = ({lam:.6g}, {mu:.6g})") from exc
            rows.append([lam, mu, nu, r.coincident, r.ybe, r.unitarity, r.crossing_aux, r.crossing_quantum, r.lax_limit])
        out.table("shastry", ["lambda", "mu", "nu", "coincident", "ybe", "unitarity", "crossing_aux", "crossing_quantum", "lax_limit"], rows)
        for j, name in enumerate(["coincident", "ybe", "unitarity", "crossing_aux", "crossing_quantum", "lax_limit"]):
            out.check(name, max(r[3 + j] for r in rows), tol)
        return out

    from .chain import scalar_ybe_residual, ybe_residual
    from .fusion import (
        TransferTower,
        bilinear_residual,
        character_relation_residual,
        determinant_forms_residual,
        inner_boundary_residual,
    )

    p = cfg.gl_params()
    if target == "ybe":
        rows = []
        for lam, mu, _ in _triples(pts):
            rows.append([lam, mu, ybe_residual(p.sig, lam, mu, p.eta), scalar_ybe_residual(p.sig, p.twist.matrix, lam, p.eta)])
        out.table("ybe", ["lambda", "mu", "ybe", "scalar_ybe"], rows)
        out.check("ybe", max(r[2] for r in rows), tol)
        out.check("scalar_ybe", max(r[3] for r in rows), tol)
    elif target == "fusion":
        interp = TransferTower(p, "interpolation")
        proj = TransferTower(p, "projector")
        rows = []
        for lam in pts[: cfg.data["samples"]]:
            routes = max(
                float(np.abs(interp.column(2, lam) - proj.column(2, lam)).max() / max(1.0, np.abs(proj.column(2, lam)).max())),
                float(np.abs(interp.row(2, lam) - proj.row(2, lam)).max() / max(1.0, np.abs(proj.row(2, lam)).max())),
            )
            rows.append([lam, routes, bilinear_residual(interp, 1, 1, lam), bilinear_residual(interp, 2, 2, lam), determinant_forms_residual(interp, 2, 2, lam)])
        out.table("fusion", ["lambda", "route_agreement", "bilinear_1_1", "bilinear_2_2", "determinant_forms_2_2"], rows)
        for j, name in enumerate(["route_agreement", "bilinear_1_1", "bilinear_2_2", "determinant_forms_2_2"]):
            out.check(name, max(r[1 + j] for r in rows), tol)
        g = np.concatenate([p.twist.even_eigenvalues, p.twist.odd_eigenvalues])
        chars = [[k, character_relation_residual(p.sig, g, k)] for k in (1, 2, 3)]
        out.table("character", ["k", "residual"], chars)
        out.check("character_relation", max(r[1] for r in chars), tol)
    elif target == "inner-boundary":
        tower = TransferTower(p)
        rows = [[lam, inner_boundary_residual(tower, lam)] for lam in pts[: cfg.data["samples"]]]
        out.table("inner_boundary", ["lambda", "residual"], rows)
        out.check("inner_boundary", max(r[1] for r in rows), tol)
    else:
        raise ArgumentError(f"unknown verify target {target!r}")
    return out


def _spectrum_method(params, requested: Optional[str]) -> str:
    from .gl12 import is_kernel_twist

    if requested in (None, "auto"):
        return "cubic" if is_kernel_twist(params) else "homotopy"
    return requested


def run_spectrum(cfg: cfgmod.RunConfig, args) -> Outcome:
    from .chain import transfer
    from .gl12 import closure_residual, diag_spectrum, is_kernel_twist, match_spectra, null_out_residual, solve_spectrum, t1_poly
    from .sov import eigenvector_residual, reconstruct_eigenvector, sov_covectors

    p = _gl12(cfg)
    tol = cfg.tolerances
    out = Outcome()
    method = _spectrum_method(p, args.method)
    t0 = time.perf_counter()
    res = solve_spectrum(p, method, seed=cfg.seed, tol=tol["residual"], cluster_tol=tol["cluster"])
    out.timings["solve"] = time.perf_counter() - t0
    target = 3 ** p.sites
    out.info.update(
        method=method,
        expected=target,
        found=len(res.solutions),
        candidates=res.candidates,
        rejected_closure=res.rejected_closure,
        rejected_null=res.rejected_null,
        rejected_trivial=res.rejected_trivial,
    )
    out.complete = len(res.solutions) == target
    diag_x, _ = diag_spectrum(p)
    pairs, worst = match_spectra(res.solutions, diag_x, tol=tol["cluster"])
    match_of = dict(pairs)
    out.flag("count", len(res.solutions) == target, f"{len(res.solutions)} of {target}")
    out.flag("all_matched", len(pairs) == len(res.solutions) == target, f"{len(pairs)} matched")
    out.check("diag_match", worst if pairs else float("inf"), tol["residual"])
    basis = sov_covectors(p, cfg.gl_source(), rank_tol=tol["rank"])
    probes = cfg.probes[: cfg.data["samples"]]
    lam_e = probes[0]
    t_op = transfer(p, lam_e)
    kernel = is_kernel_twist(p)
    header = ["index"] + [f"x{a}" for a in range(p.sites)] + ["closure", "null_out", "diag_distance", "eigenvector"]
    if kernel:
        header += ["phi_degree", "phi_roots", "qsc", "bethe", "admissible"]
        from .qsc import admissible, bethe_extract, bethe_residuals, qsc_find

    rows = []
    worst_eig = worst_closure = worst_null = 0.0
    worst_qsc = worst_bethe = 0.0
    all_admissible = True
    for i, x in enumerate(res.solutions):
        c = closure_residual(p, x, probes)
        nl = null_out_residual(p, x, probes)
        dist = float(np.max(np.abs(x - diag_x[match_of[i]]))) if i in match_of else float("inf")
        v = reconstruct_eigenvector(basis, x)
        ev = eigenvector_residual(t_op, v, t1_poly(p, x, lam_e))
        row = [i] + list(x) + [c, nl, dist, ev]
        worst_eig, worst_closure, worst_null = max(worst_eig, ev), max(worst_closure, c), max(worst_null, nl)
        if kernel:
            sol = qsc_find(p, x, tol=tol["residual"])
            roots = bethe_extract(p, x, sol)
            b = float(np.max(bethe_residuals(p, roots), initial=0.0))
            adm = admissible(p, roots)
            worst_qsc, worst_bethe = max(worst_qsc, sol.residual), max(worst_bethe, b)
            all_admissible &= adm
            row += [sol.degree, " ".join(format_csv_value(r) for r in sol.roots()), sol.residual, b, adm]
        rows.append(row)
    out.table("solutions", header, rows)
    out.check("closure", worst_closure, tol["residual"])
    out.check("null_out", worst_null, tol["residual"])
    out.check("eigenvector", worst_eig, 1e-7 if tol["residual"] < 1e-7 else tol["residual"])
    out.check("sov_rank", basis.rank_ratio, tol["rank"], below=False)
    if kernel:
        out.check("qsc", worst_qsc, tol["residual"])
        out.check("bethe", worst_bethe, tol["residual"])
        out.flag("admissible", all_admissible)
    return out


def _gl12(cfg):
    from .gl12 import require_gl12

    p = cfg.gl_params()
    try:
        require_gl12(p)
    except (StructureError, ArgumentError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    return p


def run_qsc(cfg: cfgmod.RunConfig, args) -> Outcome:
    from .gl12 import diag_spectrum, kernel_twist_guard, solve_spectrum
    from .graded import linear_to_digits
    from .qsc import (
        admissible,
        bethe_extract,
        bethe_residuals,
        isospectrality_residual,
        probe_points,
        proportionality_residual,
        qsc_find,
        qsc_wavefunction,
    )
    from .sov import sov_wavefunction

    p = _gl12(cfg)
    try:
        kernel_twist_guard(p)
    except StructureError as exc:
        raise ConfigError(f"twist: {exc}") from exc
    tol = cfg.tolerances["residual"]
    out = Outcome()
    method = _spectrum_method(p, args.method)
    if method == "diag":
        xs, _ = diag_spectrum(p)
    else:
        res = solve_spectrum(p, method, seed=cfg.seed, tol=tol, cluster_tol=cfg.tolerances["cluster"])
        xs = res.solutions
    n = p.sites
    out.complete = len(xs) == 3 ** n
    probes = probe_points(p, 3 * n + 3, np.random.default_rng([cfg.seed, 5]))
    labels = [linear_to_digits(i, 3, n) for i in range(3 ** n)]
    rows, keys = [], set()
    worst = {"qsc": 0.0, "wavefunction": 0.0, "bethe": 0.0}
    ok_adm = True
    for i, x in enumerate(xs):
        sol = qsc_find(p, x, probes=probes, tol=tol)
        prop = proportionality_residual(qsc_wavefunction(p, sol, labels), sov_wavefunction(-x, labels))
        roots = bethe_extract(p, x, sol)
        b = float(np.max(bethe_residuals(p, roots), initial=0.0))
        adm = admissible(p, roots)
        ok_adm &= adm
        keys.add((tuple(np.round(np.sort_complex(roots.lam), 8)), tuple(np.round(np.sort_complex(roots.mu), 8))))
        worst["qsc"] = max(worst["qsc"], sol.residual)
        worst["wavefunction"] = max(worst["wavefunction"], prop)
        worst["bethe"] = max(worst["bethe"], b)
        rows.append(
            [i] + list(x) + [sol.degree, sol.alpha_bar, " ".join(format_csv_value(r) for r in sol.roots()), sol.residual, prop,
                             " ".join(format_csv_value(r) for r in roots.lam), " ".join(format_csv_value(r) for r in roots.mu), b, adm]
        )
    out.table(
        "qsc",
        ["index"] + [f"x{a}" for a in range(n)] + ["phi_degree", "alpha_bar", "phi_roots", "qsc", "wavefunction", "lambda_roots", "mu_roots", "bethe", "admissible"],
        rows,
    )
    out.check("qsc", worst["qsc"], tol)
    out.check("wavefunction", worst["wavefunction"], max(tol, 1e-7))
    out.check("bethe", worst["bethe"], tol)
    out.flag("admissible", ok_adm)
    out.flag("distinct_bethe", len(keys) == 3 ** n, f"{len(keys)} distinct of {3 ** n}")
    if n <= 2:
        iso_pts = cfg.probes[:3]
        iso = [[lvl, isospectrality_residual(p, iso_pts, lvl)] for lvl in (1, 2)]
        out.table("isospectrality", ["level", "residual"], iso)
        out.check("isospectrality", max(r[1] for r in iso), tol)
    return out


def _hubbard_rank(out: Outcome, p, cfg):
    from .hubbard import hubbard_sov_rank

    try:
        basis = hubbard_sov_rank(p, cfg.hubbard_source(), rank_tol=cfg.tolerances["rank"])
    except (StructureError, BasisError) as exc:
        out.flag("sov_rank", False, str(exc))
        out.info["sov_rank_rejected"] = str(exc)
        return
    out.check("sov_rank", basis.rank_ratio, cfg.tolerances["rank"], below=False)


def run_sov_rank(cfg: cfgmod.RunConfig, args) -> Outcome:
    out = Outcome()
    if cfg.model == cfgmod.MODEL_HUBBARD:
        _hubbard_rank(out, cfg.hubbard_params(), cfg)
        return out
    from .sov import factorized_criterion, sov_covectors

    p = cfg.gl_params()
    basis = sov_covectors(p, cfg.gl_source(), rank_tol=None)
    out.table("singular_values", ["index", "sigma"], [[i, s] for i, s in enumerate(basis.singular_values)])
    out.info["log_abs_det"] = basis.log_abs_det
    if p.twist.diagonalizable:
        from .sov import default_source

        src = cfg.gl_source() or default_source(p.twist, p.sites)
        out.info["factorized_criterion"] = complex(factorized_criterion(p.twist, src))
    out.check("sov_rank", basis.rank_ratio, cfg.tolerances["rank"], below=False)
    return out


def run_hubbard(cfg: cfgmod.RunConfig, args) -> Outcome:
    from .hubbard import commutator_residual, node_identity_residual, shastry_checks

    p = cfg.hubbard_params()
    tol = cfg.tolerances["residual"]
    out = Outcome()
    rows = []
    for lam, mu, nu in _triples(cfg.probes):
        r = shastry_checks(lam, mu, nu, p.eta, p.branch)
        rows.append([lam, mu, commutator_residual(p, lam, mu), r.ybe, r.unitarity, r.coincident])
    out.table("transfer", ["lambda", "mu", "commutator", "shastry_ybe", "unitarity", "coincident"], rows)
    out.check("commutator", max(r[2] for r in rows), tol)
    out.check("shastry_ybe", max(r[3] for r in rows), tol)
    out.check("unitarity", max(r[4] for r in rows), tol)
    out.check("coincident", max(r[5] for r in rows), tol)
    nodes = [[n, node_identity_residual(p, n)] for n in range(p.sites)]
    out.table("nodes", ["site", "residual"], nodes)
    out.check("node_identity", max(r[1] for r in nodes), tol)
    _hubbard_rank(out, p, cfg)
    return out


def run_two_site(cfg: cfgmod.RunConfig, args) -> Outcome:
    from .twosite import reproduce

    p = _gl12(cfg)
    method = args.method if args.method not in (None, "auto") else "homotopy"
    try:
        rep = reproduce(p, method=method, seed=cfg.seed)
    except ValueError as exc:
        if isinstance(exc, (ArgumentError, ParameterError)):
            raise
        raise ConfigError(f"parameters: {exc}") from exc
    tol = cfg.tolerances["residual"]
    out = Outcome()
    out.table(
        "closed_forms",
        ["index", "t_xi2", "t_0", "strK", "b", "c"],
        [[i, r["t_xi2"], r["t_0"], r["strK"], r["b"], r["c"]] for i, r in enumerate(rep.rows)],
    )
    out.check("pair_consistency", rep.pair_consistency, tol)
    out.check("diag_vs_closed", rep.diag_vs_closed, tol)
    out.check("solver_vs_closed", rep.solver_vs_closed, tol)
    out.check("polynomial_vs_operator", rep.polynomial_vs_operator, tol)
    out.flag("matched", rep.matched_diag == 9 and rep.matched_solver == 9, f"diag {rep.matched_diag}, solver {rep.matched_solver}")
    out.info["max_mismatch"] = rep.worst
    out.complete = rep.matched_solver == 9
    return out


def _default_for(command: str, target: Optional[str]) -> dict:
    if command == "hubbard" or (command == "verify" and target == "shastry"):
        return cfgmod.default_hubbard()
    if command == "qsc":
        return cfgmod.default_gl("kernel")
    return cfgmod.default_gl()


COMMANDS = {
    "verify": run_verify,
    "spectrum": run_spectrum,
    "sov-rank": run_sov_rank,
    "qsc": run_qsc,
    "hubbard": run_hubbard,
    "reproduce-appendix-b": run_two_site,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides the config and SOVLAB_SEED)")
    common.add_argument("--tol", type=float, help="residual tolerance")
    common.add_argument("--out", metavar="DIR", help="output directory (default: runs)")
    common.add_argument("--method", choices=METHODS, help="spectrum method")
    parser = argparse.ArgumentParser(prog="sovlab", description="Separation of variables checks for graded chains and the Hubbard model.")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="residual checks of the algebraic identities")
    v.add_argument("target", choices=VERIFY_TARGETS)
    sub.add_parser("spectrum", parents=[common], help="solve the gl(1|2) spectrum and compare with diagonalisation")
    sub.add_parser("sov-rank", parents=[common], help="rank certificate of the separated-variable basis")
    sub.add_parser("qsc", parents=[common], help="difference-equation polynomials and Bethe roots for k1 = 0")
    sub.add_parser("hubbard", parents=[common], help="Hubbard transfer matrices and their basis")
    sub.add_parser("reproduce-appendix-b", parents=[common], help="two-site closed forms against solver and diagonalisation")
    return parser


def make_config(args) -> cfgmod.RunConfig:
    raw = cfgmod.load_config_file(args.config) if args.config else None
    default = _default_for(args.command, getattr(args, "target", None))
    return cfgmod.build_config(raw, default, cli_seed=args.seed, cli_tol=args.tol, cli_out=args.out)


def run_dir(base: str, digest: str) -> str:
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    path = os.path.join(base, f"{stamp}-{digest}")
    k = 1
    while os.path.exists(path):
        path = os.path.join(base, f"{stamp}-{digest}-{k}")
        k += 1
    return path


def write_run(cfg: cfgmod.RunConfig, command: str, out: Outcome, status: int, error: Optional[str] = None) -> str:
    path = run_dir(cfg.data["out"], cfg.digest())
    os.makedirs(os.path.join(path, "tables"))
    with open(os.path.join(path, "config.json"), "w") as fh:
        fh.write(cfg.to_json())
    report = {
        "command": command,
        "config": cfg.data,
        "checks": out.checks,
        "info": out.info,
        "complete": out.complete,
        "passed": status == EXIT_OK,
        "exit_status": status,
        "error": error,
        "tables": sorted(out.tables),
        "timings": out.timings,
    }
    with open(os.path.join(path, "report.json"), "w") as fh:
        json.dump(jsonable(report), fh, sort_keys=True, indent=2)
        fh.write("\n")
    for name, (header, rows) in out.tables.items():
        with open(os.path.join(path, "tables", f"{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([format_csv_value(v) for v in r])
    return path


def _status(out: Outcome) -> int:
    if not out.complete:
        return EXIT_INCOMPLETE
    return EXIT_OK if out.passed else EXIT_RESIDUAL


def _print_summary(out: Outcome, stream):
    for name, c in out.checks.items():
        mark = "PASS" if c["passed"] else "FAIL"
        if "value" in c:
            print(f"{mark} {name}: {c['value']:.3e} (tol {c['tol']:.1e})", file=stream)
        else:
            print(f"{mark} {name}{': ' + c['detail'] if c.get('detail') else ''}", file=stream)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command + (f" {args.target}" if args.command == "verify" else "")
    try:
        cfg = make_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Outcome()
    error = None
    t0 = time.perf_counter()
    try:
        out = COMMANDS[args.command](cfg, args)
        status = _status(out)
    except (ConfigError, ParameterError, ArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        error, status = f"capacity: {exc}", EXIT_INCOMPLETE
    except (EvaluationError, BasisError, InconsistencyError, StructureError) as exc:
        error, status = f"{type(exc).__name__}: {exc}", EXIT_RESIDUAL
    out.timings["total"] = time.perf_counter() - t0
    path = write_run(cfg, command, out, status, error)
    _print_summary(out, sys.stdout)
    if error:
        print(error, file=sys.stderr)
    print(f"report: {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
