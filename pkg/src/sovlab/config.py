"""Run configuration: JSON in, validated parameters out.

Complex numbers are two-element ``[re, im]`` arrays. Every field that a
run uses, including values drawn from the seed, ends up in the effective
configuration, so a report can be replayed from its ``config.json``.
"""
import copy
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import ConfigError

MODEL_GL = "gl"
MODEL_HUBBARD = "hubbard"

DEFAULT_TOLERANCES = {"residual": 1e-8, "rank": 1e-8, "cluster": 1e-6}

TOP_LEVEL = {"model", "sites", "eta", "xi", "twist", "source", "tolerances", "seed", "out", "probes", "samples", "h_branch"}


def encode_complex(z) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or [re, im], got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")


def _complex_list(value, where: str) -> List[complex]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list")
    return [decode_complex(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _complex_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{where}: expected a list of rows")
    rows = [_complex_list(r, f"{where}[{i}]") for i, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ConfigError(f"{where}: matrix must be square")
    return np.array(rows, dtype=complex)


def _encode_matrix(m) -> List[List[List[float]]]:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def _int(value, where: str, low: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < low:
        raise ConfigError(f"{where}: expected an integer >= {low}, got {value!r}")
    return value


def _float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(f"{where}: expected a positive number, got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Validated configuration. ``data`` is the effective JSON object."""

    data: Dict[str, Any]

    @property
    def model(self) -> str:
        return self.data["model"]["kind"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def tolerances(self) -> Dict[str, float]:
        return self.data["tolerances"]

    @property
    def sites(self) -> int:
        return self.data["sites"]

    @property
    def eta(self) -> complex:
        return decode_complex(self.data["eta"], "eta")

    @property
    def xi(self) -> np.ndarray:
        return np.array(_complex_list(self.data["xi"], "xi"), dtype=complex)

    @property
    def probes(self) -> np.ndarray:
        return np.array(_complex_list(self.data["probes"], "probes"), dtype=complex)

    def to_json(self) -> str:
        return serialize(self.data)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:8]

    def gl_params(self):
        from .chain import make_params, validate_twist
        from .graded import GradingSignature

        if self.model != MODEL_GL:
            raise ConfigError("model: this command needs a gl model")
        sig = GradingSignature(self.data["model"]["m"], self.data["model"]["n"])
        tw = self.data["twist"]
        if "matrix" in tw:
            matrix = _complex_matrix(tw["matrix"], "twist.matrix")
        else:
            values = np.array(_complex_list(tw["eigenvalues"], "twist.eigenvalues"))
            matrix = np.diag(values)
            if tw.get("similarity") is not None:
                s = _complex_matrix(tw["similarity"], "twist.similarity")
                matrix = s @ matrix @ np.linalg.inv(s)
        if matrix.shape != (sig.dim, sig.dim):
            raise ConfigError(f"twist: expected a {sig.dim}x{sig.dim} matrix")
        try:
            return make_params(sig, self.eta, self.xi, validate_twist(sig, matrix))
        except ValueError as exc:
            raise ConfigError(f"parameters: {exc}") from exc

    def hubbard_params(self):
        from .hubbard import make_hubbard

        if self.model != MODEL_HUBBARD:
            raise ConfigError("model: this command needs the hubbard model")
        tw = self.data["twist"]
        try:
            return make_hubbard(
                self.eta,
                self.xi,
                tw["family"],
                decode_complex(tw["alpha"], "twist.alpha"),
                decode_complex(tw["beta"], "twist.beta"),
                decode_complex(tw["gamma"], "twist.gamma"),
                branch=self.data["h_branch"],
            )
        except ValueError as exc:
            raise ConfigError(f"parameters: {exc}") from exc

    def gl_source(self) -> Optional[List[np.ndarray]]:
        src = self.data["source"]
        if src is None:
            return None
        return [np.array(_complex_list(s, f"source[{i}]")) for i, s in enumerate(src)]

    def hubbard_source(self) -> Optional[np.ndarray]:
        src = self.data["source"]
        return None if src is None else np.array(_complex_list(src, "source"))


def serialize(data: Dict[str, Any]) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def default_gl(kind: str = "generic") -> Dict[str, Any]:
    k1 = 0.0 if kind == "kernel" else 1.3
    return {
        "model": {"kind": MODEL_GL, "m": 1, "n": 2},
        "sites": 2,
        "eta": [0.7, 0.2],
        "xi": [[0.0, 0.0], [1.1, -0.3]],
        "twist": {"eigenvalues": [[k1, 0.0], [-0.8, 0.5], [0.0, 2.1]], "similarity": None},
    }


def default_hubbard() -> Dict[str, Any]:
    return {
        "model": {"kind": MODEL_HUBBARD},
        "sites": 2,
        "eta": [0.0, -1.6],
        "xi": [[0.31, 0.12], [-0.47, 0.08]],
        "twist": {"family": 1, "alpha": [1.2, 0.0], "beta": [0.7, -0.3], "gamma": [-0.5, 0.9]},
    }


def _check_model(model) -> Dict[str, Any]:
    if not isinstance(model, dict) or model.get("kind") not in (MODEL_GL, MODEL_HUBBARD):
        raise ConfigError("model.kind: expected 'gl' or 'hubbard'")
    if model["kind"] == MODEL_GL:
        extra = set(model) - {"kind", "m", "n"}
        if extra:
            raise ConfigError(f"model: unknown fields {sorted(extra)}")
        m = _int(model.get("m", 1), "model.m")
        n = _int(model.get("n", 2), "model.n")
        if m + n == 0:
            raise ConfigError("model: m + n must be positive")
        return {"kind": MODEL_GL, "m": m, "n": n}
    if set(model) - {"kind"}:
        raise ConfigError(f"model: unknown fields {sorted(set(model) - {'kind'})}")
    return {"kind": MODEL_HUBBARD}


def _check_twist(twist, model: Dict[str, Any]) -> Dict[str, Any]:
    if not isinstance(twist, dict):
        raise ConfigError("twist: expected an object")
    if model["kind"] == MODEL_HUBBARD:
        extra = set(twist) - {"family", "alpha", "beta", "gamma"}
        if extra:
            raise ConfigError(f"twist: unknown fields {sorted(extra)}")
        fam = _int(twist.get("family"), "twist.family", 1)
        if fam > 4:
            raise ConfigError("twist.family: expected 1..4")
        out = {"family": fam}
        for key in ("alpha", "beta", "gamma"):
            if key not in twist:
                raise ConfigError(f"twist.{key}: missing")
            out[key] = encode_complex(decode_complex(twist[key], f"twist.{key}"))
        if out["alpha"] == [0.0, 0.0]:
            raise ConfigError("twist.alpha: must be nonzero")
        return out
    d = model["m"] + model["n"]
    if "matrix" in twist:
        if set(twist) - {"matrix"}:
            raise ConfigError("twist: 'matrix' excludes other fields")
        mat = _complex_matrix(twist["matrix"], "twist.matrix")
        if mat.shape != (d, d):
            raise ConfigError(f"twist.matrix: expected {d}x{d}")
        return {"matrix": _encode_matrix(mat)}
    extra = set(twist) - {"eigenvalues", "similarity"}
    if extra:
        raise ConfigError(f"twist: unknown fields {sorted(extra)}")
    if "eigenvalues" not in twist:
        raise ConfigError("twist: need 'matrix' or 'eigenvalues'")
    vals = _complex_list(twist["eigenvalues"], "twist.eigenvalues")
    if len(vals) != d:
        raise ConfigError(f"twist.eigenvalues: expected {d} values")
    sim = twist.get("similarity")
    if sim is not None:
        s = _complex_matrix(sim, "twist.similarity")
        if s.shape != (d, d):
            raise ConfigError(f"twist.similarity: expected {d}x{d}")
        sim = _encode_matrix(s)
    return {"eigenvalues": [encode_complex(v) for v in vals], "similarity": sim}


def _fits(twist, model) -> bool:
    d = model["m"] + model["n"]
    return isinstance(twist, dict) and isinstance(twist.get("eigenvalues"), list) and len(twist["eigenvalues"]) == d


def _draw_probes(rng: np.random.Generator, count: int, centre: complex, radius: float) -> List[List[float]]:
    return [encode_complex(centre + radius * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))) for _ in range(count)]


def resolve_seed(cli_seed: Optional[int], data: Dict[str, Any]) -> int:
    """Seed precedence: command line, then the config file, then ``SOVLAB_SEED``, then 0."""
    if cli_seed is not None:
        return cli_seed
    if "seed" in data and data["seed"] is not None:
        return _int(data["seed"], "seed")
    env = os.environ.get("SOVLAB_SEED")
    if env is not None:
        try:
            return _int(int(env), "SOVLAB_SEED")
        except ValueError as exc:
            raise ConfigError(f"SOVLAB_SEED: not an integer: {env!r}") from exc
    return 0


def build_config(raw: Optional[Dict[str, Any]], default: Dict[str, Any], cli_seed=None, cli_tol=None, cli_out=None) -> RunConfig:
    """Merge ``raw`` over ``default``, validate, and fill drawn values."""
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    raw = copy.deepcopy(raw or {})
    unknown = set(raw) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    base = copy.deepcopy(default)
    if isinstance(raw.get("model"), dict) and raw["model"].get("kind") != base["model"]["kind"]:
        # a different model does not inherit the other model's defaults
        base = default_hubbard() if raw["model"].get("kind") == MODEL_HUBBARD else default_gl()
    merged = {**base, **raw}
    seed = resolve_seed(cli_seed, raw)
    rng = np.random.default_rng([seed, 97])
    model = _check_model(merged["model"])
    out: Dict[str, Any] = {"model": model, "seed": seed}
    xi_given = merged.get("xi")
    sites = merged.get("sites")
    if sites is None and isinstance(xi_given, list):
        sites = len(xi_given)
    out["sites"] = _int(sites if sites is not None else 2, "sites", 1)
    out["eta"] = encode_complex(decode_complex(merged.get("eta", [0.7, 0.2]), "eta"))
    if xi_given is None or ("xi" not in raw and isinstance(xi_given, list) and len(xi_given) != out["sites"]):
        # defaults only fit the default site count; otherwise draw
        xi = [complex(rng.normal(), rng.normal()) for _ in range(out["sites"])]
    else:
        xi = _complex_list(xi_given, "xi")
        if len(xi) != out["sites"]:
            raise ConfigError(f"xi: expected {out['sites']} values, got {len(xi)}")
    out["xi"] = [encode_complex(z) for z in xi]
    twist = merged.get("twist")
    if model["kind"] == MODEL_GL and "twist" not in raw and not _fits(twist, model):
        values = [complex(rng.normal(), rng.normal()) for _ in range(model["m"] + model["n"])]
        twist = {"eigenvalues": [encode_complex(v) for v in values], "similarity": None}
    if twist is None:
        raise ConfigError("twist: missing")
    out["twist"] = _check_twist(twist, model)
    src = merged.get("source")
    if src is not None:
        if model["kind"] == MODEL_HUBBARD:
            vals = _complex_list(src, "source")
            if len(vals) != 4:
                raise ConfigError("source: hubbard source needs four components")
            src = [encode_complex(v) for v in vals]
        else:
            if not isinstance(src, list) or len(src) != out["sites"]:
                raise ConfigError(f"source: expected one state per site ({out['sites']})")
            d = model["m"] + model["n"]
            states = []
            for i, s in enumerate(src):
                vals = _complex_list(s, f"source[{i}]")
                if len(vals) != d:
                    raise ConfigError(f"source[{i}]: expected {d} components")
                states.append([encode_complex(v) for v in vals])
            src = states
    out["source"] = src
    tol = dict(DEFAULT_TOLERANCES)
    given_tol = merged.get("tolerances") or {}
    if not isinstance(given_tol, dict) or set(given_tol) - set(DEFAULT_TOLERANCES):
        raise ConfigError(f"tolerances: allowed keys are {sorted(DEFAULT_TOLERANCES)}")
    for key, val in given_tol.items():
        tol[key] = _float(val, f"tolerances.{key}")
    if cli_tol is not None:
        tol["residual"] = _float(cli_tol, "--tol")
    out["tolerances"] = tol
    out["samples"] = _int(merged.get("samples", 5), "samples", 1)
    branch = merged.get("h_branch", "principal")
    if branch not in ("principal", "shifted"):
        raise ConfigError("h_branch: expected 'principal' or 'shifted'")
    out["h_branch"] = branch
    probes = merged.get("probes")
    if probes is None:
        centre = complex(np.mean(xi))
        if model["kind"] == MODEL_HUBBARD:
            radius = 0.6
        else:
            radius = max(1.0, abs(decode_complex(out["eta"], "eta")) + max(abs(z - centre) for z in xi))
        out["probes"] = _draw_probes(rng, out["samples"] * 3, centre, radius)
    else:
        out["probes"] = [encode_complex(z) for z in _complex_list(probes, "probes")]
        if len(out["probes"]) < 3:
            raise ConfigError("probes: need at least three points")
    out["out"] = cli_out if cli_out is not None else merged.get("out", "runs")
    if not isinstance(out["out"], str) or not out["out"]:
        raise ConfigError("out: expected a directory name")
    return RunConfig(out)


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def deserialize(text: str) -> RunConfig:
    """Inverse of :meth:`RunConfig.to_json` for effective configurations."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    missing = TOP_LEVEL - set(data)
    if missing:
        raise ConfigError(f"config: effective configuration lacks {sorted(missing)}")
    return build_config(data, data)
