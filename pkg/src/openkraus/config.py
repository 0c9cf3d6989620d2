"""Run configuration: JSON parsing, presets, initial states and observables."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .lindblad import LindbladSystem
from .pauli import PauliString, merge_duplicates, pauli_system
from .qho import QHOConfig, number_operator, qho_system

METHODS = ("kraus_matrix", "kraus_circuit", "expm", "rk4")
PRESETS = ("dephasing", "pauli_channel", "damped_qho", "custom")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _complex(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(f"complex entries must be [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)):
        return complex(x)
    raise ConfigError(f"cannot read {x!r} as a number")


def parse_matrix(rows, name="matrix"):
    try:
        m = np.array([[_complex(x) for x in row] for row in rows], dtype=complex)
    except TypeError as exc:
        raise ConfigError(f"{name} must be a list of rows") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def parse_vector(items, name="vector"):
    try:
        return np.array([_complex(x) for x in items], dtype=complex)
    except TypeError as exc:
        raise ConfigError(f"{name} must be a list") from exc


@dataclass(frozen=True)
class SystemSpec:
    preset: str
    params: dict
    system: LindbladSystem
    pauli_strings: tuple = ()
    qho: QHOConfig | None = None

    @property
    def exact_finite(self):
        """Presets whose Kraus series is finite (no truncation error)."""
        return self.preset in ("pauli_channel", "damped_qho")


@dataclass(frozen=True)
class RunConfig:
    spec: SystemSpec
    rho0: np.ndarray
    times: tuple
    observables: tuple  # (name, matrix)
    method: str = "kraus_matrix"
    epsilon: float = 1e-6
    max_order: int | None = None
    jobs: int = 1
    seed: int = 0
    shots: int | None = None
    rk4_dt: float = 1e-3
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self):
        return self.spec.system.dim


def _pauli_label(item):
    if isinstance(item, str):
        return item
    if isinstance(item, (list, tuple)) and all(isinstance(c, str) for c in item):
        return "".join(item)
    raise ConfigError(f"Pauli string must be text or a list of letters, got {item!r}")


def build_system(d):
    if not isinstance(d, dict):
        raise ConfigError("'system' must be an object")
    preset = d.get("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    hbar = float(d.get("hbar", 1.0))
    try:
        if preset == "dephasing":
            g = float(d.get("gamma", 1.0))
            Z = np.diag([1.0, -1.0]).astype(complex)
            H = 0.5 * float(d.get("omega", 0.0)) * Z
            return SystemSpec(preset, d, LindbladSystem(H, (Z,), (g,), hbar))
        if preset == "pauli_channel":
            labels = [_pauli_label(s) for s in d["strings"]]
            gammas = [float(g) for g in d["gammas"]]
            if len(labels) != len(gammas):
                raise ConfigError("pauli_channel needs one rate per string")
            if len({len(s) for s in labels}) != 1:
                raise ConfigError("Pauli strings must all have the same length")
            strings, gammas = merge_duplicates([PauliString.from_label(s) for s in labels], gammas)
            return SystemSpec(preset, d, pauli_system(strings, gammas, hbar), tuple(zip(strings, gammas)))
        if preset == "damped_qho":
            cfg = QHOConfig(int(d["n_qubits"]), float(d["omega"]), float(d["gamma"]), hbar)
            return SystemSpec(preset, d, qho_system(cfg), qho=cfg)
        dim = int(d["d"])
        H = parse_matrix(d["H"], "H")
        ls, gs = [], []
        for j, entry in enumerate(d.get("lindblads", [])):
            ls.append(parse_matrix(entry["matrix"], f"lindblads[{j}]"))
            gs.append(float(entry["gamma"]))
        if H.shape != (dim, dim):
            raise ConfigError(f"H has shape {H.shape}, expected ({dim}, {dim})")
        return SystemSpec(preset, d, LindbladSystem(H, tuple(ls), tuple(gs), hbar))
    except KeyError as exc:
        raise ConfigError(f"system preset {preset!r} is missing field {exc.args[0]!r}") from exc
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system: {exc}") from exc


def build_initial_state(d, dim):
    if isinstance(d, dict) and "density_matrix" in d:
        rho = parse_matrix(d["density_matrix"], "density_matrix")
    elif isinstance(d, dict) and "vector" in d:
        v = parse_vector(d["vector"])
        if np.linalg.norm(v) == 0:
            raise ConfigError("initial vector is zero")
        v = v / np.linalg.norm(v)
        rho = np.outer(v, v.conj())
    elif isinstance(d, dict) and "basis" in d:
        k = int(d["basis"])
        if not 0 <= k < dim:
            raise ConfigError(f"basis index {k} outside [0, {dim})")
        rho = np.zeros((dim, dim), dtype=complex)
        rho[k, k] = 1
    else:
        raise ConfigError("initial_state needs 'density_matrix', 'vector' or 'basis'")
    if rho.shape != (dim, dim):
        raise ConfigError(f"initial state has dimension {rho.shape[0]}, system has {dim}")
    try:
        return linalg.validate_density_matrix(rho)
    except ValueError as exc:
        raise ConfigError(f"invalid initial state: {exc}") from exc


_SINGLE = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def preset_observable(name, dim):
    """``number``, or ``X<q>``/``Y<q>``/``Z<q>`` on qubit ``q`` (qubit 0 least significant)."""
    if name == "number":
        return number_operator(dim)
    if len(name) >= 2 and name[0] in _SINGLE and name[1:].isdigit():
        q = int(name[1:])
        n = linalg.next_pow2_qubits(dim)
        if (1 << n) != dim or q >= n:
            raise ConfigError(f"observable {name!r} needs a qubit register; dimension is {dim}")
        out = np.ones((1, 1), dtype=complex)
        for j in reversed(range(n)):
            out = np.kron(out, _SINGLE[name[0]] if j == q else np.eye(2))
        return out
    raise ConfigError(f"unknown observable preset {name!r}")


def build_observables(items, dim):
    out = []
    for item in items:
        if isinstance(item, str):
            out.append((item, preset_observable(item, dim)))
            continue
        if not isinstance(item, dict) or "name" not in item or "matrix" not in item:
            raise ConfigError("observable entries are preset names or {name, matrix}")
        m = parse_matrix(item["matrix"], item["name"])
        if m.shape != (dim, dim) or not linalg.is_hermitian(m, 1e-10):
            raise ConfigError(f"observable {item['name']!r} must be a Hermitian {dim}x{dim} matrix")
        out.append((str(item["name"]), m))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise ConfigError("observable names must be distinct")
    if any("," in n for n in names):
        raise ConfigError("observable names may not contain commas")
    if not out:
        raise ConfigError("at least one observable is required")
    return tuple(out)


def parse_config(raw, overrides=None):
    """Validate a decoded JSON object into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = dict(raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    for key in ("system", "initial_state", "times"):
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")
    spec = build_system(raw["system"])
    dim = spec.system.dim
    rho0 = build_initial_state(raw["initial_state"], dim)
    try:
        times = tuple(float(t) for t in raw["times"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("times must be a list of numbers") from exc
    if not times or any(t < 0 for t in times) or list(times) != sorted(times):
        raise ConfigError("times must be a non-empty ascending list of non-negative values")
    observables = build_observables(raw.get("observables", ["Z0"] if dim == 2 else ["number"]), dim)
    method = raw.get("method", "kraus_matrix")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    try:
        epsilon = float(raw.get("epsilon", 1e-6))
        max_order = raw.get("max_order")
        max_order = None if max_order is None else int(max_order)
        jobs = int(raw.get("jobs", 1))
        seed = int(raw.get("seed", 0))
        shots = raw.get("shots")
        shots = None if shots is None else int(shots)
        rk4_dt = float(raw.get("rk4_dt", 1e-3))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid numeric option: {exc}") from exc
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if max_order is not None and max_order < 0:
        raise ConfigError("max_order must be non-negative")
    if shots is not None and shots < 1:
        raise ConfigError("shots must be >= 1")
    if rk4_dt <= 0:
        raise ConfigError("rk4_dt must be positive")
    return RunConfig(spec, rho0, times, observables, method, epsilon, max_order, jobs, seed, shots, rk4_dt, raw)


def load_config(path, overrides=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(raw, overrides)
