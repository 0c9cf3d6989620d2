"""Classify, derive, truncate, simulate and cross-validate a run configuration."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import circuits as circ
from . import linalg, series, simulator
from .lindblad import UnsupportedSystemError, classify, exact_evolve, rk4_evolve
from .pauli import build_pauli_kraus, pauli_kraus_operators
from .qho import qho_circuits, qho_kraus_operators


class ToleranceError(RuntimeError):
    """A requested numerical tolerance could not be met."""


@dataclass
class Trajectory:
    times: tuple
    names: tuple
    values: np.ndarray  # (len(times), len(names))
    bounds: list
    method: str
    states: list | None = None  # density matrices for matrix-level methods
    circuits: list | None = None  # per-time circuit lists for the circuit method

    def rows(self):
        for i, t in enumerate(self.times):
            yield t, self.values[i], self.bounds[i]


def _fmt(x):
    return format(float(x), ".17g")


def trajectory_csv(traj):
    lines = [",".join(("t",) + tuple(traj.names) + ("bound", "method"))]
    for t, vals, b in traj.rows():
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in vals] + [_fmt(b), traj.method]))
    return "\n".join(lines) + "\n"


def _expect(rho, names_obs):
    return [float(np.real(np.trace(m @ rho))) for _, m in names_obs]


def require_supported(cfg):
    cls = classify(cfg.spec.system)
    if not cls.supported:
        raise UnsupportedSystemError(cls)
    return cls


def series_order(cfg, cls, t):
    """``(M, bound)`` for the generic series at time ``t``."""
    sys = cfg.spec.system
    if cfg.max_order is not None:
        M = cfg.max_order
        try:
            return M, series.error_bound(sys, cls, t, M)
        except series.BoundNotApplicable:
            return M, math.inf
    try:
        tr = series.truncation_order(sys, cls, t, cfg.epsilon)
    except ValueError as exc:
        raise ToleranceError(str(exc)) from exc
    return tr.order, tr.bound


def _grouped(sys):
    return sys.n_lindblads > 1 and series.superoperators_commute(sys)


def matrix_trajectory(cfg, method):
    """Density matrices and observables for ``expm``, ``rk4`` or ``kraus_matrix``."""
    sys = cfg.spec.system
    states, bounds = [], []
    if method == "expm":
        for t in cfg.times:
            states.append(exact_evolve(sys, cfg.rho0, t))
            bounds.append(math.nan)
    elif method == "rk4":
        rho, prev = cfg.rho0, 0.0
        for t in cfg.times:
            dt = t - prev
            if dt > 0:
                rho = rk4_evolve(sys, rho, dt, max(1, math.ceil(dt / cfg.rk4_dt - 1e-9)))
            states.append(rho)
            bounds.append(math.nan)
            prev = t
    elif method == "kraus_matrix":
        cls = require_supported(cfg)
        spec = cfg.spec
        for t in cfg.times:
            if spec.exact_finite:
                if spec.preset == "pauli_channel":
                    strings, gammas = zip(*spec.pauli_strings)
                    ks = pauli_kraus_operators(list(strings), list(gammas), t)
                else:
                    ks = qho_kraus_operators(spec.qho, t)
                parts = series._map_ordered(lambda k: k @ cfg.rho0 @ linalg.dagger(k), ks, cfg.jobs)
                rho = series._ordered_sum(parts, cfg.rho0.shape)
                states.append((rho + linalg.dagger(rho)) / 2)
                bounds.append(0.0)
            else:
                M, b = series_order(cfg, cls, t)
                states.append(series.evaluate_series(sys, cls, cfg.rho0, t, M, _grouped(sys), cfg.jobs))
                bounds.append(b)
    else:
        raise ValueError(f"{method!r} is not a matrix-level method")
    values = np.array([_expect(r, cfg.observables) for r in states])
    return Trajectory(cfg.times, tuple(n for n, _ in cfg.observables), values, bounds, method, states=states)


def build_circuits(cfg, t, cls=None):
    """Kraus circuits for time ``t`` (without initial-state preparation) and the truncation bound."""
    spec = cfg.spec
    if spec.preset == "pauli_channel":
        strings, gammas = zip(*spec.pauli_strings)
        return [c for _, c in build_pauli_kraus(list(strings), list(gammas), t)], 0.0
    if spec.preset == "damped_qho":
        return qho_circuits(spec.qho, t), 0.0
    cls = cls or require_supported(cfg)
    sys = spec.system
    M, b = series_order(cfg, cls, t)
    terms = series.kraus_terms(sys, cls, M, _grouped(sys))
    return [circ.build_kraus_circuit(sys, cls, term, t) for term in terms], b


def circuit_trajectory(cfg, exact=None):
    """Observables via the Kraus circuits; shot sampling when ``cfg.shots`` is set."""
    cls = require_supported(cfg)
    use_shots = cfg.shots is not None and not exact
    values, bounds, dumps = [], [], []
    for ti, t in enumerate(cfg.times):
        raw, b = build_circuits(cfg, t, cls)
        prepared = [simulator.with_initial_state(c, cfg.rho0) for c in raw]

        def evaluate(item):
            ci, c = item
            out = simulator.run_circuit(c, simulator.StateVector.zero(c.n_qubits))
            vals = []
            for oi, (_, m) in enumerate(cfg.observables):
                if use_shots:
                    seed = np.random.SeedSequence([cfg.seed, ti, ci, oi])
                    vals.append(simulator.sampled_expectation(out, m, c.postselect_mask, c.n_system, cfg.shots, seed))
                else:
                    vals.append(simulator.filtered_expectation(out, m, c.postselect_mask, c.n_system))
            return vals

        per_circuit = series._map_ordered(evaluate, list(enumerate(prepared)), cfg.jobs)
        row = [
            simulator.recombine([(c.weight, v[oi]) for c, v in zip(prepared, per_circuit)])
            for oi in range(len(cfg.observables))
        ]
        values.append(row)
        bounds.append(b)
        dumps.append(prepared)
    names = tuple(n for n, _ in cfg.observables)
    return Trajectory(cfg.times, names, np.array(values), bounds, "kraus_circuit", circuits=dumps)


def run_method(cfg, method=None):
    method = method or cfg.method
    if method == "kraus_circuit":
        return circuit_trajectory(cfg)
    return matrix_trajectory(cfg, method)


def circuit_dump(times, per_time):
    payload = {
        "runs": [
            {"t": t, "circuits": [circ.circuit_to_dict(c) for c in cs]}
            for t, cs in zip(times, per_time)
        ]
    }
    return json.dumps(payload, indent=1) + "\n"


def load_circuit_dump(path):
    with open(path) as fh:
        payload = json.load(fh)
    return [(run["t"], [circ.circuit_from_dict(c) for c in run["circuits"]]) for run in payload["runs"]]


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def run_config(cfg, out_dir):
    """Run ``cfg.method``; write ``trajectory.csv`` (and ``circuits.json`` for circuits)."""
    traj = run_method(cfg)
    paths = [_write(out_dir, "trajectory.csv", trajectory_csv(traj))]
    if traj.circuits is not None:
        paths.append(_write(out_dir, "circuits.json", circuit_dump(traj.times, traj.circuits)))
    bad = [b for b in traj.bounds if not math.isnan(b) and b > cfg.epsilon]
    if traj.method.startswith("kraus") and cfg.max_order is None and bad:
        raise ToleranceError(f"truncation bound {max(bad):.3e} exceeds epsilon {cfg.epsilon:.3e}")
    return traj, paths


def validate_cross(cfg, out_dir=None):
    """Run all four methods and compare them; the report's ``status`` is PASS or FAIL."""
    if cfg.dim ** 2 > 4096:
        raise ValueError("validation needs d^2 <= 4096 for the dense oracle")
    trajs = {m: matrix_trajectory(cfg, m) for m in ("expm", "rk4", "kraus_matrix")}
    trajs["kraus_circuit"] = circuit_trajectory(cfg, exact=True)

    def state_gap(a, b):
        return max(linalg.trace_distance(x, y) for x, y in zip(trajs[a].states, trajs[b].states))

    def obs_gap(a, b):
        return float(np.max(np.abs(trajs[a].values - trajs[b].values)))

    km_tol = max(cfg.epsilon, 1e-7)
    cm_tol = 1e-7
    report = {
        "preset": cfg.spec.preset,
        "times": list(cfg.times),
        "observables": [n for n, _ in cfg.observables],
        "epsilon": cfg.epsilon,
        "kraus_matrix_vs_expm": {"max_trace_distance": state_gap("kraus_matrix", "expm"),
                                 "max_observable_deviation": obs_gap("kraus_matrix", "expm")},
        "kraus_circuit_vs_kraus_matrix": {"max_observable_deviation": obs_gap("kraus_circuit", "kraus_matrix")},
        "rk4_vs_expm": {"max_trace_distance": state_gap("rk4", "expm"),
                        "max_observable_deviation": obs_gap("rk4", "expm")},
        "max_bound": max(b for b in trajs["kraus_matrix"].bounds),
        "thresholds": {"kraus_matrix_vs_expm": km_tol, "kraus_circuit_vs_kraus_matrix": cm_tol},
    }
    ok = (report["kraus_matrix_vs_expm"]["max_trace_distance"] <= km_tol
          and report["kraus_circuit_vs_kraus_matrix"]["max_observable_deviation"] <= cm_tol)
    report["status"] = "PASS" if ok else "FAIL"
    if out_dir is not None:
        _write(out_dir, "validate.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
        for m, tr in trajs.items():
            _write(out_dir, f"trajectory_{m}.csv", trajectory_csv(tr))
    return report


def classification_dict(cls):
    def cnum(z):
        return None if z is None else [complex(z).real, complex(z).imag]

    return {
        "label": cls.label,
        "alpha": cls.alpha,
        "c": cls.c,
        "nu": cnum(cls.nu),
        "lambda": cnum(cls.lam),
        "residuals": cls.residuals,
        "method": cls.method,
        "reason": cls.reason,
    }


def bound_table(cfg):
    """Per-time truncation order and bound; finite presets report their exact order."""
    cls = require_supported(cfg)
    sys = cfg.spec.system
    rows = []
    for t in cfg.times:
        if cfg.spec.preset == "damped_qho":
            rows.append((t, cfg.spec.qho.m_max, 0.0, math.nan, None))
            continue
        if cfg.spec.preset == "pauli_channel":
            rows.append((t, len(cfg.spec.pauli_strings), 0.0, math.nan, None))
            continue
        sch = series.scalar_schedule(cls)
        x = sch.f(t) * series.superoperator_hs_norm(sys)
        if cfg.max_order is not None:
            M, b = series_order(cfg, cls, t)
            rows.append((t, M, b, x, None))
        else:
            try:
                tr = series.truncation_order(sys, cls, t, cfg.epsilon)
            except ValueError as exc:
                raise ToleranceError(str(exc)) from exc
            rows.append((t, tr.order, tr.bound, tr.x, tr.analytic))
    return rows
