"""Exact statevector execution of circuit IR, filtered observables and recombination."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .circuits import Circuit, state_prep

NORM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 1 << self.n_qubits:
            raise ValueError(f"{a.size} amplitudes do not fit {self.n_qubits} qubits")
        if abs(np.linalg.norm(a) - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {np.linalg.norm(a):.12g} differs from 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def zero(cls, n_qubits):
        a = np.zeros(1 << n_qubits, dtype=complex)
        a[0] = 1
        return cls(n_qubits, a)

    @classmethod
    def basis(cls, n_qubits, index):
        a = np.zeros(1 << n_qubits, dtype=complex)
        a[index] = 1
        return cls(n_qubits, a)


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix, "observable")
        if not linalg.is_hermitian(m, 1e-10):
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


# ------------------------------------------------------------------ kernels
# The buffer is viewed as an n-axis tensor in C order, so qubit q lives on
# axis n - 1 - q.


def _axis(q, n):
    return n - 1 - q


def _apply_matrix(psi, mat, qubits, n):
    k = len(qubits)
    mt = np.asarray(mat).reshape((2,) * (2 * k))
    axes = [_axis(q, n) for q in reversed(qubits)]  # local MSB first
    out = np.tensordot(mt, psi, axes=(list(range(k, 2 * k)), axes))
    psi[...] = np.moveaxis(out, list(range(k)), axes)


def _apply_controlled(psi, mat2, controls, target, n):
    idx = [slice(None)] * n
    for c in controls:
        idx[_axis(c, n)] = 1
    sub = psi[tuple(idx)]
    t_ax = _axis(target, n) - sum(1 for c in controls if _axis(c, n) < _axis(target, n))
    moved = np.moveaxis(sub, t_ax, 0)
    new = np.tensordot(mat2, moved, axes=(1, 0))
    moved[...] = new


def _apply_permutation(psi, mapping, qubits, n):
    k = len(qubits)
    axes = [_axis(q, n) for q in reversed(qubits)]
    front = np.moveaxis(psi, axes, list(range(k)))
    flat = front.reshape(1 << k, -1)
    out = np.empty_like(flat)
    out[list(mapping)] = flat
    front[...] = out.reshape(front.shape)


def apply_gate(psi, gate, n):
    """Apply one gate in place to the tensor view ``psi``."""
    if gate.kind == "permutation":
        _apply_permutation(psi, gate.mapping, gate.qubits, n)
    elif gate.kind in ("phase", "controlled_phase"):
        idx = [slice(None)] * n
        for q in gate.controls + gate.qubits:
            idx[_axis(q, n)] = 1
        psi[tuple(idx)] *= np.exp(-1j * gate.angle)
    elif gate.controls:
        _apply_controlled(psi, gate.local_matrix(), gate.controls, gate.qubits[0], n)
    else:
        _apply_matrix(psi, gate.local_matrix(), gate.qubits, n)


def run_circuit(circuit, state):
    """Apply the gates of ``circuit`` in order to a copy of ``state``."""
    n = circuit.n_qubits
    if state.n_qubits != n:
        raise ValueError(f"state has {state.n_qubits} qubits, circuit needs {n}")
    buf = np.array(state.amplitudes, dtype=complex)
    psi = buf.reshape((2,) * n) if n else buf
    for g in circuit.gates:
        apply_gate(psi, g, n)
    return StateVector(n, buf)


# ------------------------------------------------------------------ readout


def _system_observable(obs, n_system):
    m = obs.matrix if isinstance(obs, Observable) else Observable(obs).matrix
    ds = 1 << n_system
    if m.shape[0] > ds:
        raise ValueError(f"observable dimension {m.shape[0]} exceeds system register {ds}")
    if m.shape[0] < ds:
        m = linalg.pad_to_qubits(m, n_system)
    return m


def _branches(state, n_system, postselect, prep=()):
    """Rows ``psi[prep_config, system_index]`` with every postselected qubit at 0."""
    n = state.n_qubits
    psi = state.amplitudes.reshape((2,) * n) if n else state.amplitudes
    idx = [slice(None)] * n
    for q in postselect:
        if q < n_system:
            raise ValueError("cannot postselect a system qubit")
        idx[_axis(q, n)] = 0
    sub = psi[tuple(idx)]
    # remaining axes: everything above the system (prep and unmasked) then system
    return sub.reshape(-1, 1 << n_system)


def filtered_expectation(state, obs, postselect_mask, n_system=None):
    """``<psi| O_sys (x) |0><0|_mask (x) I_rest |psi>``; non-masked ancillas are traced out."""
    if n_system is None:
        n_system = state.n_qubits - len(postselect_mask)
    m = _system_observable(obs, n_system)
    rows = _branches(state, n_system, postselect_mask)
    return float(np.real(np.einsum("ps,st,pt->", rows.conj(), m, rows)))


def circuit_expectation(circuit, obs, state=None):
    """Run ``circuit`` (from ``|0...0>`` unless ``state`` given) and read the filtered value."""
    state = StateVector.zero(circuit.n_qubits) if state is None else state
    out = run_circuit(circuit, state)
    return filtered_expectation(out, obs, circuit.postselect_mask, circuit.n_system)


def recombine(results):
    """``sum a^2 value`` in input order."""
    total = 0.0
    for weight, value in results:
        if weight < 0:
            raise ValueError("recombination weights must be non-negative")
        total += weight * weight * value
    return total


def prepare_purification(rho, tol=1e-12):
    """Purification ``sum_j sqrt(p_j) |psi_j>_sys |j>_prep``; returns (state, n_system)."""
    rho = linalg.validate_density_matrix(rho)
    d = rho.shape[0]
    n_sys = max(1, linalg.next_pow2_qubits(d))
    p, v = linalg.sorted_eig_normal((rho + linalg.dagger(rho)) / 2)
    p = p.real
    order = np.argsort(-p, kind="stable")
    p, v = p[order], v[:, order]
    keep = p > tol
    p, v = p[keep], v[:, keep]
    p = p / p.sum()
    n_prep = max(1, linalg.next_pow2_qubits(len(p)))
    amp = np.zeros((1 << n_prep, 1 << n_sys), dtype=complex)
    for j in range(len(p)):
        amp[j, :d] = np.sqrt(p[j]) * v[:, j]
    amp /= np.linalg.norm(amp)
    return StateVector(n_sys + n_prep, amp.reshape(-1)), n_sys


def reduced_density_matrix(state, n_system):
    rows = state.amplitudes.reshape(-1, 1 << n_system)
    return rows.T @ rows.conj()


def with_initial_state(circuit, rho, tol=1e-12):
    """Prepend preparation of ``rho`` (pure: on the system; mixed: with prep ancillas)."""
    rho = linalg.validate_density_matrix(rho)
    d = rho.shape[0]
    ds = 1 << circuit.n_system
    if d > ds:
        raise ValueError("initial state larger than the system register")
    p = np.linalg.eigvalsh((rho + linalg.dagger(rho)) / 2)
    sysq = tuple(range(circuit.n_system))
    if np.sum(p > tol) <= 1:
        w, v = np.linalg.eigh((rho + linalg.dagger(rho)) / 2)
        vec = np.zeros(ds, dtype=complex)
        vec[:d] = v[:, -1]
        vec /= np.linalg.norm(vec)
        gate = state_prep(vec, sysq)
        return replace(circuit, gates=(gate,) + circuit.gates)
    purified, _ = prepare_purification(rho, tol)
    n_prep = purified.n_qubits - circuit.n_system
    # the purification puts prep bits above the system; relocate them above the ancillas
    c = circuit.with_ancillas("prep", n_prep)
    gate = state_prep(purified.amplitudes, sysq + c.prep_qubits)
    return replace(c, gates=(gate,) + c.gates)


def sample_counts(state, shots, seed):
    """Multinomial histogram ``{basis index: count}`` from ``|amplitude|^2``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(int(shots), probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def sampled_expectation(state, obs, postselect_mask, n_system, shots, seed):
    """Shot estimate of the filtered observable, measuring the system in the eigenbasis of ``obs``.

    Outcomes with any postselected ancilla at 1 contribute zero, which keeps
    the estimator unbiased for the filtered value.
    """
    m = _system_observable(obs, n_system)
    w, v = np.linalg.eigh(m)
    rows = _branches(state, n_system, postselect_mask)
    probs = (np.abs(rows @ v.conj()) ** 2).sum(axis=0)
    p_fail = max(0.0, 1.0 - probs.sum())
    dist = np.append(probs, p_fail)
    dist = np.clip(dist, 0, None)
    counts = np.random.default_rng(seed).multinomial(int(shots), dist / dist.sum())
    return float(np.dot(counts[:-1], w) / shots)
