"""Continuous-time Pauli channels.

A Pauli string is stored symplectically: bit ``j`` of ``x_mask``/``z_mask``
describes qubit ``j`` (qubit 0 least significant), with ``(1, 0) = X``,
``(0, 1) = Z`` and ``(1, 1) = Y``.  The operator is ``i**phase_exp`` times the
tensor product of those Hermitian Paulis.  In a label such as ``"XIZ"`` the
first character acts on the highest qubit, so the label reads like the
Kronecker product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, pauli
from .lindblad import LindbladSystem
from .simulator import recombine

DEFAULT_CAP = 20

_SINGLE = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
}
_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}
_PHASES = (1, 1j, -1, -1j)


def _popcount(x):
    return bin(x).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.n < 1 or self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("masks do not fit the qubit count")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def from_label(cls, label, phase_exp=0):
        label = label.upper()
        n = len(label)
        x = z = 0
        for pos, ch in enumerate(label):
            if ch not in _BITS:
                raise ValueError(f"bad Pauli letter {ch!r}")
            q = n - 1 - pos
            bx, bz = _BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(n, x, z, phase_exp)

    def letter(self, q):
        return _LETTER[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]

    @property
    def label(self):
        return "".join(self.letter(q) for q in reversed(range(self.n)))

    @property
    def support(self):
        return tuple(q for q in range(self.n) if ((self.x_mask | self.z_mask) >> q) & 1)

    @property
    def weight(self):
        return len(self.support)

    def unsigned(self):
        return PauliString(self.n, self.x_mask, self.z_mask, 0)

    def to_matrix(self):
        out = np.ones((1, 1), dtype=complex)
        for q in reversed(range(self.n)):
            out = np.kron(out, _SINGLE[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)])
        return _PHASES[self.phase_exp] * out

    def __mul__(self, other):
        return pauli_multiply(self, other)

    def __repr__(self):
        sign = ("", "i", "-", "-i")[self.phase_exp]
        return f"PauliString({sign}{self.label})"


def _check_pair(a, b):
    if a.n != b.n:
        raise ValueError(f"Pauli strings act on {a.n} and {b.n} qubits")


def pauli_multiply(a, b):
    """Exact product; with ``s(x, z) = i^{xz} X^x Z^z`` the phase is an integer count."""
    _check_pair(a, b)
    x3 = a.x_mask ^ b.x_mask
    z3 = a.z_mask ^ b.z_mask
    s = (
        a.phase_exp
        + b.phase_exp
        + _popcount(a.x_mask & a.z_mask)
        + _popcount(b.x_mask & b.z_mask)
        + 2 * _popcount(a.z_mask & b.x_mask)
        - _popcount(x3 & z3)
    )
    return PauliString(a.n, x3, z3, s)


@dataclass(frozen=True)
class CommutationStructure:
    commute: bool
    anticommuting_positions: tuple
    prefactor: int  # 1 - prod(tau_j): 0 or 2
    product: PauliString  # tensor product of the per-site S_j factors, phases included

    def matrix(self):
        return self.prefactor * self.product.to_matrix()


def pauli_commutes(a, b):
    """Commutator structure ``[Pa, Pb] = (1 - prod tau_j) (S_1 (x) ... (x) S_N)``.

    ``tau_j = -1`` on sites where the two factors anticommute; ``S_j`` is the
    half anticommutator on commuting sites and the half commutator otherwise,
    both of which equal the plain product ``sigma_j sigma'_j`` there.
    """
    _check_pair(a, b)
    anti = (a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)
    positions = tuple(q for q in range(a.n) if (anti >> q) & 1)
    commute = len(positions) % 2 == 0
    return CommutationStructure(commute, positions, 0 if commute else 2, pauli_multiply(a, b))


def conjugation_superoperator(p):
    """``P (x) conj(P)``; its square is the identity for every Pauli string."""
    m = p.to_matrix()
    return np.kron(m, m.conj())


def merge_duplicates(strings, gammas):
    """Combine strings equal up to phase (they give the same dissipator) by summing rates."""
    merged = {}
    order = []
    for s, g in zip(strings, gammas):
        key = (s.n, s.x_mask, s.z_mask)
        if key not in merged:
            order.append(key)
            merged[key] = 0.0
        merged[key] += float(g)
    return [PauliString(*k) for k in order], [merged[k] for k in order]


def _validate(strings, gammas, cap):
    if len(strings) != len(gammas):
        raise ValueError("need one rate per Pauli string")
    if not strings:
        raise ValueError("need at least one Pauli string")
    if len(strings) > cap:
        raise ValueError(f"{len(strings)} strings exceed the cap of {cap}")
    keys = [(s.x_mask, s.z_mask) for s in strings]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate Pauli strings; merge their rates first")
    if any(s.n != strings[0].n for s in strings):
        raise ValueError("Pauli strings act on different qubit counts")
    if any(g < 0 for g in gammas):
        raise ValueError("rates must be non-negative")


def error_probabilities(gammas, t, cap=DEFAULT_CAP):
    """``p_E(t) = prod_n (1 + (-1)^{[n in E]} exp(-2 gamma_n t)) / 2`` indexed by bitmask ``E``."""
    gammas = np.asarray(gammas, dtype=float).reshape(-1)
    if t < 0 or np.any(gammas < 0):
        raise ValueError("rates and time must be non-negative")
    if gammas.size > cap:
        raise ValueError(f"{gammas.size} rates exceed the cap of {cap}")
    p = np.ones(1)
    for g in gammas:
        e = math.exp(-2.0 * g * t)
        p = np.concatenate([p * (1 + e) / 2, p * (1 - e) / 2])
    return p


def reduced_string(strings, E):
    """Product ``prod_{n in E} Pi_n`` in increasing ``n``."""
    out = PauliString(strings[0].n, 0, 0)
    for j, s in enumerate(strings):
        if (E >> j) & 1:
            out = pauli_multiply(out, s)
    return out


def pauli_circuit(p):
    """Single-qubit Pauli gates for ``p``; its phase goes to the global-phase slot."""
    gates = tuple(pauli(p.letter(q), q) for q in p.support)
    return Circuit(p.n, (), gates, 1.0, p.phase_exp * math.pi / 2, p.label, 1 << p.n)


def build_pauli_kraus(strings, gammas, t, cap=DEFAULT_CAP):
    """``[(sqrt(p_E(t)), circuit for Pi_E)]`` over every error set ``E`` in bitmask order."""
    _validate(strings, gammas, cap)
    probs = error_probabilities(gammas, t, cap)
    out = []
    for E, pE in enumerate(probs):
        c = pauli_circuit(reduced_string(strings, E))
        w = math.sqrt(max(pE, 0.0))
        out.append((w, Circuit(c.n_system, (), c.gates, w, c.global_phase, c.label, c.system_dim)))
    return out


def pauli_kraus_operators(strings, gammas, t, cap=DEFAULT_CAP):
    _validate(strings, gammas, cap)
    probs = error_probabilities(gammas, t, cap)
    return [math.sqrt(max(p, 0.0)) * reduced_string(strings, E).to_matrix() for E, p in enumerate(probs)]


def pauli_system(strings, gammas, hbar=1.0):
    d = 1 << strings[0].n
    return LindbladSystem(np.zeros((d, d)), tuple(s.to_matrix() for s in strings), tuple(gammas), hbar)


class PauliTrajectory:
    """Circuit expectations computed once and reweighted for any time.

    The reduced strings do not depend on ``t``; only ``p_E(t)`` does.
    """

    def __init__(self, strings, gammas, values):
        self.strings = list(strings)
        self.gammas = list(gammas)
        self.values = np.asarray(values, dtype=float)

    @classmethod
    def from_expectations(cls, strings, gammas, evaluate, cap=DEFAULT_CAP):
        """``evaluate(circuit)`` returns the filtered expectation for one error set."""
        _validate(strings, gammas, cap)
        circuits = [pauli_circuit(reduced_string(strings, E)) for E in range(1 << len(strings))]
        return cls(strings, gammas, [evaluate(c) for c in circuits])

    def at(self, t):
        # same weights and summation order as a fresh circuit evaluation
        p = error_probabilities(self.gammas, t)
        return recombine([(math.sqrt(max(pe, 0.0)), v) for pe, v in zip(p, self.values)])
