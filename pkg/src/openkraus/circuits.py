"""Circuit IR and the builders that turn Kraus terms into fixed-structure circuits.

Conventions
-----------
* Qubit 0 is the least significant bit of a basis index.  Multi-qubit gate
  matrices use the gate's own qubit list the same way: ``qubits[0]`` is the
  low bit of the local index.
* Sz.-Nagy ancillas sit above the system register; reading ``|0>`` on an
  ancilla selects the system block of the dilation.
* ``phase`` / ``controlled_phase`` gates multiply ``|1>`` (all controls and
  target set) by ``exp(-i theta)``, so that the parameter map ``t Q_N omega``
  reproduces ``diag(exp(-i t omega))`` directly.
* ``controlled_ry`` applies ``exp(-i beta Y / 2)`` to the target when every
  control reads 1 (an empty control set means unconditional).
* ``Circuit.global_phase`` is bookkeeping only: the intended operator is
  ``exp(i global_phase)`` times the gate product.  Simulation never applies it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .lindblad import UnsupportedSystemError
from .linalg import dagger
from .series import hamiltonian_propagator, scalar_schedule

GATE_KINDS = (
    "pauli",
    "phase",
    "controlled_phase",
    "controlled_ry",
    "opaque_unitary",
    "permutation",
    "state_prep",
)

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    controls: tuple = ()
    angle: float | None = None
    axis: str | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)
    mapping: tuple | None = None
    amplitudes: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qs = tuple(int(q) for q in self.qubits)
        cs = tuple(int(q) for q in self.controls)
        object.__setattr__(self, "qubits", qs)
        object.__setattr__(self, "controls", cs)
        every = qs + cs
        if len(set(every)) != len(every):
            raise ValueError(f"repeated qubit in {self.kind} gate: {every}")
        if any(q < 0 for q in every):
            raise ValueError("qubit indices must be non-negative")
        if self.kind == "opaque_unitary":
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (1 << len(qs),) * 2:
                raise ValueError(f"opaque matrix shape {m.shape} does not fit {len(qs)} qubits")
            if not linalg.is_unitary(m, 1e-9):
                raise ValueError("opaque_unitary matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.kind == "permutation":
            mp = tuple(int(j) for j in self.mapping)
            if sorted(mp) != list(range(1 << len(qs))):
                raise ValueError("permutation mapping is not a bijection on the register")
            object.__setattr__(self, "mapping", mp)
        elif self.kind == "state_prep":
            a = np.array(self.amplitudes, dtype=complex).reshape(-1)
            if a.size != 1 << len(qs):
                raise ValueError("state_prep amplitude count does not match qubits")
            if abs(np.linalg.norm(a) - 1.0) > 1e-12:
                raise ValueError("state_prep amplitudes are not normalized")
            a.setflags(write=False)
            object.__setattr__(self, "amplitudes", a)
        elif self.kind == "pauli":
            if self.axis not in ("X", "Y", "Z") or len(qs) != 1:
                raise ValueError("pauli gate needs axis X/Y/Z on one qubit")
        elif len(qs) != 1:
            raise ValueError(f"{self.kind} acts on exactly one target qubit")

    @property
    def all_qubits(self):
        return self.controls + self.qubits

    def local_matrix(self):
        """Matrix on ``self.qubits`` (controls excluded)."""
        if self.kind == "pauli":
            return _PAULI[self.axis]
        if self.kind in ("phase", "controlled_phase"):
            return np.diag([1.0, np.exp(-1j * self.angle)])
        if self.kind == "controlled_ry":
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "opaque_unitary":
            return self.matrix
        if self.kind == "permutation":
            n = len(self.mapping)
            p = np.zeros((n, n), dtype=complex)
            p[list(self.mapping), list(range(n))] = 1
            return p
        return _completion_unitary(self.amplitudes)


def _completion_unitary(amplitudes):
    """A unitary whose first column is ``amplitudes`` (maps ``|0...0>`` to the state)."""
    a = np.asarray(amplitudes, dtype=complex)
    n = a.size
    q, r = np.linalg.qr(np.column_stack([a, np.eye(n, dtype=complex)])[:, :n])
    if abs(abs(r[0, 0]) - 1.0) > 1e-9:
        q, _ = np.linalg.qr(np.column_stack([a, np.eye(n, dtype=complex)]))
        q = q[:, :n]
    q = q.copy()
    q[:, 0] = a
    return q


def pauli(axis, qubit):
    return Gate("pauli", (qubit,), axis=axis)


def phase(theta, qubit):
    return Gate("phase", (qubit,), angle=float(theta))


def controlled_phase(theta, controls, target):
    return Gate("controlled_phase", (target,), controls=tuple(controls), angle=float(theta))


def controlled_ry(beta, controls, target):
    return Gate("controlled_ry", (target,), controls=tuple(controls), angle=float(beta))


def opaque_unitary(matrix, qubits):
    return Gate("opaque_unitary", tuple(qubits), matrix=matrix)


def permutation(mapping, qubits):
    return Gate("permutation", tuple(qubits), mapping=tuple(mapping))


def state_prep(amplitudes, qubits):
    return Gate("state_prep", tuple(qubits), amplitudes=amplitudes)


@dataclass(frozen=True)
class Circuit:
    n_system: int
    ancillas: tuple = ()  # (role, qubit index), role in {"sznagy", "prep"}
    gates: tuple = ()
    weight: float = 1.0
    global_phase: float = 0.0
    label: str = ""
    system_dim: int | None = None

    def __post_init__(self):
        anc = tuple((str(r), int(i)) for r, i in self.ancillas)
        object.__setattr__(self, "ancillas", anc)
        object.__setattr__(self, "gates", tuple(self.gates))
        for role, idx in anc:
            if role not in ("sznagy", "prep"):
                raise ValueError(f"unknown ancilla role {role!r}")
        idxs = [i for _, i in anc]
        if sorted(idxs) != list(range(self.n_system, self.n_system + len(anc))):
            raise ValueError("ancilla indices must fill the register above the system qubits")
        n = self.n_qubits
        for g in self.gates:
            if max(g.all_qubits) >= n:
                raise ValueError(f"gate {g.kind} touches qubit outside the {n}-qubit register")

    @property
    def n_qubits(self):
        return self.n_system + len(self.ancillas)

    @property
    def postselect_mask(self):
        return tuple(i for role, i in self.ancillas if role == "sznagy")

    @property
    def prep_qubits(self):
        return tuple(i for role, i in self.ancillas if role == "prep")

    def structure(self):
        """Parameter-free signature: gate kinds, arities and qubits in order."""
        return tuple((g.kind, g.controls, g.qubits) for g in self.gates)

    def with_ancillas(self, role, count):
        start = self.n_qubits
        extra = tuple((role, start + j) for j in range(count))
        return replace(self, ancillas=self.ancillas + extra)


# ---------------------------------------------------------------- dense oracles


def embed_gate(gate, n_qubits):
    """Full ``2^n x 2^n`` matrix of a gate (controls included)."""
    dim = 1 << n_qubits
    local = gate.local_matrix()
    qs = gate.qubits
    k = len(qs)
    out = np.zeros((dim, dim), dtype=complex)
    cmask = sum(1 << c for c in gate.controls)
    for col in range(dim):
        if col & cmask != cmask:
            out[col, col] = 1
            continue
        loc = sum(((col >> q) & 1) << j for j, q in enumerate(qs))
        rest = col & ~sum(1 << q for q in qs)
        for r in range(1 << k):
            amp = local[r, loc]
            if amp != 0:
                row = rest | sum(((r >> j) & 1) << q for j, q in enumerate(qs))
                out[row, col] += amp
    return out


def circuit_unitary(circuit, columns=None):
    """Dense gate product; ``columns`` keeps only the first that many columns."""
    dim = 1 << circuit.n_qubits
    u = np.eye(dim, columns or dim, dtype=complex)
    for g in circuit.gates:
        u = embed_gate(g, circuit.n_qubits) @ u
    return u


def postselected_block(circuit, include_global_phase=True):
    """``(<anc=0| (x) I) U (|anc=0> (x) I)`` restricted to the system register."""
    ds = 1 << circuit.n_system
    # every ancilla bit is above the system bits, so only the first ds columns matter
    block = circuit_unitary(circuit, ds)[:ds].copy()
    if include_global_phase:
        block *= np.exp(1j * circuit.global_phase)
    return block


def resource_counts(circuit):
    """Gate tallies, plus the elementary-gate estimate ``sum max(1, #controls)``."""
    counts = {}
    elementary = 0
    for g in circuit.gates:
        counts[g.kind] = counts.get(g.kind, 0) + 1
        elementary += max(1, len(g.controls))
    return {
        "gates": len(circuit.gates),
        "by_kind": counts,
        "elementary_estimate": elementary,
        "qubits": circuit.n_qubits,
        "ancillas": len(circuit.ancillas),
    }


# ---------------------------------------------------------------- parameter maps


def _n_from_length(size):
    n = int(size).bit_length() - 1
    if size < 1 or (1 << n) != size:
        raise ValueError(f"length {size} is not a power of two")
    return n


def qn_apply(u, return_count=False):
    """``Q_N u`` with ``Q_N = [[1, 0], [-1, 1]]^{(x) N}`` in ``N 2^{N-1}`` subtractions.

    At step ``s`` every entry whose index has bit ``s`` set subtracts its
    partner with that bit cleared.  Integer inputs stay integer.
    """
    u = np.array(u)
    n = _n_from_length(u.size)
    if not np.issubdtype(u.dtype, np.number) or u.dtype == bool:
        u = u.astype(float)
    out = u.reshape(-1).copy()
    subtractions = 0
    for s in range(n):
        view = out.reshape(-1, 2, 1 << s)
        view[:, 1, :] -= view[:, 0, :]
        subtractions += view[:, 1, :].size
    if return_count:
        return out, subtractions
    return out


def qn_matrix(n):
    q = np.array([[1, 0], [-1, 1]])
    out = np.ones((1, 1), dtype=int)
    for _ in range(n):
        out = np.kron(out, q)
    return out


def diagonal_phase_params(omega, t):
    """``theta = t Q_N omega`` for ``W = diag(exp(-i t omega))``; ``theta[0]`` is global."""
    omega = np.asarray(omega, dtype=float)
    return qn_apply(t * omega)


def diagonal_contraction_params(v, t=None):
    """``beta = -2 Q_N arcsin(v)`` for a diagonal contraction with entries ``v`` in [0, 1].

    ``v`` already carries the time dependence (e.g. ``exp(-t lam)``); ``t`` is
    accepted for call-site symmetry with :func:`diagonal_phase_params`.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
        raise ValueError("contraction entries must lie in [0, 1]")
    return qn_apply(-2.0 * np.arcsin(np.clip(v, 0.0, 1.0)))


def _bits(s, qubits):
    return [q for j, q in enumerate(qubits) if (s >> j) & 1]


def diagonal_phase_gates(theta, qubits):
    """Phase ladder over every non-empty subset of ``qubits``; returns (gates, global phase)."""
    gates = []
    for s in range(1, len(theta)):
        members = _bits(s, qubits)
        if len(members) == 1:
            gates.append(phase(theta[s], members[0]))
        else:
            gates.append(controlled_phase(theta[s], members[:-1], members[-1]))
    return gates, -float(theta[0])


def diagonal_contraction_gates(beta, qubits, ancilla):
    """Ancilla flip to ``|1>`` followed by the controlled-``R_y`` ladder."""
    gates = [pauli("X", ancilla)]
    for s in range(len(beta)):
        gates.append(controlled_ry(beta[s], _bits(s, qubits), ancilla))
    return gates


# ---------------------------------------------------------------- dilations


def sznagy_dilation(K, tol=1e-9):
    """``[[K, D_{K^dagger}], [D_K, -K^dagger]]`` with ``D_K = sqrt(I - K^dagger K)``."""
    K = linalg.as_matrix(K, "K")
    d = K.shape[0]
    if K.shape != (d, d):
        raise ValueError("K must be square")
    _n_from_length(d)
    nrm = linalg.op_norm(K)
    if nrm > 1 + tol:
        raise ValueError(f"operator norm {nrm:.12g} exceeds 1; not a contraction")
    if nrm > 1:
        K = K / nrm
    # both defects from one SVD K = W S V^dagger, so that K D_K = D_{K^dagger} K holds
    # to roundoff even when singular values sit at 1 (independent square roots
    # would amplify eigenvalue noise near zero)
    w, s, vh = np.linalg.svd(K)
    c = np.sqrt(np.clip(1.0 - s * s, 0.0, None))
    d_k = (dagger(vh) * c) @ vh
    d_kd = (w * c) @ dagger(w)
    return np.block([[K, d_kd], [d_k, -dagger(K)]])


def sznagy_dilate(K, qubits):
    """Opaque gate for the dilation of ``K`` on ``qubits`` (system qubits then ancilla)."""
    return opaque_unitary(sznagy_dilation(K), qubits)


# ---------------------------------------------------------------- builders


def _padded(sys):
    n = max(1, linalg.next_pow2_qubits(sys.dim))
    return n, (lambda a: linalg.pad_to_qubits(a, n))


def hamiltonian_spectrum(sys):
    """Unitary ``U`` with ``V_H / hbar = U diag(omega - i lam) U^dagger`` on the padded register."""
    n, pad = _padded(sys)
    vh = pad(sys.effective_hamiltonian()) / sys.hbar
    if not linalg.is_normal(vh, 1e-9):
        raise ValueError("effective Hamiltonian is not normal; diagonal circuit unavailable")
    w, u = linalg.sorted_eig_normal(vh)
    omega = w.real
    lam = -w.imag
    if lam.min(initial=0.0) < -1e-9 * max(1.0, float(np.abs(w).max(initial=0.0))):
        raise ValueError("effective Hamiltonian has a growing mode")
    return u, omega, np.clip(lam, 0.0, None)


def uh_gates(sys, t, system_qubits, ancilla):
    """Gates realizing the dilation of ``expm(-i t V_H / hbar)``; returns (gates, global phase)."""
    try:
        u, omega, lam = hamiltonian_spectrum(sys)
    except ValueError as exc:
        if "not normal" not in str(exc):
            raise
        _, pad = _padded(sys)
        prop = pad(hamiltonian_propagator(sys, t))
        if sys.dim != prop.shape[0]:
            prop[sys.dim:, sys.dim:] = np.eye(prop.shape[0] - sys.dim)
        return [sznagy_dilate(prop, list(system_qubits) + [ancilla])], 0.0
    theta = diagonal_phase_params(omega, t)
    beta = diagonal_contraction_params(np.exp(-t * lam))
    phase_gates, gphase = diagonal_phase_gates(theta, system_qubits)
    gates = [opaque_unitary(dagger(u), system_qubits)]
    gates += diagonal_contraction_gates(beta, system_qubits, ancilla)
    gates += phase_gates
    gates.append(opaque_unitary(u, system_qubits))
    return gates, gphase


def build_uh_circuit(sys, cls, t):
    """Fixed-structure circuit ``U W(t) Lambda(t) U^dagger`` for a normal ``V_H``."""
    if not cls.supported:
        raise UnsupportedSystemError(cls)
    n, _ = _padded(sys)
    hamiltonian_spectrum(sys)  # raises for non-normal V_H
    qubits = list(range(n))
    gates, gphase = uh_gates(sys, t, qubits, n)
    return Circuit(n, (("sznagy", n),), tuple(gates), 1.0, gphase, "U_H", sys.dim)


build_UH_circuit = build_uh_circuit


def build_kraus_circuit(sys, cls, term, t):
    """Circuit whose postselected block times ``term.amplitude(t)`` is ``K_{m,k}(t)``.

    The rescaled operators are applied in the order ``k_m, ..., k_1`` with one
    fresh Sz.-Nagy ancilla each, followed by the effective-Hamiltonian block.
    ``Circuit.weight`` includes the multiplicity of grouped terms.
    """
    scalar_schedule(cls)
    n, pad = _padded(sys)
    sysq = list(range(n))
    gates = []
    anc = []
    for step, base_idx in enumerate(reversed(term.k)):
        L = sys.lindblads[base_idx]
        nrm = linalg.op_norm(L)
        A = pad(L / nrm) if nrm > 0 else pad(np.zeros_like(L))
        a = n + step
        anc.append(("sznagy", a))
        gates.append(sznagy_dilate(A, sysq + [a]))
    a = n + len(term.k)
    anc.append(("sznagy", a))
    ug, gphase = uh_gates(sys, t, sysq, a)
    gates += ug
    label = "K[m=%d,k=%s]" % (term.m, ",".join(str(j) for j in term.k))
    return Circuit(n, tuple(anc), tuple(gates), term.weight(t), gphase, label, sys.dim)


# ---------------------------------------------------------------- JSON dump


def _cpair(z):
    z = complex(z)
    return [z.real, z.imag]


def _cmatrix(m):
    return [[_cpair(x) for x in row] for row in np.asarray(m)]


def _from_cmatrix(rows):
    return np.array([[complex(x[0], x[1]) for x in row] for row in rows], dtype=complex)


def gate_to_dict(g):
    out = {"variant": g.kind, "qubits": list(g.qubits)}
    if g.controls or g.kind in ("controlled_phase", "controlled_ry"):
        out["controls"] = list(g.controls)
    if g.angle is not None:
        out["angle"] = g.angle
    if g.axis is not None:
        out["axis"] = g.axis
    if g.matrix is not None:
        out["matrix"] = _cmatrix(g.matrix)
    if g.mapping is not None:
        out["mapping"] = list(g.mapping)
    if g.amplitudes is not None:
        out["amplitudes"] = [_cpair(a) for a in g.amplitudes]
    return out


def gate_from_dict(d):
    kind = d["variant"]
    kw = {"qubits": tuple(d["qubits"]), "controls": tuple(d.get("controls", ()))}
    if "angle" in d:
        kw["angle"] = float(d["angle"])
    if "axis" in d:
        kw["axis"] = d["axis"]
    if "matrix" in d:
        kw["matrix"] = _from_cmatrix(d["matrix"])
    if "mapping" in d:
        kw["mapping"] = tuple(d["mapping"])
    if "amplitudes" in d:
        kw["amplitudes"] = np.array([complex(a[0], a[1]) for a in d["amplitudes"]])
    return Gate(kind, **kw)


def circuit_to_dict(c):
    return {
        "n_system": c.n_system,
        "ancillas": [{"role": r, "index": i} for r, i in c.ancillas],
        "gates": [gate_to_dict(g) for g in c.gates],
        "weight": c.weight,
        "postselect_mask": list(c.postselect_mask),
        "global_phase": c.global_phase,
        "label": c.label,
        "system_dim": c.system_dim,
    }


def circuit_from_dict(d):
    c = Circuit(
        int(d["n_system"]),
        tuple((a["role"], a["index"]) for a in d.get("ancillas", [])),
        tuple(gate_from_dict(g) for g in d.get("gates", [])),
        float(d.get("weight", 1.0)),
        float(d.get("global_phase", 0.0)),
        d.get("label", ""),
        d.get("system_dim"),
    )
    if list(c.postselect_mask) != list(d.get("postselect_mask", c.postselect_mask)):
        raise ValueError("postselect_mask disagrees with ancilla roles")
    return c


def dumps_circuits(circuits, **extra):
    payload = dict(extra)
    payload["circuits"] = [circuit_to_dict(c) for c in circuits]
    return json.dumps(payload, indent=1)


def loads_circuits(text):
    return [circuit_from_dict(c) for c in json.loads(text)["circuits"]]
