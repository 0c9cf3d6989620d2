"""Damped harmonic oscillator on three qubits (eight Fock levels).

The truncated ladder operator is nilpotent, so the Kraus series ends at
m = 7.  Each term compiles to a shift, a contraction ladder and N phase gates.
"""
import numpy as np

from openkraus import lindblad
from openkraus import circuits as C
from openkraus import simulator as S
from openkraus.qho import QHOConfig, number_operator, qho_circuits, qho_kraus_operators, qho_system

cfg = QHOConfig(n_qubits=3, omega=2.0, gamma=0.5)
sys = qho_system(cfg)
print("case:", lindblad.classify(sys).label, " alpha =", lindblad.classify(sys).alpha)

# a coherent-like superposition of the lowest levels
amps = np.array([0.5, 0.5, 0.4, 0.3, 0.3, 0.2, 0.1, 0.1], dtype=complex)
amps /= np.linalg.norm(amps)
rho0 = np.outer(amps, amps.conj())
N = number_operator(cfg.dim)
n0 = np.trace(N @ rho0).real

print("\n t     <N> circuits    <N> Kraus      n0 exp(-gt)")
for t in (0.0, 0.5, 1.0, 2.0, 4.0):
    rho_k = sum(K @ rho0 @ K.conj().T for K in qho_kraus_operators(cfg, t))
    circs = [S.with_initial_state(c, rho0) for c in qho_circuits(cfg, t)]
    val = S.recombine([(c.weight, S.circuit_expectation(c, N)) for c in circs])
    print(f"{t:4.1f}  {val:.12f}  {np.trace(N @ rho_k).real:.12f}  {n0 * np.exp(-cfg.gamma * t):.12f}")

# the gate count is the same at every time
for t in (0.01, 100.0):
    counts = [C.resource_counts(c)["gates"] for c in qho_circuits(cfg, t)]
    print(f"gates per term at t={t:g}:", counts)

ks = qho_kraus_operators(cfg, 1.3)
print("\nsum K^dag K - I:", np.abs(sum(K.conj().T @ K for K in ks) - np.eye(cfg.dim)).max())
