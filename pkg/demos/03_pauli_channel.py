"""A two-qubit Pauli channel: finite Kraus set, one circuit per error set.

The circuits do not depend on t, only their weights do.  So the expectation
values are computed once and reweighted for every time.
"""
import numpy as np

from openkraus import exact_evolve
from openkraus import simulator as S
from openkraus.pauli import (
    PauliString,
    PauliTrajectory,
    build_pauli_kraus,
    error_probabilities,
    pauli_commutes,
    pauli_system,
)

strings = [PauliString.from_label(s) for s in ("XI", "IZ", "YY")]
gammas = [0.3, 0.7, 0.2]

# symbolic products and commutators, no matrices involved
a, b = strings[0], strings[2]
print(a, "*", b, "=", a * b)
cs = pauli_commutes(a, b)
print("commute:", cs.commute, " anticommuting sites:", cs.anticommuting_positions)

t = 0.9
print("\nerror set  p_E(t)   circuit")
for E, ((w, c), p) in enumerate(zip(build_pauli_kraus(strings, gammas, t), error_probabilities(gammas, t))):
    print(f"  {E:03b}     {p:.4f}   {c.label} ({len(c.gates)} gates)")

psi = np.array([1, 1, 1, 1j]) / 2
rho0 = np.outer(psi, psi.conj())
obs = PauliString.from_label("XX").to_matrix()


def evaluate(circuit):
    return S.circuit_expectation(S.with_initial_state(circuit, rho0), obs)


traj = PauliTrajectory.from_expectations(strings, gammas, evaluate)
sys = pauli_system(strings, gammas)
print("\n t     circuits       expm")
for t in (0.0, 0.5, 1.0, 2.0, 5.0):
    ref = np.trace(obs @ exact_evolve(sys, rho0, t)).real
    print(f"{t:4.1f}  {traj.at(t): .10f}  {ref: .10f}")
