"""From a Kraus term to a circuit whose depth does not grow with t.

A diagonal contraction diag(v) is written with one ancilla and a ladder of
controlled R_y rotations.  Its angles come from the Q_N transform, which needs
only N 2^(N-1) subtractions.
"""
import numpy as np

from openkraus import LindbladSystem, classify, series
from openkraus import circuits as C

# Q_N is the N-fold tensor power of [[1, 0], [-1, 1]]
u = np.arange(8) ** 2
out, count = C.qn_apply(u, return_count=True)
print("Q_3 u          =", out)
print("dense Q_3 @ u  =", C.qn_matrix(3) @ u)
print("subtractions   =", count)

# contraction ladder for v on 2 system qubits plus one ancilla
v = np.array([1.0, 0.7, 0.4, 0.05])
beta = C.diagonal_contraction_params(v)
gates = C.diagonal_contraction_gates(beta, [0, 1], 2)
circ = C.Circuit(2, (("sznagy", 2),), tuple(gates))
print("\nladder gates:", [g.kind for g in gates])
print("block diagonal:", np.round(np.diag(C.postselected_block(circ)).real, 12))

# a full Kraus circuit for a qubit with damping and a field
sm = np.array([[0, 1], [0, 0]], dtype=complex)
sys = LindbladSystem(np.diag([0.0, 1.0]).astype(complex), (sm,), (0.6,))
cls = classify(sys)
print("\nsystem case:", cls.label)
for t in (0.01, 1.0, 100.0):
    rows = []
    for term in series.kraus_terms(sys, cls, 1):
        c = C.build_kraus_circuit(sys, cls, term, t)
        K = series.kraus_operator(sys, cls, term.m, term.k, t)
        err = np.abs(C.postselected_block(c) * c.weight - K).max()
        rows.append(f"m={term.m}: {len(c.gates)} gates, {c.n_qubits} qubits, |block*a - K|={err:.1e}")
    print(f"t={t:g}\n  " + "\n  ".join(rows))

# circuits serialize to JSON and come back unchanged
text = C.dumps_circuits([c])
back = C.loads_circuits(text)[0]
print("\nround trip equal:", back == c)
