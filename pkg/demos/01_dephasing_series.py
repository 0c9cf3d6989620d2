"""Dephasing qubit: classify, expand into Kraus terms, truncate, compare with expm."""
import numpy as np

from openkraus import LindbladSystem, classify, exact_evolve, series

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)

gamma, omega = 0.8, 1.5
sys = LindbladSystem(0.5 * omega * Z, (Z,), (gamma,))
cls = classify(sys)
print("case:", cls.label, " alpha =", cls.alpha, " c =", cls.c)

# start in |+>, whose coherence decays as exp(-2 gamma t)
rho0 = np.full((2, 2), 0.5, dtype=complex)
t = 1.0
exact = exact_evolve(sys, rho0, t)

# error bound against the measured error, order by order
print("\n M   measured HS error   bound")
for M in (1, 2, 4, 6, 8, 12):
    approx = series.evaluate_series(sys, cls, rho0, t, M)
    err = np.linalg.norm(exact - approx)
    print(f"{M:2d}   {err:.3e}           {series.error_bound(sys, cls, t, M):.3e}")

# the order actually used for a requested tolerance
for eps in (1e-3, 1e-6, 1e-10):
    tr = series.truncation_order(sys, cls, t, eps)
    print(f"\neps={eps:g}: M={tr.order}, bound={tr.bound:.2e}, x=f*||L||={tr.x:.2f}")

# |<X>| should follow exp(-2 gamma t); the Hamiltonian only rotates X into Y
M = series.truncation_order(sys, cls, 3.0, 1e-10).order
for t in np.linspace(0, 3, 7):
    rho = series.evaluate_series(sys, cls, rho0, t, M)
    coh = 2 * abs(rho[0, 1])
    print(f"t={t:.1f}  |<X + iY>|={coh:.10f}  exp(-2gt)={np.exp(-2 * gamma * t):.10f}")

# completeness of the truncated operator set
for M in (4, 8, 12, 16):
    print(f"completeness defect at t=1, M={M}:", f"{np.abs(series.completeness_defect(sys, cls, 1.0, M)).max():.2e}")
