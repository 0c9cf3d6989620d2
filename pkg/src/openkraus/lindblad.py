"""Lindblad systems, their superoperators, and the classical reference solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import dagger, commutator


class UnsupportedSystemError(ValueError):
    """The system does not satisfy the commutation relation needed for a Kraus series."""

    def __init__(self, classification):
        self.classification = classification
        super().__init__(classification.reason)


@dataclass(frozen=True)
class LindbladSystem:
    """Hamiltonian ``H`` with jump operators ``L_n`` at rates ``gamma_n``."""

    H: np.ndarray
    lindblads: tuple = ()
    gammas: tuple = ()
    hbar: float = 1.0

    def __post_init__(self):
        H = linalg.as_matrix(self.H, "H")
        if H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if not linalg.is_hermitian(H):
            raise ValueError("H must be Hermitian")
        ls = tuple(linalg.as_matrix(L, "L") for L in self.lindblads)
        gs = tuple(float(g) for g in self.gammas)
        if len(ls) != len(gs):
            raise ValueError("need one rate per Lindblad operator")
        for L in ls:
            if L.shape != H.shape:
                raise ValueError(f"Lindblad operator shape {L.shape} does not match H {H.shape}")
        if any(g < 0 for g in gs):
            raise ValueError("damping rates must be non-negative")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        for arr in (H, *ls):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "lindblads", ls)
        object.__setattr__(self, "gammas", gs)

    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def n_lindblads(self):
        return len(self.lindblads)

    def active(self):
        """Pairs ``(L, gamma)`` that actually contribute (non-zero rate and operator)."""
        return [(L, g) for L, g in zip(self.lindblads, self.gammas) if g > 0 and np.any(L)]

    def pruned(self):
        act = self.active()
        return LindbladSystem(self.H, tuple(L for L, _ in act), tuple(g for _, g in act), self.hbar)

    def scaled_rates(self, s):
        return LindbladSystem(self.H, self.lindblads, tuple(s * g for g in self.gammas), self.hbar)

    def effective_hamiltonian(self):
        """``V_H = H - (i hbar / 2) sum_n gamma_n L_n^dagger L_n``."""
        v = self.H.astype(complex).copy()
        for L, g in zip(self.lindblads, self.gammas):
            v -= 0.5j * self.hbar * g * (dagger(L) @ L)
        return v


@dataclass(frozen=True)
class SuperoperatorPair:
    h_super: np.ndarray
    l_super: np.ndarray

    @property
    def total(self):
        return self.h_super + self.l_super


@dataclass(frozen=True)
class CaseClassification:
    label: str  # "CaseI", "CaseII" or "Unsupported"
    alpha: float = 0.0
    c: float = 0.0
    nu: complex | None = None
    lam: complex | None = None
    residuals: dict = field(default_factory=dict)
    method: str = ""
    reason: str = ""

    @property
    def supported(self):
        return self.label in ("CaseI", "CaseII")


def build_superoperators(sys):
    d = sys.dim
    h_super = linalg.conj_kron(-1j * sys.effective_hamiltonian() / sys.hbar, "sum")
    l_super = np.zeros((d * d, d * d), dtype=complex)
    for L, g in zip(sys.lindblads, sys.gammas):
        l_super += g * linalg.conj_kron(L, "product")
    return SuperoperatorPair(h_super, l_super)


def lindblad_rhs(sys, rho):
    rho = linalg.as_matrix(rho, "rho")
    if rho.shape != sys.H.shape:
        raise ValueError(f"rho shape {rho.shape} does not match system dimension {sys.dim}")
    out = -1j / sys.hbar * commutator(sys.H, rho)
    for L, g in zip(sys.lindblads, sys.gammas):
        LdL = dagger(L) @ L
        out += g * (L @ rho @ dagger(L) - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def _hs_inner(a, b):
    return complex(np.vdot(a, b))


def _eigen_relation(ops, images, tol):
    """Fit ``images[n] = mu * ops[n]`` with one shared ``mu``; return (mu, residual)."""
    mus = []
    res = 0.0
    for L, img in zip(ops, images):
        mu = _hs_inner(L, img) / _hs_inner(L, L)
        mus.append(mu)
        res = max(res, linalg.hs_norm(img - mu * L) / linalg.hs_norm(L))
    mus = np.array(mus)
    spread = float(np.max(np.abs(mus - mus[0]))) if len(mus) else 0.0
    res = max(res, spread / max(abs(mus[0]), 1.0))
    return complex(mus[0]), res


def _classify_by_conditions(sys, tol):
    """Check the operator-level sufficient conditions; returns (alpha, nu, lam, residuals)."""
    act = sys.active()
    ops = [L for L, _ in act]
    LdLs = [dagger(L) @ L for L in ops]
    H = sys.H
    scale = max(linalg.hs_norm(H), 1.0)
    res = {}
    res["i"] = max(
        (linalg.hs_norm(commutator(H, m)) / (scale * max(linalg.hs_norm(m), 1.0)) for m in LdLs),
        default=0.0,
    )
    res["ii"] = max(
        (
            linalg.hs_norm(commutator(a, b)) / max(linalg.hs_norm(a) * linalg.hs_norm(b), 1.0)
            for i, a in enumerate(LdLs)
            for b in LdLs[i + 1:]
        ),
        default=0.0,
    )
    nu, res["iii"] = _eigen_relation(ops, [commutator(H, L) for L in ops], tol)
    weighted = sum(g * m for (_, g), m in zip(act, LdLs))
    lam, res["iv"] = _eigen_relation(ops, [commutator(weighted, L) for L in ops], tol)
    alpha = 2.0 * nu.imag / sys.hbar - lam.real
    return alpha, nu, lam, res


def _classify_by_superoperators(sys):
    """Least-squares fit of ``[H, L] = alpha L + c 1`` on the superoperators."""
    pair = build_superoperators(sys)
    comm = commutator(pair.h_super, pair.l_super)
    n = comm.shape[0]
    design = np.stack([pair.l_super.reshape(-1), np.eye(n).reshape(-1)], axis=1)
    coef, *_ = np.linalg.lstsq(design, comm.reshape(-1), rcond=None)
    alpha, c = coef
    fit = alpha * pair.l_super + c * np.eye(n)
    cnorm = linalg.hs_norm(comm)
    residual = linalg.hs_norm(comm - fit)
    return complex(alpha), complex(c), residual, cnorm


def classify(sys, tol=1e-9):
    """Decide whether ``sys`` admits the Case I or Case II Kraus series.

    Two independent routes are tried: the operator-level conditions
    (commuting dissipators, shared eigen-relations ``[H, L_n] = nu L_n`` and
    ``sum gamma [L^dagger L, L_n] = lam L_n``) and a direct least-squares fit
    of the superoperator commutator.  The classification is accepted if
    either passes.
    """
    if any(g < 0 for g in sys.gammas):
        raise ValueError("damping rates must be non-negative")
    red = sys.pruned()
    if red.n_lindblads == 0:
        return CaseClassification("CaseI", 0.0, 0.0, 0j, 0j, {}, method="trivial")

    alpha_c, nu, lam, res = _classify_by_conditions(red, tol)
    alpha_s, c_s, residual, cnorm = _classify_by_superoperators(red)
    res["superoperator"] = residual / cnorm if cnorm > 0 else 0.0
    conds_ok = all(res[k] <= tol for k in ("i", "ii", "iii", "iv"))
    # absolute floor keeps roundoff-sized commutators from failing the relative test
    super_ok = residual <= tol * max(cnorm, 1.0)

    if conds_ok:
        alpha, c, method = float(alpha_c), 0.0, "conditions"
    elif super_ok and abs(alpha_s.imag) <= tol * max(1.0, abs(alpha_s)) and abs(c_s.imag) <= tol * max(1.0, abs(c_s)):
        alpha, c, method = float(alpha_s.real), float(c_s.real), "superoperator"
        nu = lam = None
    else:
        failing = [k for k in ("i", "ii", "iii", "iv") if res[k] > tol]
        names = ", ".join(f"({k}) residual {res[k]:.3e}" for k in failing)
        reason = (
            f"commutation relation [H,L] = alpha L + c fails (relative residual "
            f"{res['superoperator']:.3e}); failing conditions: {names}"
        )
        return CaseClassification("Unsupported", residuals=res, method="none", reason=reason, nu=nu, lam=lam)

    if abs(alpha) <= tol * max(1.0, max(red.gammas)):
        alpha = 0.0
    if abs(c) <= tol * max(1.0, cnorm):
        c = 0.0
    if alpha < 0 or c < 0:
        reason = f"fitted alpha={alpha:.6g}, c={c:.6g} must both be non-negative"
        return CaseClassification("Unsupported", alpha, c, nu, lam, res, method, reason)
    label = "CaseII" if alpha > 0 else "CaseI"
    return CaseClassification(label, alpha, c, nu, lam, res, method)


def exact_propagator(sys, t):
    """``expm(t (H + L))`` acting on row-stacked density matrices."""
    if t < 0:
        raise ValueError("t must be non-negative")
    pair = build_superoperators(sys)
    return linalg.expm(t * pair.total)


def exact_evolve(sys, rho0, t):
    rho0 = linalg.as_matrix(rho0, "rho0")
    return linalg.devectorize(exact_propagator(sys, t) @ linalg.vectorize(rho0))


def rk4_evolve(sys, rho0, t, steps):
    """Fixed-step classical RK4 integration of the master equation."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rho = linalg.validate_density_matrix(rho0).copy()
    if t == 0:
        return rho
    dt = t / steps
    f = lambda r: lindblad_rhs(sys, r)  # noqa: E731
    for _ in range(steps):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho
