"""Damped harmonic oscillator on an ``N``-qubit truncated Fock space."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, diagonal_contraction_gates, diagonal_contraction_params, permutation, phase
from .lindblad import LindbladSystem


@dataclass(frozen=True)
class QHOConfig:
    n_qubits: int
    omega: float
    gamma: float
    hbar: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    @property
    def dim(self):
        return 1 << self.n_qubits

    @property
    def m_max(self):
        return self.dim - 1


def truncated_lowering(m_max):
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    return np.diag(np.sqrt(np.arange(1, m_max + 1, dtype=float)), 1).astype(complex)


def number_operator(dim):
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def qho_system(cfg):
    a = truncated_lowering(cfg.m_max)
    H = cfg.hbar * cfg.omega * (number_operator(cfg.dim) + 0.5 * np.eye(cfg.dim))
    return LindbladSystem(H, (a,), (cfg.gamma,), cfg.hbar)


def _check(cfg, m, t):
    if not 0 <= m <= cfg.m_max:
        raise ValueError(f"order m={m} outside [0, {cfg.m_max}]")
    if t < 0:
        raise ValueError("t must be non-negative")


def _log_decay(cfg, t):
    """``log(1 - exp(-gamma t))``, or ``-inf`` at ``gamma t = 0``."""
    x = cfg.gamma * t
    return -math.inf if x == 0 else math.log(-math.expm1(-x))


def qho_kraus_matrix(cfg, m, t):
    """``exp(-t[gamma N/2 + i omega (1/2 + N)]) sqrt((1 - e^{-gamma t})^m / m!) a^m``."""
    _check(cfg, m, t)
    n = np.arange(cfg.dim)
    left = np.exp(-t * (0.5 * cfg.gamma * n + 1j * cfg.omega * (0.5 + n)))
    if m == 0:
        coeff = 1.0
    else:
        ld = _log_decay(cfg, t)
        coeff = 0.0 if ld == -math.inf else math.exp(0.5 * (m * ld - math.lgamma(m + 1)))
    am = np.linalg.matrix_power(truncated_lowering(cfg.m_max), m)
    return coeff * (left[:, None] * am)


def qho_diagonal_Dm(cfg, m, t):
    """Normalized diagonal ``Lambda_m = D_m / a_m`` and ``a_m = max D_m``.

    ``D_m[n] = exp(-n gamma t/2) sqrt((1-e^{-gamma t})^m (n+m)! / (n! m!))`` for
    ``n <= 2^N - 1 - m`` and zero above, evaluated in log space.
    """
    _check(cfg, m, t)
    n = np.arange(cfg.dim - m)
    ld = 0.0 if m == 0 else _log_decay(cfg, t)
    D = np.zeros(cfg.dim)
    if ld != -math.inf:
        lg = np.array([math.lgamma(k + m + 1) - math.lgamma(k + 1) for k in n]) - math.lgamma(m + 1)
        D[: n.size] = np.exp(-0.5 * cfg.gamma * t * n + 0.5 * (m * ld + lg))
    a = float(D.max())
    lam = D / a if a > 0 else np.zeros_like(D)
    return np.clip(lam, 0.0, 1.0), a


def sub_mapping(dim, m):
    """Basis map ``n -> n - m mod dim``."""
    return [(j - m) % dim for j in range(dim)]


def sub_matrix(dim, m):
    p = np.zeros((dim, dim), dtype=complex)
    p[sub_mapping(dim, m), np.arange(dim)] = 1
    return p


def phase_diagonal(cfg, t):
    n = np.arange(cfg.dim)
    return np.exp(-1j * cfg.omega * t * (0.5 + n))


def build_qho_circuit(cfg, m, t):
    """``SUB_m``, then the ``Lambda_m`` ladder on one ancilla, then ``N`` phase gates."""
    _check(cfg, m, t)
    nq = cfg.n_qubits
    sysq = list(range(nq))
    anc = nq
    lam, a = qho_diagonal_Dm(cfg, m, t)
    gates = [permutation(sub_mapping(cfg.dim, m), sysq)]
    gates += diagonal_contraction_gates(diagonal_contraction_params(lam, t), sysq, anc)
    gates += [phase((1 << q) * cfg.omega * t, q) for q in sysq]
    return Circuit(nq, (("sznagy", anc),), tuple(gates), a, -0.5 * cfg.omega * t, f"QHO[m={m}]", cfg.dim)


def qho_circuits(cfg, t):
    return [build_qho_circuit(cfg, m, t) for m in range(cfg.m_max + 1)]


def qho_kraus_operators(cfg, t):
    return [qho_kraus_matrix(cfg, m, t) for m in range(cfg.m_max + 1)]


def amplitude_damping_kraus(gamma, t):
    """Textbook amplitude-damping pair with decay probability ``1 - exp(-gamma t)``."""
    p = -math.expm1(-gamma * t)
    k0 = np.diag([1.0, math.sqrt(1 - p)]).astype(complex)
    k1 = np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex)
    return k0, k1


def check_support(cfg, rho):
    """Initial states must live on the ``2^N`` levels the truncated ladder holds."""
    rho = np.asarray(rho)
    if rho.shape != (cfg.dim, cfg.dim):
        raise ValueError(f"initial state must be {cfg.dim}x{cfg.dim}; higher levels are not represented")
    return rho
