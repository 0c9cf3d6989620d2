import numpy as np
import pytest
import scipy.linalg

from openkraus import LindbladSystem
from openkraus.pauli import PauliString, pauli_system
from openkraus.qho import QHOConfig, qho_system

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_hermitian(rng, d):
    a = random_matrix(rng, d)
    return (a + a.conj().T) / 2


def random_density(rng, d, rank=None):
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_system(rng, d, n_ops=2):
    return LindbladSystem(
        random_hermitian(rng, d),
        tuple(random_matrix(rng, d) for _ in range(n_ops)),
        tuple(rng.uniform(0.1, 1.0, n_ops)),
    )


def dense_propagator(sys, t):
    """Oracle: Liouvillian assembled column by column from the master equation."""
    d = sys.dim
    cols = []
    for j in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[j] = 1
        rho = e.reshape(d, d)
        out = -1j / sys.hbar * (sys.H @ rho - rho @ sys.H)
        for L, g in zip(sys.lindblads, sys.gammas):
            Ld = L.conj().T
            out = out + g * (L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L))
        cols.append(out.reshape(-1))
    return scipy.linalg.expm(t * np.array(cols).T)


def apply_superop(P, rho):
    d = rho.shape[0]
    return (P @ rho.reshape(-1)).reshape(d, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dephasing():
    return LindbladSystem(np.zeros((2, 2)), (Z,), (1.0,))


@pytest.fixture
def qho_cfg():
    return QHOConfig(2, 1.3, 0.7)


@pytest.fixture
def qho(qho_cfg):
    return qho_system(qho_cfg)


@pytest.fixture
def pauli_preset():
    strings = [PauliString.from_label(s) for s in ("XI", "IZ", "YY")]
    gammas = [0.31, 0.74, 0.18]
    return strings, gammas, pauli_system(strings, gammas)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
