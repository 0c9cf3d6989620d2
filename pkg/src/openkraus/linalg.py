"""Dense complex linear algebra helpers.

Vectorization is row-stacking: ``vec(rho)[i*d + j] == rho[i, j]``.  With
that convention ``vec(A @ rho @ B^dagger) == kron(A, conj(B)) @ vec(rho)``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

ATOL = 1e-10


def as_matrix(a, name="matrix"):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {m.shape}")
    return m


def _require_square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def _scale(*ops):
    return max([1.0] + [float(np.max(np.abs(o))) for o in ops if np.size(o)])


def dagger(a):
    return np.conj(np.transpose(a))


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def conj_kron(a, mode="product"):
    """Conjugated Kronecker product ``A (x) conj(A)`` or sum ``A (x) I + I (x) conj(A)``."""
    a = _require_square(a)
    if mode == "product":
        return np.kron(a, a.conj())
    if mode == "sum":
        eye = np.eye(a.shape[0])
        return np.kron(a, eye) + np.kron(eye, a.conj())
    raise ValueError(f"mode must be 'product' or 'sum', not {mode!r}")


def vectorize(rho):
    rho = _require_square(rho, "rho")
    return rho.reshape(-1).copy()


def devectorize(vec):
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(vec.size)))
    if d * d != vec.size:
        raise ValueError(f"length {vec.size} is not a perfect square")
    return vec.reshape(d, d).copy()


def commutator(a, b):
    return a @ b - b @ a


def is_hermitian(a, tol=ATOL):
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - dagger(a)), initial=0.0) <= tol * _scale(a)


def is_unitary(a, tol=ATOL):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return np.max(np.abs(dagger(a) @ a - np.eye(a.shape[0])), initial=0.0) <= tol


def is_normal(a, tol=ATOL):
    a = _require_square(a)
    scale = float(np.linalg.norm(a, 2)) ** 2
    return np.max(np.abs(commutator(a, dagger(a))), initial=0.0) <= tol * max(scale, 1e-300)


def is_psd(a, tol=ATOL):
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        return False
    return np.linalg.eigvalsh((a + dagger(a)) / 2).min() >= -tol * _scale(a)


def sorted_eig_normal(a):
    """Unitary eigendecomposition ``a = U diag(w) U^dagger`` of a normal matrix.

    The complex Schur form of a normal matrix is diagonal, which gives an
    orthonormal eigenbasis even for degenerate spectra.  Eigenvalues are sorted
    by real part, then imaginary part; ties keep their Schur order.
    """
    a = _require_square(a)
    t, z = scipy.linalg.schur(a, output="complex")
    w = np.diag(t).copy()
    order = sorted(range(len(w)), key=lambda i: (round(w[i].real, 12), round(w[i].imag, 12), i))
    return w[order], z[:, order]


def expm(a):
    """Matrix exponential.

    Normal inputs go through the unitary eigendecomposition (exact up to
    roundoff); everything else uses Pade scaling-and-squaring.
    """
    a = _require_square(a)
    if a.size == 0:
        return a.copy()
    if not np.any(a):
        return np.eye(a.shape[0], dtype=complex)
    if is_normal(a):
        w, u = sorted_eig_normal(a)
        return (u * np.exp(w)) @ dagger(u)
    return scipy.linalg.expm(a)


def sqrtm_psd(a, clamp=1e-10):
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-clamp, 0)`` are treated as roundoff and set to zero.
    """
    a = _require_square(a)
    if not is_hermitian(a):
        raise ValueError("sqrtm_psd requires a Hermitian matrix")
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    if w.size and w.min() < -clamp:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    r = (v * np.sqrt(w)) @ dagger(v)
    return (r + dagger(r)) / 2


def hs_norm(a):
    return float(np.linalg.norm(np.asarray(a), "fro"))


def op_norm(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def matrix_norms(a):
    a = as_matrix(a)
    return {"hs": hs_norm(a), "op": op_norm(a)}


def trace_distance(a, b):
    """Half the trace norm of ``a - b``."""
    diff = as_matrix(a) - as_matrix(b)
    return 0.5 * float(np.sum(np.linalg.svd(diff, compute_uv=False)))


def choi_matrix(propagator):
    """Choi matrix of a row-stacked superoperator.

    With ``P[(i*d+j), (k*d+l)]`` mapping ``rho[k,l]`` into ``out[i,j]``, the
    Choi matrix ``sum_kl |k><l| (x) E(|k><l|)`` has entry
    ``C[(k*d+i), (l*d+j)] = P[(i*d+j), (k*d+l)]``.
    """
    p = _require_square(propagator, "propagator")
    d = int(round(np.sqrt(p.shape[0])))
    return p.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def channel_superoperator(kraus_ops):
    """``sum_i K_i (x) conj(K_i)`` for a list of Kraus operators."""
    kraus_ops = [as_matrix(k) for k in kraus_ops]
    d = kraus_ops[0].shape[0]
    out = np.zeros((d * d, d * d), dtype=complex)
    for k in kraus_ops:
        out += np.kron(k, k.conj())
    return out


def validate_density_matrix(rho, tol=1e-9):
    rho = _require_square(rho, "rho")
    if np.max(np.abs(rho - dagger(rho))) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh((rho + dagger(rho)) / 2).min() < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def next_pow2_qubits(d):
    n = 0
    while (1 << n) < d:
        n += 1
    return n


def pad_to_qubits(a, n_qubits):
    """Zero-pad a square matrix to ``2**n_qubits`` dimensions."""
    a = _require_square(a)
    size = 1 << n_qubits
    if a.shape[0] > size:
        raise ValueError("matrix larger than register")
    out = np.zeros((size, size), dtype=complex)
    out[: a.shape[0], : a.shape[0]] = a
    return out
