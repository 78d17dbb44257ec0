"""Operators on the truncated oscillator (x) ancilla space and Liouvillian assembly.

Conventions used throughout the package:

* Joint basis ordering is oscillator (x) ancilla with the ancilla index
  fastest, so ``|n, s>`` sits at index ``n * n_anc + s`` (``g = 0``, ``e = 1``).
* Vectorization is row-major: ``|i><j| -> |i> (x) |j>`` at index ``i * dim + j``.
  Under this convention ``vec(A rho B) = (A (x) B^T) vec(rho)``.
* Rates and Hamiltonian coefficients are angular frequencies in rad/us.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

TWO_PI = 2.0 * np.pi
G, E = 0, 1


def mhz(f):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def fock_annihilation(cutoff: int) -> np.ndarray:
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


def number_operator(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff + 1, dtype=float)).astype(complex)


def qubit_lowering() -> np.ndarray:
    """``b = |g><e|`` on a two-level ancilla."""
    b = np.zeros((2, 2), dtype=complex)
    b[G, E] = 1.0
    return b


def tensor(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("tensor operands must be square matrices")
    return np.kron(A, B)


def joint_operators(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(a, b)`` acting on the oscillator (x) qubit space."""
    a = fock_annihilation(cutoff)
    return tensor(a, np.eye(2)), tensor(np.eye(cutoff + 1), qubit_lowering())


def basis_index(n: int, s: int = G, n_anc: int = 2) -> int:
    return n * n_anc + s


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def embed_mode_state(psi: np.ndarray, s: int = G, n_anc: int = 2) -> np.ndarray:
    """Lift a single-mode state to ``psi (x) |s>``."""
    return np.kron(np.asarray(psi, dtype=complex), ket(n_anc, s))


def dag(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def is_hermitian(A: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(A - dag(A)), initial=0.0) < tol)


def vectorize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1).copy()


def unvectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(dim, dim).copy()


def liouvillian_from_parts(H: np.ndarray, dissipators=()) -> np.ndarray:
    """Dense superoperator ``M`` with ``d vec(rho)/dt = M vec(rho)``."""
    H = np.asarray(H, dtype=complex)
    dim = H.shape[0]
    eye = np.eye(dim)
    M = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for rate, A in dissipators:
        if rate < 0:
            raise ValueError(f"dissipator rate must be non-negative, got {rate}")
        A = np.asarray(A, dtype=complex)
        AdA = dag(A) @ A
        M += rate * (np.kron(A, A.conj()) - 0.5 * np.kron(AdA, eye) - 0.5 * np.kron(eye, AdA.T))
    return M


def liouvillian(model) -> np.ndarray:
    """Superoperator of a :class:`aqec.lindblad.LindbladModel`."""
    return liouvillian_from_parts(model.hamiltonian(), model.dissipators)


def matexp_propagate(M: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    """Dense-exponential reference propagator; meant for small test systems."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v = vectorize(rho0)
    if M.shape != (v.size, v.size):
        raise ValueError(f"superoperator shape {M.shape} does not match state of dim {rho0.shape[0]}")
    if t == 0:
        return np.array(rho0, dtype=complex, copy=True)
    return unvectorize(expm(M * t) @ v)
