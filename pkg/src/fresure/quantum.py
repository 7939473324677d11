"""Dense linear algebra for few-qubit operators.

Matrices are plain ``numpy`` complex arrays of shape ``(2**N, 2**N)``. Qubit 1
is the most significant bit of the computational-basis index, so
``pauli_embed("z", 1, 2)`` is ``diag(1, 1, -1, -1)``.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_RTOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in PAULI.values():
    _m.flags.writeable = False

MAX_QUBITS = 4


class ValidationError(ValueError):
    """An operator violates a structural requirement (Hermiticity, trace, PSD)."""


def _check_square(a: np.ndarray, qubits: bool = True) -> int:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dim = a.shape[0]
    if qubits and dim & (dim - 1):
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    return dim


def nqubits(a: np.ndarray) -> int:
    """Number of qubits an operator acts on."""
    return _check_square(a).bit_length() - 1


def pauli_embed(axis: str, target: int, n: int) -> np.ndarray:
    """Return ``I ⊗ ... ⊗ σ_axis ⊗ ... ⊗ I`` with the Pauli on spin ``target``.

    Spins are numbered from 1; spin 1 is the leftmost tensor factor.
    """
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"number of qubits must be in 1..{MAX_QUBITS}, got {n}")
    if not 1 <= target <= n:
        raise ValueError(f"target spin {target} out of range 1..{n}")
    left = np.eye(2 ** (target - 1), dtype=complex)
    right = np.eye(2 ** (n - target), dtype=complex)
    return np.kron(np.kron(left, PAULI[axis]), right)


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    norm = np.linalg.norm(a)
    return bool(np.linalg.norm(a - a.conj().T) <= rtol * max(norm, 1.0))


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) < atol)


def hermitian_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the eigenvectors, so that
        ``a == V @ diag(w) @ V.conj().T``.

    Raises
    ------
    ValidationError
        If ``a`` is not Hermitian within ``HERMITIAN_RTOL``.
    """
    # any square size; only operators on qubits need a power-of-two dimension
    _check_square(a, qubits=False)
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a):
        raise ValidationError("matrix is not Hermitian")
    # symmetrise so LAPACK sees exactly Hermitian input
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w, v


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t H)`` through the eigenbasis of ``H``."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def evolve(rho0: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    """Unitary evolution ``U rho U†`` with ``U = exp(-i t H)``; ``H`` in rad/s."""
    rho0 = np.asarray(rho0, dtype=complex)
    if _check_square(rho0) != _check_square(h):
        raise ValueError(f"dimension mismatch: rho {rho0.shape} vs H {np.shape(h)}")
    u = propagator(h, t)
    return u @ rho0 @ u.conj().T


def expectation(rho: np.ndarray, op: np.ndarray) -> float:
    """Real expectation value ``Tr(rho O)`` of a Hermitian observable."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if _check_square(rho) != _check_square(op):
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs O {op.shape}")
    val = np.trace(rho @ op)
    if abs(val.imag) >= 1e-10:
        raise ValidationError(f"expectation has imaginary part {val.imag:.3e}; is O Hermitian?")
    return float(val.real)


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return ``rho`` unchanged."""
    _check_square(rho)
    rho = np.asarray(rho)
    if not is_hermitian(rho):
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_ATOL:
        raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -PSD_ATOL:
        raise ValidationError(f"density matrix is not positive semidefinite (min eigenvalue {lowest:.3e})")
    return rho


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def total_sz(n: int) -> np.ndarray:
    """Sum of ``σ_iz`` over all spins."""
    return sum(pauli_embed("z", i, n) for i in range(1, n + 1))
