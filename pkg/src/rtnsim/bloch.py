"""Generalized Bloch vectors of two-qubit states.

The basis is ``mu_i = sigma_a (x) sigma_b`` with ``i = 4a + b`` (qubit A is the
left factor), so ``mu_0 = I_4``, ``mu_1 = sigma_0 (x) sigma_1`` and so on.
A state is ``rho = (I_4 + sum_i n_i mu_i) / 4`` with ``n_i = Tr[rho mu_i]``.
Vectors here are *extended*: 16 entries with ``n[0] = 1``.
"""
import numpy as np

__all__ = [
    "PAULI",
    "MU",
    "to_bloch",
    "from_bloch",
    "purity_norm",
    "is_physical",
    "check_density_matrix",
]

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

MU = np.array([np.kron(PAULI[a], PAULI[b]) for a in range(4) for b in range(4)])

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12


def check_density_matrix(rho, tol=HERMITIAN_TOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (4, 4):
        raise ValueError(f"expected 4x4 density matrices, got shape {rho.shape}")
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
    if herm > tol:
        raise ValueError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1).max()
    if tr > TRACE_TOL:
        raise ValueError(f"density matrix trace differs from 1 by {tr:.3g}")
    return rho


def to_bloch(rho) -> np.ndarray:
    """Extended Bloch vector(s) of ``rho``; works on stacks ``(..., 4, 4)``."""
    rho = check_density_matrix(rho)
    n = np.einsum("...ij,kji->...k", rho, MU)
    if np.abs(n.imag).max() > 1e-12:
        raise ValueError("non-real Bloch components")
    return n.real


def from_bloch(n) -> np.ndarray:
    """Density matrix ``(I + sum n_i mu_i) / 4``. Positivity is not checked."""
    n = np.asarray(n, dtype=float)
    if n.shape[-1] == 15:
        n = np.concatenate([np.ones(n.shape[:-1] + (1,)), n], axis=-1)
    if n.shape[-1] != 16:
        raise ValueError("Bloch vectors have 15 or 16 (extended) components")
    if np.abs(n[..., 0] - 1).max() > 1e-12:
        raise ValueError("extended Bloch vector must have n0 = 1")
    return np.einsum("...k,kij->...ij", n, MU) / 4


def purity_norm(n) -> np.ndarray:
    """``|n|`` over components 1..15; ``sqrt(3)`` for pure, 0 for ``I/4``."""
    n = np.asarray(n, dtype=float)
    if n.shape[-1] == 16:
        n = n[..., 1:]
    return np.linalg.norm(n, axis=-1)


def is_physical(n, tol: float = 1e-10) -> bool:
    """True iff ``from_bloch(n)`` has no eigenvalue below ``-tol``."""
    w = np.linalg.eigvalsh(from_bloch(n))
    return bool(np.all(w >= -tol))
