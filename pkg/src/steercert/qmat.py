"""Small dense complex linear algebra used throughout the package.

Everything here works on plain ``numpy`` arrays. Matrices are at most 28x28,
so there is no attempt at sparse storage or clever caching.
"""

from typing import Tuple

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9
TRACE_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)


class NotHermitianError(ValueError):
    """Raised when a matrix fails the Hermiticity check."""


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf entries")


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def hermitian_part(h: np.ndarray) -> np.ndarray:
    """Return (h + h^dagger)/2."""
    h = np.asarray(h, dtype=complex)
    return 0.5 * (h + h.conj().T)


def kron(*factors: np.ndarray) -> np.ndarray:
    """Tensor product of any number of matrices or vectors (left to right)."""
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def eig_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with eigenvalues descending.

    Args:
        h: Square Hermitian matrix.
        tol: Largest tolerated entrywise deviation from Hermiticity.

    Returns:
        ``(w, v)`` where ``w`` is sorted in descending order and column
        ``v[:, k]`` is the unit eigenvector for ``w[k]``.

    Raises:
        NotHermitianError: if ``h`` is not Hermitian within ``tol``.
    """
    h = np.asarray(h, dtype=complex)
    _check_finite(h)
    if not is_hermitian(h, tol):
        raise NotHermitianError("eig_hermitian needs a Hermitian matrix")
    w, v = np.linalg.eigh(hermitian_part(h))
    return w[::-1].copy(), v[:, ::-1].copy()


def min_eigenvalue(h: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(h))[0])


def is_psd(h: np.ndarray, tol: float = PSD_TOL) -> Tuple[bool, float]:
    """Check positive semidefiniteness.

    Returns:
        ``(ok, margin)`` where ``margin`` is the smallest eigenvalue and
        ``ok`` is ``margin >= -tol``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    margin = min_eigenvalue(h)
    return margin >= -tol, margin


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """Overlap <psi|rho|psi> of a density matrix with a pure state.

    Raises:
        ValueError: if ``rho`` does not have unit trace within 1e-9.
    """
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    _check_finite(rho)
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.3g}, expected 1")
    return float(np.real(psi.conj() @ rho @ psi))


def partial_trace(rho: np.ndarray, keep: str = "A", dims: Tuple[int, int] = (2, 2)) -> np.ndarray:
    """Partial trace of a bipartite operator.

    Args:
        rho: Operator on a space of dimension ``dims[0] * dims[1]``.
        keep: ``"A"`` keeps the first factor, ``"B"`` the second.
        dims: Local dimensions.
    """
    da, db = dims
    r = np.asarray(rho, dtype=complex).reshape(da, db, da, db)
    if keep.upper() == "A":
        return np.einsum("ijkj->ik", r)
    if keep.upper() == "B":
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 'A' or 'B'")


def bloch_observable(n) -> np.ndarray:
    """Return n . sigma for a 3-vector n = (nx, ny, nz)."""
    nx, ny, nz = n
    return nx * X + ny * Y + nz * Z


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitian_part(a)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_density(dim: int, rng: np.random.Generator, rank: int = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_dichotomic(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian involution (eigenvalues +-1) of the given dimension."""
    u = random_unitary(dim, rng)
    signs = np.array([1.0] * ((dim + 1) // 2) + [-1.0] * (dim // 2))
    rng.shuffle(signs)
    return hermitian_part(u @ np.diag(signs) @ u.conj().T)
