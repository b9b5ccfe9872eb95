"""Small dense complex linear algebra for 2x2 and 4x4 operators.

Matrices are plain ``numpy`` complex arrays. Everything here is a pure function.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotHermitian

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

#: Pauli basis in the fixed process-matrix order (I, X, Y, Z).
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(a))


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry ``[i*db + k, j*db + l] = a[i, j] * b[k, l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def hermiticity_error(h) -> float:
    h = np.asarray(h, dtype=complex)
    return float(np.max(np.abs(h - dag(h)))) if h.size else 0.0


def _check_hermitian(h, tol: float) -> np.ndarray:
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > tol:
        raise NotHermitian(f"max |h - h^dagger| = {err:.3e} exceeds {tol:.1e}")
    return h


def eig_hermitian(h, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, vectors)`` with eigenvalues real and sorted in
    descending order; ``vectors[:, k]`` is the unit eigenvector for
    ``eigenvalues[k]``. Within degenerate subspaces the basis is arbitrary.

    Raises:
        NotHermitian: if ``max |h - h^dagger| > tol``.
    """
    h = _check_hermitian(h, tol)
    # symmetrize so that round-off in the input never leaks into the spectrum
    vals, vecs = np.linalg.eigh(0.5 * (h + dag(h)))
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def project_psd(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Clip negative eigenvalues of a Hermitian matrix to zero."""
    vals, vecs = eig_hermitian(h, tol)
    if vals[-1] >= 0:
        return as_matrix(h).copy()
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ dag(vecs)


def sqrtm_psd(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    vals, vecs = eig_hermitian(h, tol)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ dag(vecs)


def gram_factor(h, tol: float = HERMITIAN_TOL, rel_cut: float = 1e-13) -> np.ndarray:
    """W with h = W W^dagger, dropping eigenvalues below ``rel_cut`` times the largest."""
    vals, vecs = eig_hermitian(h, tol)
    keep = vals > rel_cut * max(vals[0], 0.0)
    return vecs[:, keep] * np.sqrt(vals[keep])


def uhlmann_fidelity(a, b, tol: float = HERMITIAN_TOL) -> float:
    """(tr |sqrt(a) sqrt(b)|)^2 for PSD a, b, via the nuclear norm of Wa^dagger Wb.

    Working with Gram factors avoids square roots of round-off eigenvalues,
    which would otherwise bias the result by ~1e-8 for rank-deficient inputs.
    """
    wa, wb = gram_factor(a, tol), gram_factor(b, tol)
    if wa.size == 0 or wb.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(dag(wa) @ wb, compute_uv=False)) ** 2)


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Hilbert-Schmidt when rank=dim) measure."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dag(g)
    return rho / np.trace(rho).real
