"""Polarization-qubit states and their figures of merit.

Two-photon states use the ordering (HH, HV, VH, VV); the first letter is the
signal photon, the second the idler.

Stokes parameters follow the optics convention built from the measured
projectors rather than from Pauli indices:

    s1 = <|H><H| - |V><V|>,  s2 = <|D><D| - |A><A|>,  s3 = <|L><L| - |R><R|>

In the computational basis these are <Z>, <X> and <Y> respectively.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidState, OutOfRange, UnknownLabel, WrongDimension
from .qmath import SIGMA_X, SIGMA_Y, SIGMA_Z, as_matrix, eig_hermitian, hermiticity_error, uhlmann_fidelity

_S = 1 / np.sqrt(2)

_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "L": np.array([_S, 1j * _S], dtype=complex),
    "R": np.array([_S, -1j * _S], dtype=complex),
}

TWO_QUBIT_ORDER = ("HH", "HV", "VH", "VV")


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s0, self.s1, self.s2, self.s3)


def standard_ket(label: str) -> np.ndarray:
    """Single-photon ket for one of H, V, D, A, L, R."""
    try:
        return _KETS[label].copy()
    except (KeyError, TypeError):
        raise UnknownLabel(f"unknown polarization label {label!r}; expected one of {sorted(_KETS)}") from None


def product_ket(labels) -> np.ndarray:
    """Tensor-product ket for a label string or sequence such as ``"HV"``."""
    ket = np.ones(1, dtype=complex)
    for label in labels:
        ket = np.kron(ket, standard_ket(label))
    return ket


def ket_to_dm(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).ravel()
    return np.outer(ket, ket.conj())


def bell_phi_plus() -> np.ndarray:
    return (product_ket("HH") + product_ket("VV")) / np.sqrt(2)


def rho_nu(nu: float) -> np.ndarray:
    """Partially dephased Bell state nu|Phi+><Phi+| + (1-nu)/2 (|HH><HH| + |VV><VV|)."""
    if not 0.0 <= nu <= 1.0:
        raise OutOfRange(f"nu must lie in [0, 1], got {nu}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = rho[3, 0] = nu / 2
    return rho


def validate_density(rho, tol: float = 1e-10, eig_tol: float = 1e-9) -> np.ndarray:
    """Return ``rho`` as an array after checking Hermiticity, unit trace and positivity."""
    rho = as_matrix(rho)
    if rho.shape[0] not in (2, 4):
        raise WrongDimension(f"density matrices must be 2x2 or 4x4, got {rho.shape}")
    if hermiticity_error(rho) > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidState(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    if eig_hermitian(rho)[0][-1] < -eig_tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state.

    The square roots of the eigenvalues of rho (Y x Y) rho* (Y x Y) are taken
    as the singular values of W^T (Y x Y) W with rho = W W^dagger, which avoids
    the loss of precision of square-rooting near-zero eigenvalues.
    Complex conjugation is in the fixed (HH, HV, VH, VV) basis.
    """
    rho = as_matrix(rho)
    if rho.shape != (4, 4):
        raise WrongDimension(f"concurrence needs a 4x4 density matrix, got {rho.shape}")
    vals, vecs = eig_hermitian(rho)
    w = vecs * np.sqrt(np.clip(vals, 0.0, None))
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    sv = np.linalg.svd(w.T @ yy @ w, compute_uv=False)
    c = sv[0] - sv[1] - sv[2] - sv[3]
    return float(min(max(c, 0.0), 1.0))


def fidelity(rho, target) -> float:
    """Overlap <target|rho|target> with a pure target ket."""
    rho = as_matrix(rho)
    target = np.asarray(target, dtype=complex).ravel()
    if target.shape[0] != rho.shape[0]:
        raise DimensionMismatch(f"ket of length {target.shape[0]} vs {rho.shape[0]}x{rho.shape[0]} state")
    return float(np.real(target.conj() @ rho @ target))


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between two mixed states."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shapes differ: {rho.shape} vs {sigma.shape}")
    return min(uhlmann_fidelity(rho, sigma), 1.0)


def purity(rho) -> float:
    rho = as_matrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def stokes_and_dop(rho) -> tuple[StokesVector, float]:
    """Stokes vector and degree of polarization of a single-photon state."""
    rho = as_matrix(rho)
    if rho.shape != (2, 2):
        raise WrongDimension(f"Stokes parameters need a 2x2 density matrix, got {rho.shape}")
    s0 = float(np.real(np.trace(rho)))
    s1 = float(np.real(np.trace(rho @ SIGMA_Z)))
    s2 = float(np.real(np.trace(rho @ SIGMA_X)))
    s3 = float(np.real(np.trace(rho @ SIGMA_Y)))
    return StokesVector(s0, s1, s2, s3), float(np.sqrt(s1 * s1 + s2 * s2 + s3 * s3))


def bloch_vector(rho) -> np.ndarray:
    """(<X>, <Y>, <Z>) of a single-qubit state."""
    rho = as_matrix(rho)
    return np.real([np.trace(rho @ p) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduced state of photon ``keep`` (0 = signal, 1 = idler) of a two-photon state."""
    r = as_matrix(rho).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("jijk->ik", r)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim

