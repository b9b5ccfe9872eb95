import numpy as np
import pytest

from polartomo.qmath import random_unitary

SY = np.array([[0, -1j], [1j, 0]])


def concurrence_oracle(rho):
    """Wootters formula from the eigenvalues of rho (Y x Y) rho* (Y x Y)."""
    yy = np.kron(SY, SY)
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sort(np.abs(np.linalg.eigvals(r)))[::-1]
    s = np.sqrt(lam)
    return max(0.0, s[0] - s[1] - s[2] - s[3])


def random_kraus(rng, n_ops=None):
    """Kraus set of a random CPTP qubit map from a Stinespring isometry."""
    n_ops = n_ops or int(rng.integers(1, 5))
    u = random_unitary(2 * n_ops, rng)
    iso = u[:, :2]
    return [iso[2 * k:2 * k + 2, :] for k in range(n_ops)]


def chi_brute(kraus):
    """chi_ij = sum_k a_i a_j^* with a_i = tr(sigma_i A)/2, written out by hand."""
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), SY, np.diag([1, -1])]
    chi = np.zeros((4, 4), dtype=complex)
    for a in kraus:
        coeff = np.array([np.trace(p @ a) / 2 for p in paulis])
        chi += np.outer(coeff, coeff.conj())
    return chi


@pytest.fixture
def rng():
    return np.random.default_rng(20020315)
