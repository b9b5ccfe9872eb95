"""Single-qubit channels as process (chi) matrices and Kraus sets.

A channel acts as

    E(rho) = sum_ij chi[i, j] sigma_i rho sigma_j

over the Pauli basis in the fixed order (I, X, Y, Z). The operator-sum form is
E(rho) = sum_k A_k rho A_k^dagger. Trace preservation corresponds to
sum_mn chi[m, n] sigma_n sigma_m = I, so tr(chi) = 1 for every trace-preserving
channel.

Rotations are U_k(theta) = cos(theta/2) I + i sin(theta/2) sigma_k. With this
sign, the imperfect Hadamard channel has chi[0, 1] = -i|s|/2; the opposite sign
flips the off-diagonal block.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, InvalidSpec, InvalidState, NotCP, NotTracePreserving, WrongDimension
from .qmath import I2, PAULIS, as_matrix, dag, eig_hermitian, hermiticity_error

TP_TOL = 1e-6
CP_TOL = 1e-6
HERM_TOL = 1e-8
KRAUS_DROP = 1e-10

_AXES = {"x": 1, "y": 2, "z": 3}
CHANNEL_KINDS = ("null", "bitflip", "pauli", "hadamard_imperfect", "custom_kraus", "custom_chi")

# products sigma_a sigma_b = sum_c _PAULI_PRODUCT[a, b, c] sigma_c
_PAULI_PRODUCT = np.array(
    [[[np.trace(PAULIS[c] @ PAULIS[a] @ PAULIS[b]) / 2 for c in range(4)] for b in range(4)] for a in range(4)]
)


@dataclass(frozen=True)
class ChannelSpec:
    """Parametrized channel description.

    ``bitflip`` randomizes around ``axis`` (``"x"`` by default, the
    45-degree depolarizer); ``axis="z"`` gives the phase-flip produced by an
    H/V-oriented depolarizer. ``s`` is the coherence parameter; ``p, q, r`` are
    the X, Y, Z flip probabilities of a Pauli channel.
    """

    kind: str
    s: float = 1.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    axis: str = "x"
    kraus: tuple = field(default=(), compare=False)
    chi: np.ndarray | None = field(default=None, compare=False)

    def validate(self) -> None:
        if self.kind not in CHANNEL_KINDS:
            raise InvalidSpec(f"unknown channel kind {self.kind!r}")
        if self.kind in ("bitflip", "hadamard_imperfect") and not -1.0 <= self.s <= 1.0:
            raise InvalidSpec(f"s must lie in [-1, 1], got {self.s}")
        if self.kind == "bitflip" and self.axis not in _AXES:
            raise InvalidSpec(f"axis must be x, y or z, got {self.axis!r}")
        if self.kind == "pauli":
            if min(self.p, self.q, self.r) < 0 or self.p + self.q + self.r > 1 + 1e-12:
                raise InvalidSpec(f"need p, q, r >= 0 and p + q + r <= 1, got {(self.p, self.q, self.r)}")
        if self.kind == "custom_kraus" and not self.kraus:
            raise InvalidSpec("custom_kraus needs at least one operator")
        if self.kind == "custom_chi" and self.chi is None:
            raise InvalidSpec("custom_chi needs a chi matrix")


@dataclass(frozen=True)
class ChannelValidation:
    tp_error: float
    min_eig: float
    hermiticity_error: float

    @property
    def valid(self) -> bool:
        return self.tp_error <= TP_TOL and self.min_eig >= -CP_TOL and self.hermiticity_error <= HERM_TOL


def rotation_unitary(axis: str, angle: float) -> np.ndarray:
    """U_axis(angle) = cos(angle/2) I + i sin(angle/2) sigma_axis."""
    if axis not in _AXES:
        raise InvalidParams(f"axis must be x, y or z, got {axis!r}")
    if not np.isfinite(angle):
        raise InvalidParams("rotation angle must be finite")
    return np.cos(angle / 2) * I2 + 1j * np.sin(angle / 2) * PAULIS[_AXES[axis]]


def pauli_coefficients(op) -> np.ndarray:
    """Coefficients a_i with op = sum_i a_i sigma_i."""
    op = as_matrix(op)
    return np.array([np.trace(p @ op) / 2 for p in PAULIS])


def chi_from_kraus(kraus) -> np.ndarray:
    ops = [as_matrix(k) for k in kraus]
    if any(k.shape != (2, 2) for k in ops):
        raise WrongDimension("Kraus operators must be 2x2")
    chi = np.zeros((4, 4), dtype=complex)
    for k in ops:
        a = pauli_coefficients(k)
        chi += np.outer(a, a.conj())
    return chi


def kraus_from_chi(chi, drop: float = KRAUS_DROP) -> list[np.ndarray]:
    """Minimal Kraus set from the eigendecomposition of chi.

    A_k = sqrt(lambda_k) sum_i u_k[i] sigma_i for every eigenvalue above ``drop``,
    ordered by decreasing weight.
    """
    chi = as_matrix(chi)
    vals, vecs = eig_hermitian(chi, tol=HERM_TOL)
    if vals[-1] < -CP_TOL:
        raise NotCP(f"chi has eigenvalue {vals[-1]:.3e}")
    out = []
    for lam, u in zip(vals, vecs.T):
        if lam > drop:
            out.append(np.sqrt(lam) * np.einsum("i,ijk->jk", u, np.array(PAULIS)))
    return out


def kraus_weights(chi) -> np.ndarray:
    vals = eig_hermitian(as_matrix(chi), tol=HERM_TOL)[0]
    return vals[vals > KRAUS_DROP]


def make_channel(spec: ChannelSpec) -> np.ndarray:
    spec.validate()
    if spec.kind == "null":
        return np.diag([1, 0, 0, 0]).astype(complex)
    if spec.kind == "bitflip":
        a = abs(spec.s)
        chi = np.zeros((4, 4), dtype=complex)
        chi[0, 0] = (1 + a) / 2
        k = _AXES[spec.axis]
        chi[k, k] += (1 - a) / 2
        return chi
    if spec.kind == "pauli":
        return np.diag([1 - spec.p - spec.q - spec.r, spec.p, spec.q, spec.r]).astype(complex)
    if spec.kind == "hadamard_imperfect":
        a = abs(spec.s)
        chi = np.zeros((4, 4), dtype=complex)
        chi[0, 0] = chi[1, 1] = 0.5
        chi[0, 1] = -0.5j * a
        chi[1, 0] = 0.5j * a
        return chi
    if spec.kind == "custom_kraus":
        return chi_from_kraus(spec.kraus)
    chi = as_matrix(spec.chi)
    if chi.shape != (4, 4):
        raise InvalidSpec("custom chi must be 4x4")
    return chi.copy()


def channel_from_unitaries(weights, unitaries) -> np.ndarray:
    """chi of the random-unitary channel sum_k w_k U_k rho U_k^dagger."""
    return chi_from_kraus([np.sqrt(w) * u for w, u in zip(weights, unitaries)])


def tp_matrix(chi) -> np.ndarray:
    """sum_mn chi[m, n] sigma_n sigma_m; equals I for trace-preserving chi."""
    chi = as_matrix(chi)
    return np.einsum("mn,nab,mbc->ac", chi, np.array(PAULIS), np.array(PAULIS))


def validate_channel(chi) -> ChannelValidation:
    """Trace-preservation (spectral norm), positivity and Hermiticity diagnostics."""
    chi = as_matrix(chi)
    tp_err = float(np.linalg.norm(tp_matrix(chi) - I2, 2))
    herm = hermiticity_error(chi)
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (chi + dag(chi)))))
    return ChannelValidation(tp_error=tp_err, min_eig=min_eig, hermiticity_error=herm)


def apply_chi(chi, rho) -> np.ndarray:
    chi = as_matrix(chi)
    rho = as_matrix(rho)
    if chi.shape != (4, 4):
        raise WrongDimension(f"chi must be 4x4, got {chi.shape}")
    if rho.shape != (2, 2):
        raise InvalidState(f"input state must be 2x2, got {rho.shape}")
    if hermiticity_error(rho) > 1e-10 or abs(np.trace(rho) - 1) > 1e-10:
        raise InvalidState("input is not a normalized Hermitian state")
    if eig_hermitian(rho)[0][-1] < -1e-9:
        raise InvalidState("input state has a negative eigenvalue")
    v = validate_channel(chi)
    if v.tp_error > TP_TOL:
        warnings.warn(f"chi is not trace preserving (error {v.tp_error:.3e})", NotTracePreserving, stacklevel=2)
    p = np.array(PAULIS)
    return np.einsum("ij,iab,bc,jcd->ad", chi, p, rho, p)


def apply_kraus(kraus, rho) -> np.ndarray:
    rho = as_matrix(rho)
    return sum(k @ rho @ dag(k) for k in kraus)


def compose(second, first) -> np.ndarray:
    """chi of rho -> second(first(rho)).

    Contracts the process matrices through the Pauli product table
    sigma_j sigma_i = sum_k f[j, i, k] sigma_k.
    """
    second = as_matrix(second)
    first = as_matrix(first)
    for name, chi in (("second", second), ("first", first)):
        if validate_channel(chi).min_eig < -CP_TOL:
            raise NotCP(f"{name} channel is not completely positive")
    f = _PAULI_PRODUCT
    return np.einsum("jJ,iI,jik,JIl->kl", second, first, f, f.conj())


def depolarizer_s_from_z(z: float, s_max: float = 1.0, z0: float = 0.0, w_scale: float = 4.0) -> float:
    """Coherence parameter of a wedge depolarizer vs. lens position z (mm).

    Gaussian falloff s_max * exp(-((z - z0) / w_scale)^2): the photon field is
    smallest on the plate at z0, and a wider beam samples more of the wedge.
    """
    if w_scale <= 0 or not 0 <= s_max <= 1:
        raise InvalidParams(f"need w_scale > 0 and 0 <= s_max <= 1, got {w_scale}, {s_max}")
    if np.isinf(z):
        return 0.0
    return float(s_max * np.exp(-(((z - z0) / w_scale) ** 2)))


def pauli_from_depolarizers(s_x: float, s_z: float) -> tuple[float, float, float]:
    """(p, q, r) of an x-axis depolarizer followed by an independent z-axis depolarizer."""
    a = (1 - abs(s_x)) / 2
    b = (1 - abs(s_z)) / 2
    return a * (1 - b), a * b, (1 - a) * b
