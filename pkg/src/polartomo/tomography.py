"""State and process reconstruction from coincidence counts.

State estimation
    Linear inversion solves tr(rho Pi_k) = n_k / N for the Hermitian rho, with
    N the summed counts of the complete {H, V} product basis. Maximum
    likelihood parametrizes rho = T^dagger T / tr(T^dagger T) with T lower
    triangular and maximizes the Poisson log-likelihood sum_k [n_k ln mu_k - mu_k],
    mu_k = N_hat p_k(rho), with the overall rate N_hat profiled out in closed
    form (N_hat = sum n / sum p).

Process estimation
    The outputs for inputs H, V, D, L give the images of the operator basis
    L0 = |H><H|, L1 = |H><V|, L2 = |V><H|, L3 = |V><V|, and chi follows from the
    linear system E(L_q) = sum_mn chi[m, n] sigma_m L_q sigma_n.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channels import CP_TOL, kraus_from_chi, tp_matrix, validate_channel
from .errors import IncompletePlan, SingularSystem
from .measurement import PROCESS_INPUTS, CountRecord
from .qmath import PAULIS, as_matrix, dag, eig_hermitian, project_psd
from .states import maximally_mixed

MU_FLOOR = 1e-12
PSD_TOL = 1e-12
SEED_MIXING = 1e-3


@dataclass(frozen=True)
class MleConfig:
    max_iterations: int = 5000
    param_tolerance: float = 1e-10
    likelihood_tolerance: float = 1e-12
    debug: bool = False
    force_optimize: bool = False
    start: str = "seed"

    def __post_init__(self):
        if self.max_iterations <= 0 or self.param_tolerance <= 0 or self.likelihood_tolerance <= 0:
            raise ValueError("MleConfig fields must be positive")
        if self.start not in ("seed", "mixed"):
            raise ValueError("start must be 'seed' or 'mixed'")


@dataclass
class MleResult:
    rho: np.ndarray
    log_likelihood: float
    seed_log_likelihood: float
    iterations: int
    converged: bool
    flags: list = field(default_factory=list)
    history: list = field(default_factory=list)


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    n = {2: 1, 4: 2}[dim]
    out = []
    for idx in itertools.product(range(4), repeat=n):
        op = np.ones((1, 1), dtype=complex)
        for i in idx:
            op = np.kron(op, PAULIS[i])
        out.append(op)
    return out


def _dim(n_qubits: int) -> int:
    if n_qubits not in (1, 2):
        raise IncompletePlan(f"n_qubits must be 1 or 2, got {n_qubits}")
    return 2**n_qubits


def _kets_and_counts(counts: list[CountRecord], n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    if not counts:
        raise IncompletePlan("no count records")
    kets = []
    for rec in counts:
        if rec.setting.n_qubits != n_qubits:
            raise IncompletePlan(f"setting {rec.setting.label} does not act on {n_qubits} qubit(s)")
        kets.append(rec.setting.ket())
    n = np.array([float(rec.count) for rec in counts])
    if np.any(n < 0):
        raise IncompletePlan("negative counts")
    return np.array(kets), n


def basis_normalization(counts: list[CountRecord], n_qubits: int, pairs_per_setting: float | None = None) -> float:
    """Total count over the complete {H, V} product basis.

    Falls back to ``pairs_per_setting`` when that basis is not fully measured.
    """
    wanted = set(itertools.product("HV", repeat=n_qubits))
    found = {}
    for rec in counts:
        lab = tuple(rec.setting.label)
        if lab in wanted:
            found[lab] = float(rec.count)
    if len(found) == len(wanted):
        return sum(found.values())
    if pairs_per_setting is not None:
        return float(pairs_per_setting)
    raise IncompletePlan("plan lacks the complete H/V basis and no pairs_per_setting was given")


def _design_matrix(kets: np.ndarray, dim: int) -> np.ndarray:
    basis = _hermitian_basis(dim)
    # tr(rho Pi_k) with rho = sum_a r_a B_a / dim
    return np.array([[np.real(k.conj() @ b @ k) / dim for b in basis] for k in kets])


def linear_inversion_state(counts: list[CountRecord], n_qubits: int, pairs_per_setting: float | None = None) -> np.ndarray:
    """Hermitian, trace-one (possibly indefinite) least-squares estimate."""
    dim = _dim(n_qubits)
    kets, n = _kets_and_counts(counts, n_qubits)
    norm = basis_normalization(counts, n_qubits, pairs_per_setting)
    if norm <= 0:
        raise SingularSystem("normalization count is zero")
    a = _design_matrix(kets, dim)
    if np.linalg.matrix_rank(a, tol=1e-10) < dim * dim:
        raise IncompletePlan("measurement settings are not informationally complete")
    r, *_ = np.linalg.lstsq(a, n / norm, rcond=None)
    rho = sum(ri * b for ri, b in zip(r, _hermitian_basis(dim))) / dim
    tr = np.trace(rho).real
    if tr <= 0:
        raise SingularSystem("linear inversion produced a non-positive trace")
    rho = rho / tr
    return 0.5 * (rho + dag(rho))


def log_likelihood(rho, counts: list[CountRecord], n_qubits: int | None = None) -> float:
    """Poisson log-likelihood (without the ln n! constant) at the profiled rate."""
    rho = as_matrix(rho)
    n_qubits = n_qubits or int(np.log2(rho.shape[0]))
    kets, n = _kets_and_counts(counts, n_qubits)
    return _loglik_probs(np.real(np.einsum("ka,ab,kb->k", kets.conj(), rho, kets)), n)


def _loglik_probs(p: np.ndarray, n: np.ndarray) -> float:
    n_tot = n.sum()
    p_sum = p.sum()
    if n_tot <= 0 or p_sum <= 0:
        return 0.0 if n_tot <= 0 else -np.inf
    mu = np.maximum(n_tot * p / p_sum, MU_FLOOR)
    pos = n > 0
    return float(np.sum(n[pos] * np.log(mu[pos])) - np.sum(mu))


def _tril_index(dim: int):
    rows, cols = np.tril_indices(dim)
    strict = rows != cols
    return rows, cols, strict


def _params_to_t(x: np.ndarray, dim: int) -> np.ndarray:
    rows, cols, strict = _tril_index(dim)
    nr = rows.size
    t = np.zeros((dim, dim), dtype=complex)
    t[rows, cols] = x[:nr]
    t[rows[strict], cols[strict]] += 1j * x[nr:]
    return t


def _t_to_params(t: np.ndarray) -> np.ndarray:
    dim = t.shape[0]
    rows, cols, strict = _tril_index(dim)
    return np.concatenate([t[rows, cols].real, t[rows[strict], cols[strict]].imag])


def _t_from_rho(rho: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^dagger T = rho (rho positive definite)."""
    j = np.eye(rho.shape[0])[::-1]
    chol = np.linalg.cholesky(j @ rho @ j)
    return j @ dag(chol) @ j


def _rho_from_t(t: np.ndarray) -> np.ndarray:
    rho = dag(t) @ t
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + dag(rho))


class _Objective:
    """Negative log-likelihood per count, with its gradient in T-parameters."""

    def __init__(self, kets: np.ndarray, n: np.ndarray, dim: int):
        self.kets = kets
        self.n = n
        self.n_tot = n.sum()
        self.dim = dim
        self.rows, self.cols, self.strict = _tril_index(dim)

    def loglik(self, x: np.ndarray) -> float:
        return _loglik_probs(self._probs(_params_to_t(x, self.dim))[1], self.n)

    def _probs(self, t):
        v = t @ self.kets.T  # column k is T|pi_k>
        return v, np.sum(np.abs(v) ** 2, axis=0)

    def __call__(self, x: np.ndarray):
        t = _params_to_t(x, self.dim)
        v, q = self._probs(t)
        q_sum = q.sum()
        q_eff = np.maximum(q, MU_FLOOR * q_sum / self.n_tot)
        pos = self.n > 0
        ll = np.sum(self.n[pos] * np.log(q_eff[pos])) - self.n_tot * np.log(q_sum)
        w = np.zeros_like(q)
        w[pos] = self.n[pos] / q_eff[pos]
        w -= self.n_tot / q_sum
        # d q_k / d T = 2 T |pi_k><pi_k| (real and imaginary parts separately)
        g = 2 * (v * w) @ self.kets.conj()
        grad = np.concatenate([g[self.rows, self.cols].real, g[self.rows[self.strict], self.cols[self.strict]].imag])
        return -ll / self.n_tot, -grad / self.n_tot


def _reproduces_data(rho: np.ndarray, kets: np.ndarray, n: np.ndarray) -> bool:
    p = np.real(np.einsum("ka,ab,kb->k", kets.conj(), rho, kets))
    scale = n.sum() / p.sum()
    return bool(np.max(np.abs(scale * p - n)) <= 1e-9 * max(n.max(), 1.0))


def mle_fit(
    counts: list[CountRecord],
    n_qubits: int,
    config: MleConfig | None = None,
    pairs_per_setting: float | None = None,
) -> MleResult:
    """Maximum-likelihood density matrix with diagnostics.

    The linear-inversion estimate seeds the search. When it is already positive
    and reproduces every observed frequency it is the global maximum of the
    likelihood and is returned as is (``flags`` contains ``"seed_optimal"``),
    unless ``config.force_optimize`` is set. Otherwise L-BFGS-B runs on the
    T-parameters from a PSD-projected, slightly mixed seed. A run that hits
    ``max_iterations`` returns its best iterate with ``converged=False``.
    """
    config = config or MleConfig()
    dim = _dim(n_qubits)
    kets, n = _kets_and_counts(counts, n_qubits)
    if n.sum() <= 0:
        mixed = maximally_mixed(dim)
        return MleResult(mixed, 0.0, 0.0, 0, True, ["degenerate_data"])

    flags = []
    try:
        seed = linear_inversion_state(counts, n_qubits, pairs_per_setting)
    except SingularSystem:
        seed = maximally_mixed(dim)
        flags.append("singular_seed")
    seed_min = eig_hermitian(seed)[0][-1]
    if seed_min < -PSD_TOL:
        flags.append("seed_indefinite")
    seed_psd = project_psd(seed)
    seed_psd = seed_psd / np.trace(seed_psd).real
    seed_ll = _loglik_probs(np.real(np.einsum("ka,ab,kb->k", kets.conj(), seed_psd, kets)), n)

    if config.start == "seed" and not config.force_optimize:
        if seed_min >= -PSD_TOL and _reproduces_data(seed_psd, kets, n):
            return MleResult(seed_psd, seed_ll, seed_ll, 0, True, flags + ["seed_optimal"])

    if config.start == "mixed":
        # diagnostic mode: ignore the seed entirely
        start = maximally_mixed(dim)
        seed_psd, seed_ll = start, _loglik_probs(np.real(np.einsum("ka,ab,kb->k", kets.conj(), start, kets)), n)
    else:
        start = (1 - SEED_MIXING) * seed_psd + SEED_MIXING * maximally_mixed(dim)
    x0 = _t_to_params(_t_from_rho(start))
    obj = _Objective(kets, n, dim)
    start_ll = obj.loglik(x0)

    history = [start_ll] if config.debug else []

    def callback(xk):
        if config.debug:
            ll = obj.loglik(xk)
            if ll < history[-1] - 1e-12 * max(abs(ll), 1.0):
                raise AssertionError(f"likelihood decreased: {history[-1]!r} -> {ll!r}")
            history.append(ll)

    res = minimize(
        obj,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxiter": config.max_iterations,
            "ftol": config.likelihood_tolerance,
            "gtol": config.param_tolerance,
            "maxcor": 30,
        },
    )
    rho = _rho_from_t(_params_to_t(res.x, dim))
    ll = obj.loglik(res.x)
    converged = bool(res.success)
    if not converged and res.nit < config.max_iterations:
        # line search stalled at machine precision: the iterate is stationary
        converged = bool(np.max(np.abs(res.jac)) < 1e-6)
    if not converged:
        flags.append("non_convergence")
    best_start, best_ll = (seed_psd, seed_ll) if seed_ll >= start_ll else (start, start_ll)
    if ll < best_ll:
        rho, ll = best_start, best_ll
        flags.append("returned_seed")
    return MleResult(rho, ll, max(seed_ll, start_ll), int(res.nit), converged, flags, history)


def mle_state(
    counts: list[CountRecord],
    n_qubits: int,
    config: MleConfig | None = None,
    pairs_per_setting: float | None = None,
) -> np.ndarray:
    return mle_fit(counts, n_qubits, config, pairs_per_setting).rho


# ---------------------------------------------------------------- processes

L_BASIS = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 0], [1, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
)


@dataclass
class OperatorBasisExpansion:
    """Images E(L_q) of the matrix-unit basis."""

    e_l0: np.ndarray
    e_l1: np.ndarray
    e_l2: np.ndarray
    e_l3: np.ndarray

    def images(self) -> tuple:
        return (self.e_l0, self.e_l1, self.e_l2, self.e_l3)

    @staticmethod
    def coefficients(rho) -> np.ndarray:
        """l_q = tr(rho L_q^dagger), so that rho = sum_q l_q L_q."""
        rho = as_matrix(rho)
        return np.array([np.trace(rho @ dag(lq)) for lq in L_BASIS])

    def apply(self, rho) -> np.ndarray:
        return sum(c * e for c, e in zip(self.coefficients(rho), self.images()))

    def consistency_error(self) -> float:
        return float(
            max(
                np.max(np.abs(self.e_l0 - dag(self.e_l0))),
                np.max(np.abs(self.e_l3 - dag(self.e_l3))),
                np.max(np.abs(self.e_l2 - dag(self.e_l1))),
            )
        )


def assemble_e_basis(out_h, out_v, out_d, out_l) -> OperatorBasisExpansion:
    """E(L1) = E(D) + i E(L) - (1 + i)/2 (E(H) + E(V)); E(L2) = E(L1)^dagger."""
    out_h, out_v, out_d, out_l = (as_matrix(m) for m in (out_h, out_v, out_d, out_l))
    e1 = out_d + 1j * out_l - (1 + 1j) / 2 * (out_h + out_v)
    return OperatorBasisExpansion(out_h, e1, dag(e1), out_v)


def e_basis_from_chi(chi) -> OperatorBasisExpansion:
    chi = as_matrix(chi)
    p = np.array(PAULIS)
    return OperatorBasisExpansion(*(np.einsum("mn,mab,bc,ncd->ad", chi, p, lq, p) for lq in L_BASIS))


def _basis_tensor() -> np.ndarray:
    """B[(q, a, b), (m, n)] = (sigma_m L_q sigma_n)[a, b]."""
    b = np.zeros((4, 2, 2, 4, 4), dtype=complex)
    for q, lq in enumerate(L_BASIS):
        for m, sm in enumerate(PAULIS):
            for n_, sn in enumerate(PAULIS):
                b[q, :, :, m, n_] = sm @ lq @ sn
    return b.reshape(16, 16)


_B = _basis_tensor()


def chi_from_e_basis(e: OperatorBasisExpansion, psd_project: bool = False) -> np.ndarray:
    """Solve for chi; Hermitize; optionally project to PSD and rescale toward trace preservation."""
    if np.linalg.cond(_B) > 1e12:
        raise SingularSystem("operator basis tensor is singular")
    rhs = np.concatenate([as_matrix(m).ravel() for m in e.images()])
    chi = np.linalg.solve(_B, rhs).reshape(4, 4)
    chi = 0.5 * (chi + dag(chi))
    if psd_project:
        chi = project_psd(chi)
        s = tp_matrix(chi)
        denom = np.real(np.trace(dag(s) @ s))
        if denom > 0:
            chi = chi * (np.real(np.trace(s)) / denom)
    return chi


@dataclass(frozen=True)
class ProcessConfig:
    mle: MleConfig = field(default_factory=MleConfig)
    psd_project: bool = False


@dataclass
class ProcessResult:
    chi: np.ndarray
    kraus: list
    e_basis: OperatorBasisExpansion
    outputs: dict
    diagnostics: dict


def process_tomography(counts_by_input: dict, config: ProcessConfig | None = None) -> ProcessResult:
    """MLE on each of the four output states, then the operator-basis assembly and the chi solve.

    If the reconstructed chi is not completely positive, the Kraus set is taken
    from its PSD projection and ``diagnostics["kraus_from_projection"]`` is set.
    """
    config = config or ProcessConfig()
    missing = [lab for lab in PROCESS_INPUTS if lab not in counts_by_input]
    if missing:
        raise IncompletePlan(f"missing process inputs: {missing}")
    fits = {lab: mle_fit(counts_by_input[lab], 1, config.mle) for lab in PROCESS_INPUTS}
    outputs = {lab: fit.rho for lab, fit in fits.items()}
    e = assemble_e_basis(outputs["H"], outputs["V"], outputs["D"], outputs["L"])
    chi = chi_from_e_basis(e, config.psd_project)
    report = validate_channel(chi)
    kraus_from_projection = report.min_eig < -CP_TOL
    kraus = kraus_from_chi(project_psd(chi) if kraus_from_projection else chi)
    diagnostics = {
        "tp_error": report.tp_error,
        "min_eig": report.min_eig,
        "hermiticity_error": report.hermiticity_error,
        "kraus_from_projection": kraus_from_projection,
        "log_likelihoods": {lab: fit.log_likelihood for lab, fit in fits.items()},
        "mle_converged": {lab: fit.converged for lab, fit in fits.items()},
        "mle_flags": {lab: list(fit.flags) for lab, fit in fits.items()},
    }
    return ProcessResult(chi, kraus, e, outputs, diagnostics)
