import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_kraus
from polartomo.channels import ChannelSpec, apply_chi, chi_from_kraus, make_channel, tp_matrix
from polartomo.errors import IncompletePlan
from polartomo.measurement import (
    IDEAL_DETECTOR, CountRecord, simulate_counts, simulate_process_counts, state_tomography_plan,
)
from polartomo.qmath import random_density
from polartomo.states import concurrence, fidelity, ket_to_dm, rho_nu, standard_ket, state_fidelity
from polartomo.tomography import (
    L_BASIS, MleConfig, OperatorBasisExpansion, ProcessConfig, _Objective, _kets_and_counts, _t_to_params,
    _t_from_rho, assemble_e_basis, chi_from_e_basis, e_basis_from_chi, linear_inversion_state, log_likelihood,
    mle_fit, mle_state, process_tomography,
)

seeds = st.integers(0, 2**32 - 1)


def _exact(rho, n_qubits, pairs=10_000):
    return simulate_counts(rho, state_tomography_plan(n_qubits), IDEAL_DETECTOR, pairs, None, noiseless=True)


def _rrr_oracle(recs, iters=5000, eps=0.5):
    """Diluted R-rho-R fixed-point iteration for the rate-profiled Poisson likelihood."""
    kets = np.array([r.setting.ket() for r in recs])
    n = np.array([r.count for r in recs], dtype=float)
    d = kets.shape[1]
    proj = np.einsum("ka,kb->kab", kets, kets.conj())
    rho = np.eye(d) / d
    for _ in range(iters):
        p = np.real(np.einsum("ka,ab,kb->k", kets.conj(), rho, kets))
        r_op = np.einsum("k,kab->ab", n / p, proj)
        s_op = n.sum() / p.sum() * proj.sum(axis=0)
        m = (1 - eps) * np.eye(d) + eps * np.linalg.solve(s_op, r_op)
        rho = m @ rho @ m.conj().T
        rho /= np.trace(rho).real
    return rho


def _assert_density(rho):
    assert np.max(np.abs(rho - rho.conj().T)) <= 1e-10
    assert abs(np.trace(rho) - 1) <= 1e-10
    assert np.linalg.eigvalsh(rho).min() >= -1e-9


# ------------------------------------------------------------------ states

def test_linear_inversion_examples():
    h = ket_to_dm(standard_ket("H"))
    assert np.max(np.abs(linear_inversion_state(_exact(h, 1), 1) - h)) <= 1e-12
    r = rho_nu(0.5)
    assert np.max(np.abs(linear_inversion_state(_exact(r, 2), 2) - r)) <= 1e-10


def test_linear_inversion_can_be_indefinite():
    # a pure state on the boundary: noise pushes linear inversion outside the PSD cone for some seeds
    mins = []
    for seed in range(20):
        recs = simulate_counts(rho_nu(1.0), state_tomography_plan(2), IDEAL_DETECTOR, 500, seed)
        rho = linear_inversion_state(recs, 2)
        assert abs(np.trace(rho) - 1) <= 1e-12
        mins.append(np.linalg.eigvalsh(rho).min())
    assert min(mins) < 0


def test_linear_inversion_normalization_fallback():
    recs = _exact(rho_nu(0.5), 2, pairs=2000)
    partial = [r for r in recs if r.setting.label != ("V", "V")]
    with pytest.raises(IncompletePlan):
        linear_inversion_state(partial, 2)
    # still informationally incomplete with 15 settings, even with a pair budget
    with pytest.raises(IncompletePlan):
        linear_inversion_state(partial, 2, pairs_per_setting=2000)


def test_mle_examples():
    h = ket_to_dm(standard_ket("H"))
    assert fidelity(mle_state(_exact(h, 1), 1), standard_ket("H")) >= 0.9999
    assert abs(concurrence(mle_state(_exact(rho_nu(0.95), 2), 2)) - 0.95) <= 1e-3


def test_mle_noisy_rho_nu():
    target = rho_nu(0.95)
    recs = simulate_counts(target, state_tomography_plan(2), IDEAL_DETECTOR, 10_000, 7)
    fit = mle_fit(recs, 2)
    assert state_fidelity(fit.rho, target) >= 0.98
    assert fit.log_likelihood >= fit.seed_log_likelihood


@pytest.mark.parametrize("n_qubits", [1, 2])
def test_mle_exact_round_trip(n_qubits, rng):
    dim = 2**n_qubits
    for i in range(50):
        rho = random_density(dim, rng, rank=1 + i % dim)
        est = mle_state(_exact(rho, n_qubits), n_qubits)
        assert np.linalg.norm(est - rho) <= 1e-6


def test_mle_optimizer_alone_on_full_rank_states(rng):
    # no seed: L-BFGS-B from the maximally mixed state on exact data
    for _ in range(10):
        rho = random_density(4, rng)
        fit = mle_fit(_exact(rho, 2), 2, MleConfig(start="mixed"))
        assert fit.converged
        assert np.linalg.norm(fit.rho - rho) <= 1e-4
        assert fit.log_likelihood >= log_likelihood(rho, _exact(rho, 2)) - 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mle_matches_rrr_oracle_on_noisy_data(seed):
    for target in (rho_nu(0.95), random_density(4, np.random.default_rng(seed), rank=2)):
        recs = simulate_counts(target, state_tomography_plan(2), IDEAL_DETECTOR, 1000, seed)
        fit = mle_fit(recs, 2)
        oracle = _rrr_oracle(recs)
        assert abs(log_likelihood(fit.rho, recs) - log_likelihood(oracle, recs)) <= 1e-4
        assert np.linalg.norm(fit.rho - oracle) <= 1e-3


@given(seeds, st.sampled_from([50, 500, 5000]))
@settings(max_examples=25, deadline=None)
def test_mle_output_is_always_a_state(seed, pairs):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng, rank=int(rng.integers(1, 5)))
    recs = simulate_counts(rho, state_tomography_plan(2), IDEAL_DETECTOR, pairs, seed)
    fit = mle_fit(recs, 2, MleConfig(debug=True))
    _assert_density(fit.rho)
    assert fit.log_likelihood >= fit.seed_log_likelihood - 1e-9


def test_mle_debug_history_is_monotone():
    recs = simulate_counts(rho_nu(1.0), state_tomography_plan(2), IDEAL_DETECTOR, 300, 12)
    fit = mle_fit(recs, 2, MleConfig(debug=True, force_optimize=True))
    assert len(fit.history) > 1
    assert np.all(np.diff(fit.history) >= -1e-12 * np.abs(fit.history[1:]))


def test_mle_iteration_cap_reports_non_convergence():
    recs = simulate_counts(rho_nu(1.0), state_tomography_plan(2), IDEAL_DETECTOR, 300, 12)
    fit = mle_fit(recs, 2, MleConfig(max_iterations=1, force_optimize=True))
    assert not fit.converged and "non_convergence" in fit.flags
    _assert_density(fit.rho)


def test_mle_zero_counts_give_maximally_mixed():
    recs = [CountRecord(s, 0, 0.0) for s in state_tomography_plan(2)]
    fit = mle_fit(recs, 2)
    assert np.allclose(fit.rho, np.eye(4) / 4) and "degenerate_data" in fit.flags


def test_mle_handles_zero_count_settings():
    recs = _exact(ket_to_dm(standard_ket("H")), 1)
    assert any(r.count == 0 for r in recs)
    fit = mle_fit(recs, 1, MleConfig(force_optimize=True))
    assert np.isfinite(fit.log_likelihood)
    assert fidelity(fit.rho, standard_ket("H")) >= 0.9999


def test_mle_rejects_incomplete_plan():
    with pytest.raises(IncompletePlan):
        mle_fit([], 1)
    with pytest.raises(IncompletePlan):
        mle_fit(_exact(rho_nu(0.3), 2), 1)


def test_objective_gradient_matches_finite_differences(rng):
    recs = simulate_counts(random_density(4, rng), state_tomography_plan(2), IDEAL_DETECTOR, 2000, 3)
    kets, n = _kets_and_counts(recs, 2)
    obj = _Objective(kets, n, 4)
    x = _t_to_params(_t_from_rho(random_density(4, rng)))
    f0, grad = obj(x)
    h = 1e-6
    fd = np.array([(obj(x + h * e)[0] - obj(x - h * e)[0]) / (2 * h) for e in np.eye(x.size)])
    assert np.max(np.abs(fd - grad)) <= 1e-6


# --------------------------------------------------------------- processes

def test_assemble_e_basis_identity_channel():
    outs = [ket_to_dm(standard_ket(l)) for l in "HVDL"]
    e = assemble_e_basis(*outs)
    assert np.max(np.abs(e.e_l1 - np.array([[0, 1], [0, 0]]))) <= 1e-12
    assert np.array_equal(e.e_l2, e.e_l1.conj().T)
    assert e.consistency_error() <= 1e-12


def test_assemble_e_basis_bitflip_zero():
    chi = make_channel(ChannelSpec("bitflip", s=0))
    outs = [apply_chi(chi, ket_to_dm(standard_ket(l))) for l in "HVDL"]
    e = assemble_e_basis(*outs)
    assert np.allclose(np.diag(e.e_l1), 0)
    # E(|H><V|) = (|H><V| + |V><H|)/2 for the fully flipping mixture
    assert np.allclose(e.e_l1, [[0, 0.5], [0.5, 0]])


def test_e_basis_apply_reproduces_channel(rng):
    chi = chi_from_kraus(random_kraus(rng))
    e = e_basis_from_chi(chi)
    for _ in range(5):
        rho = random_density(2, rng)
        assert np.allclose(e.apply(rho), apply_chi(chi, rho))
    rho = random_density(2, rng)
    coeff = OperatorBasisExpansion.coefficients(rho)
    assert np.allclose(sum(c * l for c, l in zip(coeff, L_BASIS)), rho)


@pytest.mark.parametrize(
    "spec, expected",
    [
        (ChannelSpec("null"), np.diag([1, 0, 0, 0])),
        (ChannelSpec("bitflip", s=0.4), np.diag([0.7, 0.3, 0, 0])),
    ],
)
def test_chi_from_e_basis_examples(spec, expected):
    chi = chi_from_e_basis(e_basis_from_chi(make_channel(spec)))
    assert np.max(np.abs(chi - expected)) <= 1e-12


def test_chi_from_e_basis_hadamard():
    chi = chi_from_e_basis(e_basis_from_chi(make_channel(ChannelSpec("hadamard_imperfect", s=1.0))))
    assert chi[0, 0] == pytest.approx(0.5) and chi[1, 1] == pytest.approx(0.5)
    assert chi[0, 1] == pytest.approx(-0.5j)


@given(seeds)
@settings(max_examples=50)
def test_chi_from_e_basis_inverts_forward_map(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    chi = a + a.conj().T
    back = chi_from_e_basis(e_basis_from_chi(chi))
    assert np.max(np.abs(back - chi)) <= 1e-10
    assert np.max(np.abs(back - back.conj().T)) <= 1e-10


def test_process_tomography_null_noiseless():
    res = process_tomography(simulate_process_counts(make_channel(ChannelSpec("null")), noiseless=True))
    assert np.linalg.norm(res.chi - np.diag([1, 0, 0, 0])) <= 1e-9
    assert len(res.kraus) == 1
    d = res.diagnostics
    assert d["tp_error"] <= 1e-9 and set(d["log_likelihoods"]) == set("HVDL")


def test_process_tomography_pauli_noiseless():
    spec = ChannelSpec("pauli", p=0.2, q=0.1, r=0.05)
    res = process_tomography(simulate_process_counts(make_channel(spec), noiseless=True))
    assert np.max(np.abs(res.chi - np.diag([0.65, 0.2, 0.1, 0.05]))) <= 1e-9


def test_process_tomography_noisy_bitflip():
    chi = make_channel(ChannelSpec("bitflip", s=0.6))
    res = process_tomography(simulate_process_counts(chi, IDEAL_DETECTOR, 100_000, 11))
    assert np.max(np.abs(res.chi - chi)) <= 0.02
    assert np.max(np.abs(res.chi - res.chi.conj().T)) <= 1e-10


def test_process_tomography_random_channels(rng):
    for _ in range(50):
        chi = chi_from_kraus(random_kraus(rng))
        res = process_tomography(simulate_process_counts(chi, noiseless=True))
        assert np.linalg.norm(res.chi - chi) <= 1e-8


def test_process_tomography_psd_projection():
    chi = make_channel(ChannelSpec("bitflip", s=1.0))
    counts = simulate_process_counts(chi, IDEAL_DETECTOR, 2000, 21)
    raw = process_tomography(counts)
    projected = process_tomography(counts, ProcessConfig(psd_project=True))
    assert np.linalg.eigvalsh(projected.chi).min() >= -1e-12
    assert raw.diagnostics["kraus_from_projection"] == (raw.diagnostics["min_eig"] < -1e-6)
    # the global rescale minimizes the Frobenius TP residual
    def residual(c):
        return np.linalg.norm(tp_matrix(c * projected.chi) - np.eye(2))
    assert residual(1.0) <= min(residual(c) for c in np.linspace(0.9, 1.1, 41)) + 1e-12
    assert np.max(np.abs(projected.chi - chi)) <= 0.05


def test_process_tomography_requires_all_inputs():
    counts = simulate_process_counts(make_channel(ChannelSpec("null")), noiseless=True)
    del counts["L"]
    with pytest.raises(IncompletePlan):
        process_tomography(counts)
