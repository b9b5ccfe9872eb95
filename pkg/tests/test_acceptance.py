"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line. Run directly with
``python tests/test_acceptance.py`` for the summary alone, or through pytest
(``pytest tests/test_acceptance.py -s`` shows the lines inline; they are also
echoed to the terminal regardless of capture).
"""
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_kraus  # noqa: E402
from polartomo.analysis import fit_gaussian_scan, fit_visibility  # noqa: E402
from polartomo.channels import (  # noqa: E402
    ChannelSpec, chi_from_kraus, compose, kraus_from_chi, make_channel, pauli_from_depolarizers,
)
from polartomo.cli import run  # noqa: E402
from polartomo.measurement import (  # noqa: E402
    DETECTOR_PRESETS, DelayScanModel, derive_seed, simulate_counts, simulate_interference_scan,
    simulate_process_counts, state_tomography_plan,
)
from polartomo.qmath import I2, random_density  # noqa: E402
from polartomo.states import concurrence, rho_nu, stokes_and_dop  # noqa: E402
from polartomo.tomography import assemble_e_basis, mle_state, process_tomography  # noqa: E402
from polartomo.states import ket_to_dm, standard_ket  # noqa: E402

NOISY = DETECTOR_PRESETS["paper-2002"]
SEED = 7


def _chi_noiseless(chi):
    return process_tomography(simulate_process_counts(chi, noiseless=True)).chi


def criterion_1():
    t0 = time.perf_counter()
    target = np.diag([1, 0, 0, 0])
    null = make_channel(ChannelSpec("null"))
    err = np.linalg.norm(_chi_noiseless(null) - target)
    noisy = process_tomography(simulate_process_counts(null, NOISY, 100_000, SEED)).chi
    off = np.abs(noisy).copy()
    off[0, 0] = 0
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-9 and off.max() <= 0.02 and elapsed < 5
    return ok, f"null channel: |chi - diag(1,0,0,0)|_F = {err:.2e}, noisy max off-chi00 = {off.max():.4f}, {elapsed:.2f} s"


def criterion_2():
    worst_chi = worst_dop = 0.0
    for s in (0.0, 0.3, 0.7, 1.0):
        chi = make_channel(ChannelSpec("bitflip", s=s))
        res = process_tomography(simulate_process_counts(chi, noiseless=True))
        expected = 0.5 * np.diag([1 + s, 1 - s, 0, 0])
        worst_chi = max(worst_chi, np.max(np.abs(res.chi - expected)))
        worst_dop = max(worst_dop, abs(stokes_and_dop(res.outputs["V"])[1] - s))
    ok = worst_chi <= 1e-9 and worst_dop <= 1e-9
    return ok, f"bit-flip: max chi error = {worst_chi:.2e}, max |DOP(V) - |s|| = {worst_dop:.2e}"


def criterion_3():
    worst = 0.0
    for p, q, r in ((0.2, 0.1, 0.05), (0.25, 0.25, 0.25)):
        chi = _chi_noiseless(make_channel(ChannelSpec("pauli", p=p, q=q, r=r)))
        worst = max(worst, np.max(np.abs(chi - np.diag([1 - p - q - r, p, q, r]))))
    sx, sz = 0.6, 0.3
    composed = compose(make_channel(ChannelSpec("bitflip", s=sz, axis="z")), make_channel(ChannelSpec("bitflip", s=sx)))
    p, q, r = pauli_from_depolarizers(sx, sz)
    comp_err = np.max(np.abs(composed - np.diag([1 - p - q - r, p, q, r])))
    off_diag = np.max(np.abs(composed - np.diag(np.diag(composed))))
    ok = worst <= 1e-9 and comp_err <= 1e-9 and off_diag <= 1e-12
    return ok, f"Pauli: max chi error = {worst:.2e}, x-then-z depolarizer composition error = {comp_err:.2e}"


def criterion_4():
    worst = 0.0
    for s in (0.5, 1.0):
        chi = _chi_noiseless(make_channel(ChannelSpec("hadamard_imperfect", s=s)))
        expected = np.zeros((4, 4), dtype=complex)
        expected[:2, :2] = [[0.5, -0.5j * s], [0.5j * s, 0.5]]
        worst = max(worst, np.max(np.abs(chi - expected)))
    return worst <= 1e-9, f"imperfect Hadamard: max chi error = {worst:.2e}"


def criterion_5():
    t0 = time.perf_counter()
    model = DelayScanModel(nu_max=0.95, t0=0.0, fwhm=237.0)
    delays = np.arange(-400.0, 401.0, 25.0)
    plan = state_tomography_plan(2)
    clean, noisy = [], []
    for i, t in enumerate(delays):
        rho = rho_nu(model.nu(t))
        clean.append(concurrence(mle_state(simulate_counts(rho, plan, pairs_per_setting=10_000, seed=None,
                                                           noiseless=True), 2)))
        recs = simulate_counts(rho, plan, NOISY, 10_000, derive_seed(SEED, i))
        noisy.append(concurrence(mle_state(recs, 2)))
    peak = int(np.argmin(np.abs(delays)))
    fit = fit_gaussian_scan(list(zip(delays, clean)))
    vis = fit_visibility(simulate_interference_scan(0.92, np.arange(0, 181, 7.5), 10_000, noiseless=True))
    elapsed = time.perf_counter() - t0
    checks = (
        abs(clean[peak] - 0.95) <= 1e-3,
        abs(noisy[peak] - 0.95) <= 0.02,
        fit.converged and abs(fit["fwhm"] / 237.0 - 1) <= 0.01,
        abs(vis["visibility"] - 0.92) <= 1e-6,
        elapsed < 30,
    )
    detail = (
        f"delay scan: peak C = {clean[peak]:.6f} (noiseless), {noisy[peak]:.4f} (Poisson); "
        f"FWHM = {fit['fwhm']:.3f} fs; visibility(0.92) = {vis['visibility']:.8f}; {elapsed:.2f} s"
    )
    return all(checks), detail


def criterion_6():
    worst = max(abs(concurrence(rho_nu(nu)) - nu) for nu in np.linspace(0, 1, 11))
    return worst <= 1e-9, f"C = nu on 11-point grid: max error = {worst:.2e}"


def criterion_7():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2002)
    plan = state_tomography_plan(2)
    state_err = 0.0
    for i in range(50):
        rho = random_density(4, rng, rank=1 + i % 4)
        est = mle_state(simulate_counts(rho, plan, pairs_per_setting=10_000, seed=None, noiseless=True), 2)
        state_err = max(state_err, np.linalg.norm(est - rho))
    proc_err = 0.0
    for _ in range(50):
        chi = chi_from_kraus(random_kraus(rng))
        proc_err = max(proc_err, np.linalg.norm(_chi_noiseless(chi) - chi))
    kraus_err = 0.0
    for _ in range(50):
        chi = chi_from_kraus(random_kraus(rng))
        kraus_err = max(kraus_err, np.linalg.norm(chi_from_kraus(kraus_from_chi(chi)) - chi))
    zoo = [
        ChannelSpec("null"), ChannelSpec("bitflip", s=0.4), ChannelSpec("bitflip", s=0.3, axis="z"),
        ChannelSpec("pauli", p=0.2, q=0.1, r=0.05), ChannelSpec("pauli", p=0.25, q=0.25, r=0.25),
        ChannelSpec("hadamard_imperfect", s=0.5), ChannelSpec("hadamard_imperfect", s=1.0),
    ]
    tp_err = max(
        np.max(np.abs(sum(a.conj().T @ a for a in kraus_from_chi(make_channel(spec))) - I2)) for spec in zoo
    )
    elapsed = time.perf_counter() - t0
    ok = state_err <= 1e-6 and proc_err <= 1e-8 and kraus_err <= 1e-9 and tp_err <= 1e-9 and elapsed < 60
    detail = (
        f"round trips: states {state_err:.1e}, processes {proc_err:.1e}, chi<->Kraus {kraus_err:.1e}, "
        f"zoo sum A^dag A = I {tp_err:.1e}; {elapsed:.2f} s"
    )
    return ok, detail


def criterion_8():
    outs = [ket_to_dm(standard_ket(label)) for label in "HVDL"]
    err = np.max(np.abs(assemble_e_basis(*outs).e_l1 - np.array([[0, 1], [0, 0]])))
    return err <= 1e-12, f"identity channel: |E(L1) - |H><V|| = {err:.1e}"


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "a", Path(tmp) / "b"]
        codes = [run(["reproduce", "fig3", "--seed", "7", "--out-dir", str(d)]) for d in dirs]
        names = sorted(p.name for p in dirs[0].iterdir())
        same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
            (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names
        )
    return codes == [0, 0] and same, f"reproduce fig3 --seed 7 twice: {len(names)} files byte-identical = {same}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


def _line(index, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {index}: {detail}"


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index, capsys):
    ok, detail = CRITERIA[index - 1]()
    with capsys.disabled():
        print("\n" + _line(index, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for i, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        results.append(ok)
        print(_line(i, ok, detail))
    sys.exit(0 if all(results) else 1)
