"""Simulated photon-counting measurements.

Every recorded event is a coincidence between two detectors: the two photons
of a pair for two-qubit runs, or the heralding (trigger) photon and the
analyzed photon for single-qubit runs. The mean coincidence count for a
setting is

    pairs * p_born * efficiency**2 + accidentals

with accidentals = R1 * R2 * window * duration, where the singles rates R_i
include dark counts. Counts are Poisson draws from a ``numpy`` PCG64 generator.
Each setting gets its own child stream seeded by ``SeedSequence([seed, index])``,
so settings can be simulated independently.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidModel, InvalidPlan, OutOfRange
from .qmath import as_matrix
from .channels import apply_chi
from .states import ket_to_dm, partial_trace, rho_nu, standard_ket

TOMOGRAPHY_LABELS = ("H", "V", "D", "L")
PROCESS_INPUTS = ("H", "V", "D", "L")


@dataclass(frozen=True)
class MeasurementSetting:
    """Projector kets, one per analyzed photon."""

    projectors: tuple
    label: tuple

    @classmethod
    def from_labels(cls, labels) -> "MeasurementSetting":
        labels = tuple(labels)
        return cls(tuple(standard_ket(l) for l in labels), labels)

    @property
    def n_qubits(self) -> int:
        return len(self.projectors)

    def ket(self) -> np.ndarray:
        ket = np.ones(1, dtype=complex)
        for k in self.projectors:
            ket = np.kron(ket, np.asarray(k, dtype=complex))
        return ket


@dataclass(frozen=True)
class DetectorModel:
    """Detector and timing parameters.

    ``integration_time`` (s) fixes the duration of each setting; when it is
    None the duration is ``pairs / rep_rate``. ``window`` is the coincidence
    window (s); a zero window or ``accidentals=False`` removes accidentals.
    """

    efficiency: float = 1.0
    dark_rate: float = 0.0
    window: float = 0.0
    rep_rate: float = 82e6
    integration_time: float | None = None
    accidentals: bool = True

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise InvalidPlan(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if min(self.dark_rate, self.window, self.rep_rate) < 0:
            raise InvalidPlan("detector rates and window must be non-negative")
        if self.integration_time is not None and self.integration_time <= 0:
            raise InvalidPlan("integration_time must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorModel":
        return cls(**d)


IDEAL_DETECTOR = DetectorModel()

# 40 % PMTs, 80 /s dark counts, 7 ns coincidence window, 82 MHz pump.
# The 10 s integration matches the interference-scan dwell time.
DETECTOR_PRESETS = {
    "ideal": IDEAL_DETECTOR,
    "paper-2002": DetectorModel(
        efficiency=0.40, dark_rate=80.0, window=7e-9, rep_rate=82e6, integration_time=10.0
    ),
}


def detector_preset(name: str) -> DetectorModel:
    try:
        return DETECTOR_PRESETS[name]
    except KeyError:
        raise InvalidPlan(f"unknown detector preset {name!r}; known: {sorted(DETECTOR_PRESETS)}") from None


@dataclass
class CountRecord:
    setting: MeasurementSetting
    count: float
    expected: float


@dataclass(frozen=True)
class DelayScanModel:
    nu_max: float = 0.95
    t0: float = 0.0
    fwhm: float = 237.0

    def nu(self, t: float) -> float:
        if self.fwhm <= 0:
            raise InvalidModel(f"fwhm must be positive, got {self.fwhm}")
        if not 0 <= self.nu_max <= 1:
            raise InvalidModel(f"nu_max must lie in [0, 1], got {self.nu_max}")
        return float(self.nu_max * np.exp(-4 * np.log(2) * (t - self.t0) ** 2 / self.fwhm**2))


def born_probability(rho, setting: MeasurementSetting) -> float:
    rho = as_matrix(rho)
    ket = setting.ket()
    if ket.shape[0] != rho.shape[0]:
        raise DimensionMismatch(f"setting acts on dimension {ket.shape[0]}, state has {rho.shape[0]}")
    return float(np.real(ket.conj() @ rho @ ket))


def state_tomography_plan(n_qubits: int) -> list[MeasurementSetting]:
    """All products of {H, V, D, L}; the first photon's label varies slowest."""
    if n_qubits not in (1, 2):
        raise InvalidPlan(f"n_qubits must be 1 or 2, got {n_qubits}")
    return [MeasurementSetting.from_labels(c) for c in itertools.product(TOMOGRAPHY_LABELS, repeat=n_qubits)]


def process_tomography_plan() -> list[tuple[str, list[MeasurementSetting]]]:
    return [(label, state_tomography_plan(1)) for label in PROCESS_INPUTS]


def child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for a sub-experiment identified by ``keys``."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _marginals(rho, setting: MeasurementSetting) -> tuple[float, float]:
    """Probabilities that each detector's photon passes its analyzer."""
    if setting.n_qubits == 1:
        # trigger arm has no analyzer
        return 1.0, born_probability(rho, setting)
    out = []
    for k, ket in enumerate(setting.projectors):
        red = partial_trace(rho, k)
        ket = np.asarray(ket, dtype=complex)
        out.append(float(np.real(ket.conj() @ red @ ket)))
    return out[0], out[1]


def expected_count(rho, setting: MeasurementSetting, detector: DetectorModel, pairs: float) -> float:
    p = max(born_probability(rho, setting), 0.0)
    eta = detector.efficiency
    mean = pairs * p * eta**2
    if detector.accidentals and detector.window > 0:
        duration = detector.integration_time or pairs / detector.rep_rate
        pair_rate = pairs / duration
        m1, m2 = _marginals(rho, setting)
        r1 = eta * pair_rate * m1 + detector.dark_rate
        r2 = eta * pair_rate * m2 + detector.dark_rate
        mean += r1 * r2 * detector.window * duration
    return float(mean)


def simulate_counts(
    rho,
    plan,
    detector: DetectorModel = IDEAL_DETECTOR,
    pairs_per_setting: int = 10_000,
    seed: int | None = 0,
    noiseless: bool = False,
) -> list[CountRecord]:
    """Coincidence counts for every setting of ``plan``.

    With ``noiseless=True`` the count is the (non-integer) mean itself, which
    gives exact-data reconstructions.
    """
    rho = as_matrix(rho)
    if pairs_per_setting <= 0:
        raise InvalidPlan("pairs_per_setting must be positive")
    if not plan:
        raise InvalidPlan("empty measurement plan")
    if not noiseless and seed is None:
        raise InvalidPlan("a seed is required for noisy simulation")
    records = []
    for i, setting in enumerate(plan):
        mu = expected_count(rho, setting, detector, pairs_per_setting)
        count = mu if noiseless else int(child_rng(seed, i).poisson(mu))
        records.append(CountRecord(setting, count, mu))
    return records


def simulate_process_counts(
    chi,
    detector: DetectorModel = IDEAL_DETECTOR,
    pairs_per_setting: int = 10_000,
    seed: int | None = 0,
    noiseless: bool = False,
) -> dict[str, list[CountRecord]]:
    """Heralded single-photon tomography of the channel output for each input H, V, D, L."""
    out = {}
    for i, (label, plan) in enumerate(process_tomography_plan()):
        rho_out = apply_chi(chi, ket_to_dm(standard_ket(label)))
        sub_seed = None if seed is None else derive_seed(seed, i)
        out[label] = simulate_counts(rho_out, plan, detector, pairs_per_setting, sub_seed, noiseless)
    return out


def interference_setting(theta_deg: float, branch: int = 1) -> MeasurementSetting:
    """|R> (branch +1) or |L> (branch -1) on photon 1 and cos2t|H> + i sin2t|V> on photon 2."""
    t = np.deg2rad(theta_deg)
    ket2 = np.array([np.cos(2 * t), 1j * np.sin(2 * t)])
    first = "R" if branch > 0 else "L"
    return MeasurementSetting((standard_ket(first), ket2), (first, f"theta={theta_deg:g}"))


def simulate_interference_scan(
    nu: float,
    theta_list,
    pairs_per_point: int = 10_000,
    detector: DetectorModel = IDEAL_DETECTOR,
    seed: int | None = 0,
    branch: int = 1,
    noiseless: bool = False,
) -> list[tuple[float, float, float]]:
    """Two-photon polarization interference on rho(nu).

    Coincidence probability is (1/4)(1 + branch * nu * sin 4 theta).
    Returns (theta, count, expected) triples.
    """
    if not 0 <= nu <= 1:
        raise OutOfRange(f"nu must lie in [0, 1], got {nu}")
    rho = rho_nu(nu)
    plan = [interference_setting(t, branch) for t in theta_list]
    recs = simulate_counts(rho, plan, detector, pairs_per_point, seed, noiseless)
    return [(float(t), r.count, r.expected) for t, r in zip(theta_list, recs)]


def simulate_delay_scan(model: DelayScanModel, t_list) -> list[tuple[float, np.ndarray]]:
    return [(float(t), rho_nu(model.nu(t))) for t in t_list]


def hwp(theta_deg: float) -> np.ndarray:
    c, s = np.cos(np.deg2rad(2 * theta_deg)), np.sin(np.deg2rad(2 * theta_deg))
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(theta_deg: float) -> np.ndarray:
    t = np.deg2rad(theta_deg)
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return rot @ np.diag([1, 1j]) @ rot.T


def waveplate_projector(hwp_deg: float, qwp_deg: float) -> np.ndarray:
    """Input polarization transmitted by HWP -> QWP -> PBS (H port)."""
    ket = hwp(hwp_deg).conj().T @ qwp(qwp_deg).conj().T @ np.array([1, 0], dtype=complex)
    return ket / np.linalg.norm(ket)


def counts_from_labels(label_counts: dict) -> list[CountRecord]:
    """Build records from ``{"HV": n, ...}`` style mappings."""
    out = []
    for labels, n in label_counts.items():
        out.append(CountRecord(MeasurementSetting.from_labels(tuple(labels)), n, float(n)))
    return out

