"""Curve fits and channel figures of merit.

Process fidelity uses chi normalized to unit trace (tr chi = 1 for a
trace-preserving qubit channel in the Pauli basis used here). It is the Uhlmann
fidelity between the normalized process matrices, and reduces to
tr(chi chi_target) whenever either matrix has rank one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .channels import ChannelSpec, kraus_from_chi, kraus_weights, make_channel, validate_channel
from .errors import InsufficientData, InvalidChi, NonConvergence
from .qmath import as_matrix, dag, eig_hermitian, uhlmann_fidelity

FOUR_LN2 = 4 * np.log(2)


@dataclass
class FitResult:
    parameters: dict
    residual_rms: float
    converged: bool
    iterations: int
    messages: list = field(default_factory=list)

    def __getitem__(self, name: str) -> float:
        return self.parameters[name]

    def to_dict(self) -> dict:
        return asdict(self)


def _as_xy(scan) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([(row[0], row[1]) for row in scan], dtype=float)
    if arr.size == 0:
        return np.empty(0), np.empty(0)
    return arr[:, 0], arr[:, 1]


def _polish(resid, jac, x, max_steps: int = 30) -> np.ndarray:
    """Gauss-Newton steps after LM so that results are converged to round-off.

    The squared residual cannot resolve changes this small, so progress is
    judged by the step length: iteration stops once steps stop shrinking.
    """
    x = np.asarray(x, dtype=float)
    last = np.inf
    for _ in range(max_steps):
        step, *_ = np.linalg.lstsq(jac(x), -resid(x), rcond=None)
        size = np.max(np.abs(step) / np.maximum(np.abs(x), 1e-12))
        if not size < last:
            break
        x, last = x + step, size
        if size <= 1e-15:
            break
    return x


def visibility_model(theta_deg, amplitude, visibility, phase):
    return amplitude * (1 + visibility * np.sin(np.deg2rad(4 * np.asarray(theta_deg)) + phase))


def fit_visibility(scan) -> FitResult:
    """Fit count(theta) = A (1 + v sin(4 theta + phi)) to an HWP-angle scan.

    The model is linear in (A, A v cos phi, A v sin phi), which gives exact
    starting values; Levenberg-Marquardt then refines the nonlinear form.
    ``v`` is reported non-negative with the sign folded into ``phi``.
    """
    theta, y = _as_xy(scan)
    if theta.size < 8 or np.ptp(theta) < 90:
        raise InsufficientData("need at least 8 points spanning 90 degrees of HWP angle")
    arg = np.deg2rad(4 * theta)
    design = np.column_stack([np.ones_like(theta), np.sin(arg), np.cos(arg)])
    (a0, b, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    if a0 <= 0:
        raise NonConvergence("scan has non-positive mean count")
    v0 = np.hypot(b, c) / a0
    phi0 = np.arctan2(c, b)

    def resid(p):
        return visibility_model(theta, *p) - y

    def jac(p):
        a, v, phi = p
        sin, cos = np.sin(arg + phi), np.cos(arg + phi)
        return np.column_stack([1 + v * sin, a * sin, a * v * cos])

    res = least_squares(resid, [a0, v0, phi0], jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    a, v, phi = _polish(resid, jac, res.x)
    if v < 0:
        v, phi = -v, phi + np.pi
    phi = float((phi + np.pi) % (2 * np.pi) - np.pi)
    rms = float(np.sqrt(np.mean(resid([a, v, phi]) ** 2)))
    return FitResult(
        {"amplitude": float(a), "visibility": float(v), "phase_offset": phi},
        rms,
        bool(res.success),
        int(res.nfev),
    )


def gaussian_model(t, peak, center, fwhm):
    return peak * np.exp(-FOUR_LN2 * (np.asarray(t) - center) ** 2 / fwhm**2)


def _half_max_width(t: np.ndarray, y: np.ndarray, i_max: int) -> float | None:
    half = y[i_max] / 2
    left = right = None
    for i in range(i_max, 0, -1):
        if y[i - 1] <= half < y[i] or y[i - 1] < half <= y[i]:
            left = t[i - 1] + (half - y[i - 1]) * (t[i] - t[i - 1]) / (y[i] - y[i - 1])
            break
    for i in range(i_max, len(t) - 1):
        if y[i + 1] <= half < y[i] or y[i + 1] < half <= y[i]:
            right = t[i] + (half - y[i]) * (t[i + 1] - t[i]) / (y[i + 1] - y[i])
            break
    if left is not None and right is not None:
        return right - left
    if left is not None:
        return 2 * (t[i_max] - left)
    if right is not None:
        return 2 * (right - t[i_max])
    return None


def fit_gaussian_scan(scan) -> FitResult:
    """Fit value(T) = peak exp(-4 ln2 (T - center)^2 / fwhm^2).

    Times are centered on their mean before fitting so the result is
    translation-equivariant. A scan whose maximum sits on its first or last
    point does not bracket the peak and is reported with ``converged=False``.
    """
    t, y = _as_xy(scan)
    if t.size < 5:
        raise InsufficientData("need at least 5 points")
    order = np.argsort(t)
    t, y = t[order], y[order]
    shift = t.mean()
    tc = t - shift
    i_max = int(np.argmax(y))
    messages = []
    bracketed = 0 < i_max < t.size - 1
    if not bracketed:
        messages.append("peak not bracketed by the data")
    width = _half_max_width(tc, y, i_max) or np.ptp(tc) / 2
    p0 = [y[i_max], tc[i_max], max(width, 1e-12)]

    def resid(p):
        return gaussian_model(tc, *p) - y

    # analytic Jacobian: finite differences break down when a start value is ~0
    def jac(p):
        peak, center, fwhm = p
        g = gaussian_model(tc, 1.0, center, fwhm)
        d = tc - center
        return np.column_stack([g, peak * g * 2 * FOUR_LN2 * d / fwhm**2, peak * g * 2 * FOUR_LN2 * d**2 / fwhm**3])

    try:
        res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    except (ValueError, FloatingPointError) as exc:
        raise NonConvergence(f"Gaussian fit failed: {exc}") from exc
    params = _polish(resid, jac, res.x) if np.all(np.isfinite(res.x)) else res.x
    peak, center, fwhm = params
    ok = bool(res.success and bracketed and np.all(np.isfinite(params)))
    if ok and not tc[0] <= center <= tc[-1]:
        ok = False
        messages.append("fitted center outside the scanned range")
    return FitResult(
        {"peak": float(peak), "center": float(center + shift), "fwhm": float(abs(fwhm))},
        float(np.sqrt(np.mean(resid(params) ** 2))),
        ok,
        int(res.nfev),
        messages,
    )


def _check_chi(chi) -> np.ndarray:
    chi = as_matrix(chi)
    if chi.shape != (4, 4):
        raise InvalidChi(f"chi must be 4x4, got {chi.shape}")
    if np.max(np.abs(chi - dag(chi))) > 1e-8:
        raise InvalidChi("chi is not Hermitian")
    tr = np.trace(chi).real
    if tr <= 0:
        raise InvalidChi("chi has non-positive trace")
    if eig_hermitian(chi, tol=1e-8)[0][-1] < -1e-6 * tr:
        raise InvalidChi("chi is not positive semidefinite")
    return chi


def process_fidelity(chi, target) -> float:
    a = _check_chi(chi)
    b = _check_chi(target)
    a = a / np.trace(a).real
    b = b / np.trace(b).real
    f = uhlmann_fidelity(0.5 * (a + dag(a)), 0.5 * (b + dag(b)), tol=1e-8)
    return min(max(f, 0.0), 1.0)


def channel_report(chi, target: ChannelSpec | None = None) -> dict:
    chi = as_matrix(chi)
    v = validate_channel(chi)
    weights = kraus_weights(chi)
    report = {
        "tp_error": v.tp_error,
        "min_eig": v.min_eig,
        "hermiticity_error": v.hermiticity_error,
        "valid": v.valid,
        "kraus_count": len(kraus_from_chi(chi)),
        "dominant_kraus_weights": [float(w) for w in weights],
        "process_fidelity": None,
    }
    if target is not None:
        report["process_fidelity"] = process_fidelity(chi, make_channel(target))
    return report
