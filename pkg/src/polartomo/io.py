"""JSON and CSV file formats.

Matrix files::

    {"kind": "density" | "chi", "dim": n, "re": [[...]], "im": [[...]],
     "basis": "HV" | "pauli-IXYZ"}

Counts files::

    {"plan": "state-1q" | "state-2q" | "process-1q", "detector": {...},
     "records": [{"setting": ["H", "V"], "count": n, "expected": x}],
     "seed": s, "pairs_per_setting": N}

Process-tomography count files add ``"input": "H" | "V" | "D" | "L"``.
Scan CSVs carry a header row and columns ``x, count, expected`` (raw scans)
or ``x, value, fit`` (fitted scans).
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import TomographyError
from .measurement import CountRecord, DetectorModel, MeasurementSetting

PLANS = ("state-1q", "state-2q", "process-1q")
_BASIS_FOR_KIND = {"density": "HV", "chi": "pauli-IXYZ"}


class FormatError(TomographyError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def matrix_to_dict(m, kind: str) -> dict:
    if kind not in _BASIS_FOR_KIND:
        raise FormatError(f"unknown matrix kind {kind!r}")
    m = np.asarray(m, dtype=complex)
    return {
        "kind": kind,
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
        "basis": _BASIS_FOR_KIND[kind],
    }


def matrix_from_dict(d: dict, kind: str | None = None) -> np.ndarray:
    try:
        k = d["kind"]
        dim = int(d["dim"])
        m = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
        basis = d["basis"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed matrix document: {exc}") from exc
    if kind is not None and k != kind:
        raise FormatError(f"expected a {kind!r} matrix, got {k!r}")
    if k not in _BASIS_FOR_KIND or basis != _BASIS_FOR_KIND[k]:
        raise FormatError(f"kind {k!r} requires basis {_BASIS_FOR_KIND.get(k)!r}, got {basis!r}")
    if m.shape != (dim, dim):
        raise FormatError(f"matrix shape {m.shape} does not match dim {dim}")
    return m


def counts_to_dict(
    records: list[CountRecord],
    plan: str,
    detector: DetectorModel,
    seed: int | None,
    pairs_per_setting: int,
    input_label: str | None = None,
) -> dict:
    if plan not in PLANS:
        raise FormatError(f"unknown plan {plan!r}")
    doc = {
        "plan": plan,
        "detector": detector.to_dict(),
        "records": [
            {"setting": list(r.setting.label), "count": r.count, "expected": float(r.expected)} for r in records
        ],
        "seed": seed,
        "pairs_per_setting": pairs_per_setting,
    }
    if input_label is not None:
        doc["input"] = input_label
    return doc


def counts_from_dict(d: dict) -> tuple[list[CountRecord], dict]:
    """Records plus the metadata (plan, detector, seed, pairs, input)."""
    try:
        plan = d["plan"]
        recs = [
            CountRecord(MeasurementSetting.from_labels(r["setting"]), r["count"], float(r["expected"]))
            for r in d["records"]
        ]
        meta = {
            "plan": plan,
            "detector": DetectorModel.from_dict(d["detector"]),
            "seed": d.get("seed"),
            "pairs_per_setting": d.get("pairs_per_setting"),
            "input": d.get("input"),
        }
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed counts document: {exc}") from exc
    if plan not in PLANS:
        raise FormatError(f"unknown plan {plan!r}")
    return recs, meta


def n_qubits_for_plan(plan: str) -> int:
    return 2 if plan == "state-2q" else 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_scan_csv(path, rows, columns=("x", "count", "expected")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_scan_csv(path) -> tuple[list[str], list[tuple[float, ...]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        try:
            rows = [tuple(float(v) for v in row) for row in reader if row]
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric value ({exc})") from exc
    return header, rows
