"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on data or convergence errors.
Diagnostics go to stderr; machine-readable output goes to files or stdout.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import channel_report, fit_gaussian_scan, fit_visibility, gaussian_model, visibility_model
from .channels import ChannelSpec, make_channel
from .errors import TomographyError
from .measurement import (
    DETECTOR_PRESETS,
    DelayScanModel,
    DetectorModel,
    PROCESS_INPUTS,
    simulate_counts,
    simulate_delay_scan,
    simulate_interference_scan,
    simulate_process_counts,
    state_tomography_plan,
)
from .reproduce import FIGURES, reproduce
from .states import bell_phi_plus, concurrence, ket_to_dm, maximally_mixed, product_ket, purity, rho_nu
from .tomography import MleConfig, ProcessConfig, linear_inversion_state, mle_fit, process_tomography


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def parse_state(spec: str) -> np.ndarray:
    """``rho-nu:0.95``, ``bell``, ``ket:HV``, ``mixed:2`` or ``file:rho.json``."""
    kind, _, arg = spec.partition(":")
    if kind == "rho-nu":
        return rho_nu(float(arg))
    if kind == "bell":
        return ket_to_dm(bell_phi_plus())
    if kind == "ket":
        return ket_to_dm(product_ket(arg))
    if kind == "mixed":
        return maximally_mixed(2 ** int(arg or 1))
    if kind == "file":
        return io.matrix_from_dict(io.read_json(arg), "density")
    raise UsageError(f"unrecognized state spec {spec!r}")


def parse_channel(spec: str) -> ChannelSpec:
    """``null``, ``bitflip:S``, ``phaseflip:S``, ``pauli:P,Q,R``, ``hadamard:S`` or ``file:chi.json``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "null":
            return ChannelSpec("null")
        if kind == "bitflip":
            return ChannelSpec("bitflip", s=float(arg))
        if kind == "phaseflip":
            return ChannelSpec("bitflip", s=float(arg), axis="z")
        if kind == "pauli":
            p, q, r = (float(x) for x in arg.split(","))
            return ChannelSpec("pauli", p=p, q=q, r=r)
        if kind == "hadamard":
            return ChannelSpec("hadamard_imperfect", s=float(arg))
        if kind == "file":
            return ChannelSpec("custom_chi", chi=io.matrix_from_dict(io.read_json(arg), "chi"))
    except ValueError as exc:
        raise UsageError(f"bad channel parameters in {spec!r}: {exc}") from exc
    raise UsageError(f"unrecognized channel spec {spec!r}")


def _detector(args) -> DetectorModel:
    if args.detector not in DETECTOR_PRESETS:
        raise UsageError(f"unknown detector preset {args.detector!r}; choose from {sorted(DETECTOR_PRESETS)}")
    base = DETECTOR_PRESETS[args.detector].to_dict()
    for name in ("efficiency", "dark_rate", "window", "integration_time"):
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    if getattr(args, "no_accidentals", False):
        base["accidentals"] = False
    return DetectorModel(**base)


def _emit(obj, out) -> None:
    if out:
        io.write_json(out, obj)
    else:
        sys.stdout.write(io.dumps(obj))


def _seed_for(args):
    if args.noiseless:
        return None
    if args.seed is None:
        raise UsageError("--seed is required unless --noiseless is given")
    return args.seed


def cmd_simulate_state(args) -> int:
    rho = parse_state(args.state)
    n_qubits = 1 if rho.shape[0] == 2 else 2
    det = _detector(args)
    seed = _seed_for(args)
    recs = simulate_counts(rho, state_tomography_plan(n_qubits), det, args.counts, seed, args.noiseless)
    _emit(io.counts_to_dict(recs, f"state-{n_qubits}q", det, seed, args.counts), args.out)
    return 0


def cmd_simulate_process(args) -> int:
    chi = make_channel(parse_channel(args.channel))
    det = _detector(args)
    seed = _seed_for(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for label, recs in simulate_process_counts(chi, det, args.counts, seed, args.noiseless).items():
        doc = io.counts_to_dict(recs, "process-1q", det, seed, args.counts, input_label=label)
        io.write_json(out / f"{label.lower()}.json", doc)
    return 0


def cmd_simulate_scan(args) -> int:
    det = _detector(args)
    if args.kind == "interference":
        seed = _seed_for(args)
        thetas = np.arange(args.start, args.stop + 0.5 * args.step, args.step)
        rows = simulate_interference_scan(args.nu, thetas, args.counts, det, seed, args.branch, args.noiseless)
        io.write_scan_csv(args.out, rows)
    else:
        model = DelayScanModel(args.nu_max, args.t0, args.fwhm)
        ts = np.arange(args.start, args.stop + 0.5 * args.step, args.step)
        rows = [(t, concurrence(rho), model.nu(t)) for t, rho in simulate_delay_scan(model, ts)]
        io.write_scan_csv(args.out, rows, ("x", "value", "fit"))
    return 0


def _load_counts(path):
    return io.counts_from_dict(io.read_json(path))


def cmd_reconstruct_state(args) -> int:
    recs, meta = _load_counts(args.input)
    n_qubits = io.n_qubits_for_plan(meta["plan"])
    if args.method == "linear":
        rho = linear_inversion_state(recs, n_qubits, meta["pairs_per_setting"])
    else:
        fit = mle_fit(recs, n_qubits, MleConfig(max_iterations=args.max_iterations), meta["pairs_per_setting"])
        rho = fit.rho
        if not fit.converged:
            print(f"warning: MLE did not converge ({fit.flags})", file=sys.stderr)
    msg = f"purity={purity(rho):.6f}"
    if n_qubits == 2:
        msg += f" concurrence={concurrence(rho):.6f}"
    print(msg, file=sys.stderr)
    _emit(io.matrix_to_dict(rho, "density"), args.out)
    return 0


def cmd_reconstruct_process(args) -> int:
    paths = {"H": args.in_h, "V": args.in_v, "D": args.in_d, "L": args.in_l}
    counts = {}
    for label in PROCESS_INPUTS:
        recs, meta = _load_counts(paths[label])
        if meta["input"] not in (None, label):
            raise TomographyError(f"{paths[label]} holds input {meta['input']!r}, expected {label!r}")
        counts[label] = recs
    result = process_tomography(counts, ProcessConfig(psd_project=args.psd_project))
    _emit(io.matrix_to_dict(result.chi, "chi"), args.out)
    if args.report:
        report = channel_report(result.chi)
        report["diagnostics"] = result.diagnostics
        io.write_json(args.report, report)
    d = result.diagnostics
    print(f"tp_error={d['tp_error']:.3e} min_eig={d['min_eig']:.3e}", file=sys.stderr)
    return 0


def cmd_analyze_scan(args) -> int:
    _, rows = io.read_scan_csv(args.input)
    if args.kind == "visibility":
        fit = fit_visibility(rows)
        curve = [visibility_model(r[0], *fit.parameters.values()) for r in rows]
    else:
        fit = fit_gaussian_scan(rows)
        curve = [gaussian_model(r[0], fit["peak"], fit["center"], fit["fwhm"]) for r in rows]
    if args.residuals:
        io.write_scan_csv(args.residuals, [(r[0], r[1], c) for r, c in zip(rows, curve)], ("x", "value", "fit"))
    _emit(fit.to_dict(), args.out)
    if not fit.converged:
        print("fit did not converge: " + "; ".join(fit.messages), file=sys.stderr)
        return 2
    return 0


def cmd_channel_zoo(args) -> int:
    specs = {
        "bitflip": ChannelSpec("bitflip", s=args.s),
        "pauli": ChannelSpec("pauli", p=args.p, q=args.q, r=args.r),
        "hadamard_imperfect": ChannelSpec("hadamard_imperfect", s=args.s),
    }
    _emit({name: io.matrix_to_dict(make_channel(spec), "chi") for name, spec in specs.items()}, args.out)
    return 0


def cmd_report(args) -> int:
    chi = io.matrix_from_dict(io.read_json(args.chi), "chi")
    target = parse_channel(args.target) if args.target else None
    _emit(channel_report(chi, target), args.out)
    return 0


def cmd_reproduce(args) -> int:
    summary = reproduce(args.figure, args.out_dir, args.seed)
    for check in summary["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        print(f"[{status}] {args.figure}: {check['name']} = {check['value']:.6g}", file=sys.stderr)
    return 0 if summary["all_pass"] else 2


def _add_detector_args(p) -> None:
    p.add_argument("--detector", default="ideal", help="detector preset: ideal (default) or paper-2002")
    p.add_argument("--efficiency", type=float)
    p.add_argument("--dark-rate", type=float)
    p.add_argument("--window", type=float)
    p.add_argument("--integration-time", type=float)
    p.add_argument("--no-accidentals", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--noiseless", action="store_true", help="write mean counts instead of Poisson draws")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polartomo", description="Simulate and reconstruct polarization-qubit tomography experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate-state", help="simulate state-tomography counts")
    p.add_argument("--state", required=True, help="rho-nu:NU | bell | ket:HV | mixed:N | file:PATH")
    p.add_argument("--counts", type=int, default=10_000, help="pairs per setting")
    p.add_argument("--out")
    _add_detector_args(p)
    p.set_defaults(func=cmd_simulate_state)

    p = sub.add_parser("simulate-process", help="simulate process-tomography counts (four files)")
    p.add_argument("--channel", required=True, help="null | bitflip:S | phaseflip:S | pauli:P,Q,R | hadamard:S | file:PATH")
    p.add_argument("--counts", type=int, default=100_000)
    p.add_argument("--out-dir", required=True)
    _add_detector_args(p)
    p.set_defaults(func=cmd_simulate_process)

    p = sub.add_parser("simulate-scan", help="interference or delay scan CSV")
    p.add_argument("--kind", choices=("interference", "delay"), default="interference")
    p.add_argument("--nu", type=float, default=0.92)
    p.add_argument("--branch", type=int, choices=(1, -1), default=1)
    p.add_argument("--nu-max", type=float, default=0.95)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--fwhm", type=float, default=237.0)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=180.0)
    p.add_argument("--step", type=float, default=7.5)
    p.add_argument("--counts", type=int, default=10_000)
    p.add_argument("--out", required=True)
    _add_detector_args(p)
    p.set_defaults(func=cmd_simulate_scan)

    p = sub.add_parser("reconstruct-state", help="density matrix from a counts file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--method", choices=("mle", "linear"), default="mle")
    p.add_argument("--max-iterations", type=int, default=5000)
    p.set_defaults(func=cmd_reconstruct_state)

    p = sub.add_parser("reconstruct-process", help="chi matrix from four counts files")
    for label in "hvdl":
        p.add_argument(f"--in-{label}", required=True)
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--psd-project", action="store_true")
    p.set_defaults(func=cmd_reconstruct_process)

    p = sub.add_parser("analyze-scan", help="fit a scan CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--kind", choices=("visibility", "gaussian"), required=True)
    p.add_argument("--out")
    p.add_argument("--residuals")
    p.set_defaults(func=cmd_analyze_scan)

    p = sub.add_parser("channel-zoo", help="print model chi matrices")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_channel_zoo)

    p = sub.add_parser("report", help="diagnostics for a chi file")
    p.add_argument("--chi", required=True)
    p.add_argument("--target")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("reproduce", help="regenerate figure data")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_reproduce)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (TomographyError, OSError) as exc:
        stage = getattr(args, "command", "?") if "args" in locals() else "?"
        print(f"error in {stage}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
