"""Simulation and reconstruction for polarization-qubit tomography."""
from .channels import ChannelSpec, apply_chi, compose, kraus_from_chi, make_channel, validate_channel
from .measurement import DetectorModel, simulate_counts, simulate_process_counts, state_tomography_plan
from .states import concurrence, rho_nu, stokes_and_dop
from .tomography import mle_fit, process_tomography

__all__ = [
    "ChannelSpec",
    "DetectorModel",
    "apply_chi",
    "compose",
    "concurrence",
    "kraus_from_chi",
    "make_channel",
    "mle_fit",
    "process_tomography",
    "rho_nu",
    "simulate_counts",
    "simulate_process_counts",
    "state_tomography_plan",
    "stokes_and_dop",
    "validate_channel",
]
