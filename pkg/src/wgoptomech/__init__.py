"""Vibrational spectrum of two optomechanically coupled atoms near a waveguide."""

__version__ = "0.1.0"

from .core import ModelParams, potential_full, potential_hermitian  # noqa: E402
from .fd_solver import Grid, build_hamiltonian, convergence_study, solve, solve_spectrum  # noqa: E402
from .fock_solver import FockConfig, fock_spectrum, oracle_equivalence  # noqa: E402
from .quasiclassics import bs_phase, phase_map, thresholds  # noqa: E402
from .analysis import classify_modes, detect_pt_breaking, sweep_eta  # noqa: E402

__all__ = [
    "ModelParams",
    "Grid",
    "potential_full",
    "potential_hermitian",
    "build_hamiltonian",
    "solve_spectrum",
    "solve",
    "convergence_study",
    "FockConfig",
    "fock_spectrum",
    "oracle_equivalence",
    "bs_phase",
    "phase_map",
    "thresholds",
    "classify_modes",
    "detect_pt_breaking",
    "sweep_eta",
]
