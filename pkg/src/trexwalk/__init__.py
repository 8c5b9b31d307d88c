"""Weakly coupled pendant edges for quantum state transfer on graphs.

Continuous-time quantum walks, Feshbach-Schur effective Hamiltonians,
disorder-robust transfer on chains and classical/quantum hitting times.
"""

from .errors import TrexError
from .feshbach import EffectiveHamiltonian, ProjectionSplit, TrexAttachment, trex_effective
from .graphs import FamilyKind, WeightedGraph, generate, quotient
from .protocols import ResonantSetup, TransferReport, run_resonant, run_transfer
from .spectral import SpectralData, eigendecompose, fidelity, fidelity_trace

__version__ = "0.1.0"

__all__ = [
    "EffectiveHamiltonian",
    "FamilyKind",
    "ProjectionSplit",
    "ResonantSetup",
    "SpectralData",
    "TransferReport",
    "TrexAttachment",
    "TrexError",
    "WeightedGraph",
    "eigendecompose",
    "fidelity",
    "fidelity_trace",
    "generate",
    "quotient",
    "run_resonant",
    "run_transfer",
    "trex_effective",
]
