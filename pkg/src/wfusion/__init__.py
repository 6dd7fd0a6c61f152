"""Exact simulation of W-state fusion with a linear-optical partial-swap gate."""

from .amplitude import SQRT2, Amplitude
from .fock import ModeLabel, PhotonicState, Pol
from .fusion import Outcome, OutcomeDistribution, build_w, fuse2_analytic, fuse3_analytic, fuse_chain, fuse_dense
from .optics import HWP, PBS, Circuit, herald, run
from .planner import expected_cost, monte_carlo, sample_outcomes
from .protocols import compare_protocols, reference_probs
from .pswap import build_pswap_circuit, n_pswap, postselected_map, verify_gate

__all__ = [
    "SQRT2", "Amplitude", "ModeLabel", "PhotonicState", "Pol", "Outcome", "OutcomeDistribution",
    "build_w", "fuse2_analytic", "fuse3_analytic", "fuse_chain", "fuse_dense", "HWP", "PBS", "Circuit",
    "herald", "run", "expected_cost", "monte_carlo", "sample_outcomes", "compare_protocols",
    "reference_probs", "build_pswap_circuit", "n_pswap", "postselected_map", "verify_gate",
]
