"""Compile, simulate and characterize generalized measurements on cascaded interferometer circuits."""

from .compiler import CircuitProgram, CompileError, MziSetting, check_structure, compile_povm, mzi_matrix
from .povm import (Povm, StateSet, computational_basis, mub_probe_states_d4, random_rank1_povm,
                   sic_povm_d4, sic_states_d4, split_rank1, validate_povm)
from .sdp import SdpProblem, SdpSolution, solve
from .simulator import (CountTable, PhaseError, apply_correction, calibrate, calibrate_loop,
                        sample_counts, simulate, simulate_batch)
from .tomography import measurement_fidelity, mle_reconstruct

__version__ = "0.1.0"

__all__ = [
    "CircuitProgram", "CompileError", "CountTable", "MziSetting", "PhaseError", "Povm",
    "SdpProblem", "SdpSolution", "StateSet", "apply_correction", "calibrate", "calibrate_loop",
    "check_structure", "compile_povm", "computational_basis", "measurement_fidelity",
    "mle_reconstruct", "mub_probe_states_d4", "mzi_matrix", "random_rank1_povm", "sample_counts",
    "sic_povm_d4", "sic_states_d4", "simulate", "simulate_batch", "solve", "split_rank1",
    "validate_povm",
]
