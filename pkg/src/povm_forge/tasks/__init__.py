"""Benchmark tasks: state discrimination, two-copy estimation, randomness certification."""

from .discrimination import SolverError, UnambiguityError, mesd_optimize, usd_optimize
from .eat import EatParams, eat_rate, preset_params
from .estimation import average_fidelity, massar_popescu_povm, two_copy_optimal_povm, worst_fidelity
from .randomness import (certify, gauss_radau, max_psuc_n_outcomes, min_entropy, shannon_bound,
                         sic_witness)

__all__ = [
    "EatParams", "SolverError", "UnambiguityError", "average_fidelity", "certify", "eat_rate",
    "gauss_radau", "massar_popescu_povm", "max_psuc_n_outcomes", "mesd_optimize", "min_entropy",
    "preset_params", "shannon_bound", "sic_witness", "two_copy_optimal_povm", "usd_optimize",
    "worst_fidelity",
]
