"""Low-rank quantum-circuit simulation with CP-format states."""

from .state import (CPState, basis_state, fidelity, from_factors,
                    inner_product, marked_probability, norm, normalize,
                    random_rank1_state, uniform_state, zero_state)
from .gates import (Controlled, KronSum, MultiControlled, OneQubit, Swap,
                    apply_gate, apply_layer)
from .circuits import (Circuit, WalkSpec, build_grover, build_inverse_qft,
                       build_phase_estimation_register, build_qft, build_walk)
from .reduction import (AlsConfig, AlsDegenerateError, ReductionReport,
                        cp_als, direct_eliminate, reduce)
from .driver import (RunConfig, RunResult, run_grover, run_phase_estimation,
                     run_qft, run_walk, simulate)

__all__ = [
    "CPState", "basis_state", "fidelity", "from_factors", "inner_product",
    "marked_probability", "norm", "normalize", "random_rank1_state",
    "uniform_state", "zero_state",
    "Controlled", "KronSum", "MultiControlled", "OneQubit", "Swap",
    "apply_gate", "apply_layer",
    "Circuit", "WalkSpec", "build_grover", "build_inverse_qft",
    "build_phase_estimation_register", "build_qft", "build_walk",
    "AlsConfig", "AlsDegenerateError", "ReductionReport", "cp_als",
    "direct_eliminate", "reduce",
    "RunConfig", "RunResult", "run_grover", "run_phase_estimation",
    "run_qft", "run_walk", "simulate",
]

__version__ = "0.1.0"
