"""Steady-state simulator for a driven qubit-cavity-mechanics system.

The package builds the hybrid tripartite Hamiltonian and its effective
optomechanical reduction, assembles the corresponding Lindblad generators,
solves for steady states, and sweeps the cavity detuning to reproduce the
stationary photon- and phonon-number curves that quantify when the two
descriptions agree.
"""

__version__ = "0.1.0"

from .hilbert import (
    DimensionError,
    Operator,
    SubsystemDims,
    annihilation,
    commutator,
    embed,
    embed_reduced,
    expectation,
    partial_trace,
    pauli,
)
from .liouville import (
    CollapseChannel,
    Liouvillian,
    build_liouvillian,
    dissipator_superop,
    hamiltonian_superop,
    optomech_channels,
    tripartite_channels,
    unvec,
    vec,
)
from .model import (
    DispersiveError,
    DispersiveReport,
    PositivityError,
    SystemParams,
    build_h_eff,
    build_h_hyb,
    dispersive_report,
    displacement_shift,
    effective_coupling,
    qubit_field_operators,
    qubit_sqrt_exact,
    qubit_sqrt_expansion,
    stark_shift,
)
from .solver import (
    ConvergenceError,
    StepSizeError,
    SteadyStateError,
    evolve,
    residual,
    steady_state,
    trace_distance,
)
from .sweep import (
    ModelComparison,
    NoConvergenceError,
    PeakSet,
    SweepConfig,
    SweepRow,
    compare_models,
    convergence_check,
    detect_peaks,
    run_sweep,
    solve_observables,
)

__all__ = [
    "__version__",
    "DimensionError",
    "Operator",
    "SubsystemDims",
    "annihilation",
    "commutator",
    "embed",
    "embed_reduced",
    "expectation",
    "partial_trace",
    "pauli",
    "CollapseChannel",
    "Liouvillian",
    "build_liouvillian",
    "dissipator_superop",
    "hamiltonian_superop",
    "optomech_channels",
    "tripartite_channels",
    "unvec",
    "vec",
    "DispersiveError",
    "DispersiveReport",
    "PositivityError",
    "SystemParams",
    "build_h_eff",
    "build_h_hyb",
    "dispersive_report",
    "displacement_shift",
    "effective_coupling",
    "qubit_field_operators",
    "qubit_sqrt_exact",
    "qubit_sqrt_expansion",
    "stark_shift",
    "ConvergenceError",
    "StepSizeError",
    "SteadyStateError",
    "evolve",
    "residual",
    "steady_state",
    "trace_distance",
    "ModelComparison",
    "NoConvergenceError",
    "PeakSet",
    "SweepConfig",
    "SweepRow",
    "compare_models",
    "convergence_check",
    "detect_peaks",
    "run_sweep",
    "solve_observables",
]
