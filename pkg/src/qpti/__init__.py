"""Quantum-phase-transition interferometry: a numerical laboratory.

Simulates Heisenberg-limited phase estimation built from adiabatic
sweeps through a quantum phase transition, for two worked models: a
two-mode Bose-Josephson junction in the collective-spin (Dicke) basis
and a power-law transverse-field Ising chain. The pipeline is always
prepare -> split -> imprint -> recombine -> read out, with precision
extracted by error propagation and fringe fitting.
"""

from .schedules import (
    PiecewiseLinearSchedule,
    constant_schedule,
    bj_splitting_schedule,
    bj_recombination_schedule,
    ising_splitting_schedules,
    ising_recombination_schedules,
)
from .collective_spin import (
    CollectiveOperator,
    angular_momentum,
    jz_squared,
    build_bj_hamiltonian,
    coherent_state_x,
    cat_state,
    apply_phase_imprint,
    apply_rotation_pulse,
    jz_moments,
    parity_expectation,
)
from .ising import (
    DiagonalOperator,
    FlipSumOperator,
    coupling_diagonal,
    mz_diagonal,
    coherent_x_state,
    ghz_state,
    apply_phase_mz,
    mz_moments,
    global_flip_parity,
    MAX_SPINS,
)
from .propagator import (
    EvolutionSettings,
    LinearCombinationGenerator,
    IntegrationError,
    GroundStateError,
    evolve,
    ground_state,
    fidelity,
)
from .protocol import (
    BjProtocolConfig,
    IsingProtocolConfig,
    ProtocolOutcome,
    RoundtripResult,
    BjPhaseRunner,
    IsingPhaseRunner,
    run_bj,
    run_ising,
    splitting_state,
    roundtrip,
    default_settings,
)
from .analysis import (
    PhaseScanRecord,
    SinusoidFit,
    ScalingRow,
    ScalingFit,
    ScalingStudyResult,
    OptimizationResult,
    FitError,
    OptimizationError,
    ScalingError,
    phase_uncertainty,
    scan_phase,
    fit_sinusoid,
    min_uncertainty,
    optimize_recombination,
    scaling_study,
    fit_power_law,
    stretch_estimate,
)
from .manifest import RunManifest, ManifestError, parse_manifest, manifest_from_dict, emit_manifest

__version__ = "0.1.0"

__all__ = [
    "PiecewiseLinearSchedule",
    "constant_schedule",
    "bj_splitting_schedule",
    "bj_recombination_schedule",
    "ising_splitting_schedules",
    "ising_recombination_schedules",
    "CollectiveOperator",
    "angular_momentum",
    "jz_squared",
    "build_bj_hamiltonian",
    "coherent_state_x",
    "cat_state",
    "apply_phase_imprint",
    "apply_rotation_pulse",
    "jz_moments",
    "parity_expectation",
    "DiagonalOperator",
    "FlipSumOperator",
    "coupling_diagonal",
    "mz_diagonal",
    "coherent_x_state",
    "ghz_state",
    "apply_phase_mz",
    "mz_moments",
    "global_flip_parity",
    "MAX_SPINS",
    "EvolutionSettings",
    "LinearCombinationGenerator",
    "IntegrationError",
    "GroundStateError",
    "evolve",
    "ground_state",
    "fidelity",
    "BjProtocolConfig",
    "IsingProtocolConfig",
    "ProtocolOutcome",
    "RoundtripResult",
    "BjPhaseRunner",
    "IsingPhaseRunner",
    "run_bj",
    "run_ising",
    "splitting_state",
    "roundtrip",
    "default_settings",
    "PhaseScanRecord",
    "SinusoidFit",
    "ScalingRow",
    "ScalingFit",
    "ScalingStudyResult",
    "OptimizationResult",
    "FitError",
    "OptimizationError",
    "ScalingError",
    "phase_uncertainty",
    "scan_phase",
    "fit_sinusoid",
    "min_uncertainty",
    "optimize_recombination",
    "scaling_study",
    "fit_power_law",
    "stretch_estimate",
    "RunManifest",
    "ManifestError",
    "parse_manifest",
    "manifest_from_dict",
    "emit_manifest",
    "__version__",
]
