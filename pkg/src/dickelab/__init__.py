"""Exact simulation and analysis of the four-photon two-excitation Dicke state.

The package covers the full desk-scale workflow: exact state algebra,
noise-model calibration, simulated polarization tomography with Poissonian
counting statistics, maximum-likelihood reconstruction, entanglement
witnesses, and the state's communication-protocol applications.
"""

from .pipeline import ReproductionSummary, noisy_g3_state, run_reproduction
from .protocols import (
    LossReport,
    MsfReport,
    OdtOutcome,
    ProjectionReport,
    TelecloningReport,
    bloch_direction,
    classify_projection,
    loss_analysis,
    maximal_singlet_fraction,
    msf_optimization_oracle,
    odt_projection,
    state_overlap,
    telecloning_fidelities,
    teleportation_fidelity,
)
from .simulate import (
    CountRecord,
    NoiseModel,
    apply_noise,
    calibrated_noise,
    efficiency_correct,
    enumerate_settings,
    outcome_probabilities,
    sample_counts,
    simulate_run,
    split_seed,
)
from .states import (
    CapacityError,
    DensityMatrix,
    PureState,
    basis_direction,
    bell_state,
    collective_spin_operator,
    collective_spin_squared,
    dicke_state,
    expectation,
    fidelity_pure,
    g_state,
    ghz_state,
    maximally_mixed,
    partial_trace,
    pauli_operator,
    project_qubit,
    project_qubit_density,
    w_bar_state,
    w_state,
)
from .tomography import (
    CorrelationTensor,
    MleReport,
    clipped_linear_inversion,
    correlation_tensor,
    linear_inversion,
    log_likelihood,
    mle_fit,
    mle_fit_fixed_point,
)
from .witnesses import (
    DICKE_FIDELITY_ALPHA,
    GHZ3_FIDELITY_ALPHA,
    JZ_SQUARED_SYMMETRIC_MIN,
    SPIN_WITNESS_BOUND_3,
    SPIN_WITNESS_BOUND_4,
    LocalFilter,
    WitnessVerdict,
    bootstrap_errors,
    collective_spin_witness,
    fidelity_witness,
    filtered_ghz_witness,
    jz_squared_check,
)

__version__ = "0.1.0"
