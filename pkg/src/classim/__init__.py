"""Classical simulability of quantum measurement sets.

Decide, bound and certify whether finite sets of POVMs admit classical
(superposition-free) measurement models: LP model search over device
ensembles, witness-based upper bounds with exact qubit formulas and SDP
relaxations, closed-form noise/loss thresholds, and the non-disturbance and
joint-measurability consequences of classical models.
"""

from .errors import (
    ClassimError,
    SolverFailure,
    StrategyOverflowError,
    ValidationError,
)
from .linalg import (
    HermitianBasis,
    eig_hermitian,
    haar_unitary,
    max_component_statistic,
    sqrt_psd,
)
from .measurements import (
    MeasurementSet,
    Povm,
    StateEnsemble,
    apply_loss,
    basis_measurement_set,
    depolarize,
    discrimination_ensemble,
    extend_direct_sum,
    load_measurement_set,
    measurement_set_from_json,
    measurement_set_to_json,
    mub_set,
    mub_unitaries,
    qubit_sic,
    save_measurement_set,
    sic_five_tetrahedra,
    trine,
)
from .models import (
    ClassicalModel,
    ProjectiveCommutingModel,
    decompose_stochastic,
    default_ensemble,
    eliminate_postprocessing,
    load_model,
    model_from_json,
    model_to_json,
    pair_half_noise_model,
    pair_target_set,
    project_extended_model,
    reconstruction_residual,
    save_model,
    search_classical_model,
)
from .nondisturbance import (
    ParentPovm,
    SequentialScenario,
    extended_instrument_residual,
    jm_parent,
    jm_visibility,
    luders_residual,
    scenario_from_model,
)
from .thresholds import (
    LossNoisePoint,
    alternating_binomial_sum,
    classicality_threshold,
    critical_efficiency,
    harmonic_number,
    loss_noise_curve,
)
from .witness import (
    WitnessSpec,
    classical_bound,
    critical_visibility,
    qubit_classical_bound,
    score_operators,
    state_discrimination_spec,
    strategy_count,
    strategy_from_index,
    strategy_sdp_bound,
    witness_spec_from_json,
    witness_value,
)

__version__ = "0.1.0"
