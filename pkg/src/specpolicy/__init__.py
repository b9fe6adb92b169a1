"""Loss-adaptive spectrogram augmentation engine.

Augmentation kernels (time masking, frequency masking, time warping), a
validation-loss-driven selection and strength policy, a closed-loop
surrogate simulation harness, and binary/text file formats with a CLI.
"""

from .betainc import BetaParams, log_beta, reg_inc_beta
from .errors import SpecPolicyError
from .features import (
    N_STRATEGIES,
    SampleSeed,
    Strategy,
    derive_sample_seed,
    matrix_from_values,
    validate_matrix,
)
from .kernels import (
    AugmentationPlan,
    MaskDraw,
    PlanStage,
    RealizedParams,
    WarpDraw,
    apply_plan,
    freq_mask,
    realize_draws,
    time_mask,
    time_warp,
)
from .policy import (
    AugmentConfig,
    LossReport,
    PolicyState,
    Variant,
    advance_epoch,
    compute_lambda,
    compute_probabilities,
    compute_relative_loss,
    fresh_state,
    make_plan,
    map_parameters,
    select_strategies,
)

__all__ = [
    "AugmentConfig",
    "AugmentationPlan",
    "BetaParams",
    "LossReport",
    "MaskDraw",
    "N_STRATEGIES",
    "PlanStage",
    "PolicyState",
    "RealizedParams",
    "SampleSeed",
    "SpecPolicyError",
    "Strategy",
    "Variant",
    "WarpDraw",
    "advance_epoch",
    "apply_plan",
    "compute_lambda",
    "compute_probabilities",
    "compute_relative_loss",
    "derive_sample_seed",
    "freq_mask",
    "fresh_state",
    "log_beta",
    "make_plan",
    "map_parameters",
    "matrix_from_values",
    "realize_draws",
    "reg_inc_beta",
    "select_strategies",
    "time_mask",
    "time_warp",
    "validate_matrix",
]

__version__ = "0.1.0"
