"""Operational entanglement certification toolkit.

Small-dimension density-operator algebra, CHSH evaluation and maximization,
classical hidden-variable embeddings with exact moments, blocked-sampling
protocol simulations, and the homogeneity diagnostics that decide whether a
sample can be trusted by a standard significance test.
"""

from .hilbert import (
    DensityOperator,
    HermitianOperator,
    TensorStructure,
    conditional_covariance,
    covariance_bilinear,
    density,
    eigen_hermitian,
    expectation,
    lift_local,
    partial_transpose,
    position_operator,
    pure_state_density,
    tensor_product,
    variance,
)
from .states import (
    ConvexSumState,
    ProductState,
    negativity,
    singlet,
    to_density,
    werner,
)
from .inequalities import (
    CHSHConfig,
    CHSHReport,
    MeasurementSetting,
    chsh_value,
    maximize_chsh,
    planar_spin_setting,
    torre_spin_covariance,
    total_spin_squared,
)
from .classical_models import (
    D1,
    D2,
    DicePairEnsemble,
    DiceType,
    FiniteLHVModel,
    analytic_moments,
    analytic_sems,
    dice_lhv_model,
    lhv_correlation,
    lhv_to_convex_sum,
    paper_dice_ensemble,
    sample,
)
from .protocol_sim import (
    ProtocolSpec,
    RunSample,
    SignalModel,
    SignificanceReport,
    Variant,
    default_loophole_model,
    design_effect,
    generate,
    test_h0,
    theoretical_mean,
    theoretical_sd,
)
from .stat_tests import (
    BinnedSample,
    HomogeneityReport,
    block_mean_scan,
    chi_square_homogeneity,
    ks_two_sample,
    simple_random_sample_audit,
)

__version__ = "0.1.0"
