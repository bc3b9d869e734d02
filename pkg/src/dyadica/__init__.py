"""Dyadic Haar multipliers, weight characteristics and two-weight norm estimates."""
from .conditions import (
    CarlesonSequence,
    ConditionReport,
    Constant,
    TestingConstants,
    Triple,
    carleson_intensity,
    condition_c1,
    condition_c2_sequence,
    condition_c3_sequence,
    condition_c4,
    condition_report,
    lambda_sequence,
    sawyer_testing,
)
from .core import (
    MAX_DEPTH,
    DyadicInterval,
    Grid,
    GridError,
    HaarExpansion,
    StepFunction,
    average,
    build_grid,
    delta,
    haar_transform,
    inverse_haar,
)
from .normest import (
    NormEstimate,
    bilinear_decomposition,
    bilinear_pairing,
    exhaustive_sup_sigma,
    fixed_sigma_norm,
    khintchine_expectation,
    matrix_free_norm,
    positive_bilinear_form,
    sup_sigma_norm,
    weighted_operator_norm,
)
from .operators import (
    OperatorMatrix,
    OperatorSpec,
    SignPattern,
    apply_adjoint_t_haar,
    apply_constant_haar,
    apply_positive,
    apply_t_haar,
    assemble_matrix,
    haar_split,
    maximal,
    weighted_haar,
)
from .weights import (
    Weight,
    WeightCharacteristics,
    ap_constant,
    ap_packing,
    buckley_packing,
    c2t_constant,
    cascade_weight,
    dual_ap_packing,
    packing_constant,
    power_weight,
    rh1_constant,
    rhp_constant,
    rhp_packing,
)

__version__ = "0.1.0"
