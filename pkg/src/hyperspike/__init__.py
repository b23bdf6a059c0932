"""hyperspike: exact counting of multihomogeneous diagonal equations in boxes
and hyperbolic regions, cross-validated against circle-method density
predictions (singular series, singular integrals, assembled constants)."""

__version__ = "0.1.0"

from .forms import (  # noqa: F401
    Box,
    DiagonalForm,
    Variety,
    count_box_positive,
    count_box_primitive,
    count_box_primitive_direct,
    count_box_signed,
    height_count,
    height_count_bilinear,
    height_count_direct,
    product_value_multiset,
    theta,
)
from .hyperbola import (  # noqa: F401
    AsymptoticModel,
    BoxSumOracle,
    FamilyParams,
    asymptotic_fit,
    geometric_identity_check,
    ones_oracle,
    p_k_eval,
    spike_free_prediction,
    upsilon,
    upsilon_envelope,
    v_kj,
    v_kj_quadrature,
    weighted_mean_sum,
)
from .local import (  # noqa: F401
    DensityCache,
    DensityReport,
    SolubilityConfig,
    TruncationParams,
    assemble_density,
    assembled_integral,
    congruence_count,
    euler_factor,
    predicted_constant,
    singular_integral_positive,
    solubility_report,
    t_term,
    truncated_singular_series,
)
from .weyl import (  # noqa: F401
    ArcLabel,
    BoundParams,
    N0_RECORDS,
    OscillatoryTable,
    RationalApprox,
    box_error_term,
    classify_arc,
    complete_sum,
    major_arc_residual,
    moment_integral,
    moment_integral_quadrature,
    oscillatory_v,
    oscillatory_v_unit,
    weyl_bound_envelope,
    weyl_sum,
)
from .experiments import (  # noqa: F401
    ExperimentConfig,
    Report,
    parse_config,
    run_experiment,
    spencer_preset,
)
