"""psychfit: instrument-validation toolkit.

CTT item screening, dichotomous IRT (Rasch/2PL/3PL by MML EM), model
comparison and goodness of fit, reliability, and external-validity
regression with assumption diagnostics.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .ctt import (
    ItemStats,
    SelectionReport,
    cronbach_alpha,
    discrimination_point_biserial,
    discrimination_upper_lower,
    item_difficulty,
    item_stats,
    likert_summary,
    select_items,
)
from .dimensionality import (
    FactorSolution,
    Q3Report,
    TetrachoricMatrix,
    q3,
    single_factor_fit,
    smooth_correlation,
    tetrachoric,
    tetrachoric_matrix,
)
from .fitstats import (
    FitReport,
    ItemFitRow,
    LrtResult,
    benjamini_hochberg,
    information_criteria,
    lrt,
    m2_family,
    s_chi2,
)
from .ingest import (
    BankItem,
    ItemBank,
    LikertTable,
    ResponseMatrix,
    ScoreTable,
    column_standardize,
    parse_response_csv,
    parse_score_csv,
)
from .irt import (
    EmConfig,
    IrtFit,
    ItemParams,
    QuadratureGrid,
    eap_scores,
    fit_mml,
    icc,
    item_information,
    test_information,
)
from .regression import (
    DiagnosticsReport,
    RegressionResult,
    breusch_pagan,
    diagnostics,
    durbin_watson,
    nested_f_test,
    ols,
    shapiro_wilk,
)
from .reliability import (
    ReliabilityReport,
    loadings_from_slopes,
    omega_from_loadings,
    omega_total,
    reliability_report,
)
from .simulate import SimSpec, sample_item_params, simulate_regression, simulate_responses

__version__ = "0.1.0"
