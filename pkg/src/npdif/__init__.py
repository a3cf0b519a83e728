"""Nonparametric detection of differential item functioning.

Item response curves of a reference and a focal group are estimated by
nearest-neighbour kernel smoothing on the standardized total score and
compared through a weighted integrated difference. Inference is asymptotic
(normal) or by a wild bootstrap; a logistic-regression likelihood-ratio test
serves as the parametric baseline.
"""

from .analysis import AnalysisConfig, analyze, curve_data, empirical_points
from .bootstrap import BootstrapConfig, wild_bootstrap_pvalue, wild_bootstrap_test
from .data import (
    GroupedScores,
    ResponseMatrix,
    SchemaError,
    load_response_csv,
    split_groups,
    standardized_total_score,
)
from .harness import ConditionMetrics, ExperimentGrid, emit_report, rmse_weights, run_condition, run_grid
from .logistic import fit_logistic, lrt_dif
from .simulation import ItemParams, Scenario, dif_scenario, generate_responses, irc_true, weighted_unsigned_area
from .smoothing import SmoothingConfig, bandwidth, irc_estimate, kde_density, kernel_eval, nn_weights
from .statistic import (
    DifDesign,
    DifResult,
    asymptotic_power,
    estimated_weight_test,
    fixed_weight_test,
    normalized_statistic,
    optimal_weights,
    test_statistic,
    variance_estimate,
    weighted_test,
)
from .support import SupportSet, build_support, common_support, reduced_support

__version__ = "0.1.0"
