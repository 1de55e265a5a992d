"""Bayesian decision-theoretic subgroup detection and policy search."""

from .data import (
    CATEGORICAL,
    CONTINUOUS,
    ColumnKind,
    CutpointGrid,
    DataError,
    Dataset,
    StandardizationRecipe,
    build_cutpoints,
    load_dataset,
    standardize,
)
from .ridge import (
    FitError,
    McmcConfig,
    PosteriorDraws,
    RidgePrior,
    fit_ridge,
    flat_linear_prior,
    prior_heterogeneity_mean_linear,
)
from .rules import Condition, Rule, RuleBasis, extract_rules, fit_rule_bcf
from .trees import Node, PolicyTree, Split, SubgroupTree
from .utility import (
    EmptySubgroupError,
    UtilityReport,
    expected_efficacy,
    expected_utility_braids,
    expected_utility_rs_decomposed,
    expected_welfare,
    subgroup_tau_draws,
)
from .search import (
    PrespecifiedGroups,
    SearchConfig,
    SearchError,
    evaluate_prespecified,
    policy_search_exact,
    search_exact,
    search_greedy_rn,
)
from .inference import (
    AipwEstimate,
    ContrastSummary,
    SubgroupSummary,
    aipw_subgroup,
    subgroup_contrast,
    subgroup_summary,
)
from .prior_trees import (
    HeterogeneitySample,
    TreePriorConfig,
    geometric_variant_closed_form,
    mean_leaf_depth_chipman,
    prior_heterogeneity_mc,
    sample_prior_forest,
    heterogeneity_closed_form,
)
from .dgp import EffectSpec, SyntheticDgp, generate, linear_dgp, tree_dgp
from .experiments import (
    CalibrationDesign,
    ExperimentConfig,
    prior_predictive_calibration,
    run_coverage_experiment,
    run_utility_experiment,
)

__version__ = "0.1.0"
