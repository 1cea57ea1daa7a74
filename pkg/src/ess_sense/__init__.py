"""Score-based Bayesian network structure learning with the equivalent
sample size of the BDeu prior treated as a first-class object of study."""

__version__ = "0.1.0"

from .bayes_factor import (
    BfResult,
    EdgeDecision,
    EdgePreference,
    approx_log_bf,
    exact_log_bf,
    fig1_curve,
    gamma_ratio_expansion,
    large_ess_edge_preference,
)
from .dataset import (
    DEFAULT_CELL_CAP,
    Dataset,
    FamilyCounts,
    PairCounts,
    family_counts,
    load_csv,
    pair_counts,
    synth_skewed_independent,
)
from .errors import (
    ComputationError,
    DegenerateDenominatorError,
    DegenerateVariableError,
    DomainError,
    EmptyDataError,
    EssSenseError,
    InputError,
    MissingDataError,
    NonRepresentableError,
    NormalizationError,
    ParseError,
    SizeError,
    TableTooLargeError,
)
from .ess import (
    AscentConfig,
    AscentTrace,
    EssEstimate,
    alpha_star,
    coordinate_ascent,
    expectation_under_empirical,
    expectation_under_prior,
    golden_section_alpha,
)
from .scores import (
    BdeuHyper,
    Dag,
    ScoreBreakdown,
    aic_score,
    bdeu_family_score,
    bdeu_graph_score,
    bic_score,
    effective_params,
    log_gamma_ratio,
    max_loglik,
    posterior_mean_params,
)
from .search import (
    AIC,
    BIC,
    Criterion,
    ParentSetCache,
    SearchMethod,
    SearchResult,
    bdeu_criterion,
    bic_init,
    brute_force_map,
    build_cache,
    ess_sweep,
    exact_dp_map,
    hill_climb,
    map_search,
)
from .uniformity import (
    CondJointDist,
    UniformityReport,
    minimality_witness,
    uniformity,
    uniformity_from_counts,
)
