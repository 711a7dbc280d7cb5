"""Who infected whom in multi-type stochastic epidemics.

Forward shortest-path simulation, backward branching-process Monte
Carlo, and analytic fixed-point bounds for the fractions of infections
attributable to each infector type.
"""

from .analytic import (
    AnalyticReport,
    FixedPointResult,
    analytic_report,
    borel_conditional_pmf,
    borel_mean_inverse,
    borel_pmf,
    extinction_probs,
    extinction_probs_2type,
    fixed_point_q,
    fixed_point_qtilde,
    r0,
    rho21_min,
    theorem2_bounds,
    tv_binomial_poisson,
)
from .backward import (
    RestrictedSetSize,
    SusceptibilitySnapshot,
    default_t_star,
    explore_susceptibility,
    restricted_susceptibility_size,
    susceptibility_counts,
)
from .branching import (
    BranchingRun,
    MalthusianSolution,
    WEstimate,
    backward_mean_matrix,
    estimate_W,
    estimate_rho_bp,
    extinction_frequency,
    laplace_mean_matrix,
    simulate_backward_bp,
    solve_malthusian,
    survival_probability,
)
from .config import (
    Duration,
    ExtremalTwoType,
    MarkedSingleProcess,
    MarkovSEIR,
    MeanMatrix,
    ModelConfig,
    PopulationSpec,
    Violation,
    config_from_dict,
    config_to_dict,
    eta_cdf,
    load_config,
    mean_matrix,
    sample_contact_process,
    validate_config,
)
from .errors import (
    CapExceededError,
    ConfigError,
    DomainError,
    InfectorError,
    NoDataError,
    NumericError,
    OutOfHorizonError,
)
from .forward import (
    OutbreakResult,
    RhoEstimate,
    attribute_infectors,
    is_large_outbreak,
    replicate_records,
    replicate_rho,
    run_epidemic,
    run_epidemic_lazy,
)
from .graph import (
    FIG1_LABELS,
    EpidemicGraph,
    build_graph,
    degree_stats,
    dump_graph,
    fixture_graph_fig1,
    load_graph,
)
from .rng import derive_key, stream

__version__ = "0.1.0"
