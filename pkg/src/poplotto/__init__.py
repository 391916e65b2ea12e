"""Population lotto equilibria: solver, verification, and structure analysis."""

from .density import EPS, CdfValue, PiecewiseDensity, mixture, step_gap
from .equilibrium import (
    EquilibriumReport,
    GroupCheck,
    PrefixCheck,
    best_dyad,
    payoff_identity_check,
    verify_linear_bounds,
    verify_nash,
    verify_subpop_consistency,
    worst_deviation,
)
from .payoff import Dyad, dyad_payoff, population_payoff, win_prob
from .solver import (
    DiscreteBudgetDistribution,
    EquilibriumSolution,
    SolverError,
    SubPopulation,
    TerraceProfile,
    fill,
    quadratic_fill,
    solve,
)
from .structure import (
    League,
    LeaguePartition,
    OutcomeMatrix,
    SubLeagueReport,
    TransitivityReport,
    dice_to_population,
    export_digraph,
    league_rewire,
    leagues,
    outcome_matrix,
    search_dice_triple,
    step_samples_csv,
    sub_leagues,
    transitivity_report,
)

__all__ = [
    "EPS",
    "CdfValue",
    "PiecewiseDensity",
    "mixture",
    "step_gap",
    "Dyad",
    "dyad_payoff",
    "population_payoff",
    "win_prob",
    "DiscreteBudgetDistribution",
    "EquilibriumSolution",
    "SolverError",
    "SubPopulation",
    "TerraceProfile",
    "fill",
    "quadratic_fill",
    "solve",
    "EquilibriumReport",
    "GroupCheck",
    "PrefixCheck",
    "best_dyad",
    "payoff_identity_check",
    "verify_linear_bounds",
    "verify_nash",
    "verify_subpop_consistency",
    "worst_deviation",
    "League",
    "LeaguePartition",
    "OutcomeMatrix",
    "SubLeagueReport",
    "TransitivityReport",
    "dice_to_population",
    "export_digraph",
    "league_rewire",
    "leagues",
    "outcome_matrix",
    "search_dice_triple",
    "step_samples_csv",
    "sub_leagues",
    "transitivity_report",
]
