"""Equilibria, disintermediation thresholds and welfare for a supplier, intermediary and consumer content market."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CostModel,
    DisintermediationError,
    DomainError,
    EffectiveCost,
    Family,
    MarketParams,
    PreconditionError,
    SolverError,
    Source,
    effective_cost,
    eval_g,
    eval_g_prime,
    log_ratio,
    max_direct_utility,
    optimal_quality,
)
from .equilibrium import (  # noqa: E402
    Action,
    EquilibriumOutcome,
    Regime,
    Thresholds,
    closed_form_thresholds_power,
    compute_thresholds,
    disintermediation_margin,
    interior_minimizer,
    solve_equilibrium,
    subgame_outcome,
)
from .metrics import (  # noqa: E402
    WelfareReport,
    bliss_point,
    consumer_utility,
    content_quality,
    intermediary_utility,
    planner_welfare,
    social_welfare,
    welfare_report,
)

__all__ = [
    "CostModel",
    "DisintermediationError",
    "DomainError",
    "EffectiveCost",
    "Family",
    "MarketParams",
    "PreconditionError",
    "SolverError",
    "Source",
    "effective_cost",
    "eval_g",
    "eval_g_prime",
    "log_ratio",
    "max_direct_utility",
    "optimal_quality",
    "Action",
    "EquilibriumOutcome",
    "Regime",
    "Thresholds",
    "closed_form_thresholds_power",
    "compute_thresholds",
    "disintermediation_margin",
    "interior_minimizer",
    "solve_equilibrium",
    "subgame_outcome",
    "WelfareReport",
    "bliss_point",
    "consumer_utility",
    "content_quality",
    "intermediary_utility",
    "planner_welfare",
    "social_welfare",
    "welfare_report",
]
