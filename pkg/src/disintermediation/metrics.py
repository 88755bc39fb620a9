"""Equilibrium welfare: quality, per-agent utilities, social welfare and planner benchmarks.

All metrics are functions of ``(model, params, nu)`` rather than of a solved
equilibrium, so they can be swept over counterfactual production costs.
Suppliers price at marginal cost here, so their profit is zero.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from scipy.optimize import brentq

from .core import (
    CostModel,
    Family,
    MarketParams,
    _check_nu,
    max_direct_utility,
    optimal_quality,
)
from .equilibrium import (
    ROOT_RTOL,
    Regime,
    Thresholds,
    compute_thresholds,
    intermediary_cost,
    intermediated_quality,
    regime_at,
)


def content_quality(model: CostModel, params: MarketParams, nu: float) -> float:
    """Quality every consumer ends up consuming at production cost ``nu``."""
    if regime_at(model, params, nu) is Regime.INTERMEDIATED:
        return intermediated_quality(model, params.alpha, nu)
    return optimal_quality(model, nu)


def intermediary_utility(model: CostModel, params: MarketParams, nu: float) -> float:
    if regime_at(model, params, nu) is Regime.INTERMEDIATED:
        return params.alpha * params.consumers - intermediary_cost(model, params.alpha, nu)
    return 0.0


def consumer_utility(model: CostModel, params: MarketParams, nu: float) -> float:
    """Utility of each consumer; equals ``U(nu)`` in both regimes.

    The intermediary extracts all the surplus, so neither the fee nor the
    consumer count enters. ``params`` is accepted for interface symmetry.
    """
    return max_direct_utility(model, _check_nu(nu))


def social_welfare(model: CostModel, params: MarketParams, nu: float) -> float:
    C = params.consumers
    if regime_at(model, params, nu) is Regime.INTERMEDIATED:
        w_m = intermediated_quality(model, params.alpha, nu)
        return C * w_m - intermediary_cost(model, params.alpha, nu)
    return C * max_direct_utility(model, nu)


def planner_welfare(model: CostModel, params: MarketParams, nu: float, with_intermediary: bool) -> float:
    """First-best welfare.

    With an intermediary the planner produces once for everyone:
    ``max_w (C w - nu g(w)) = C * U(nu / C)``. Without one, each consumer
    produces separately: ``C * U(nu)``.
    """
    nu = _check_nu(nu)
    C = params.consumers
    if with_intermediary:
        return C * max_direct_utility(model, nu / C)
    return C * max_direct_utility(model, nu)


def planner_quality(model: CostModel, params: MarketParams, nu: float) -> float:
    """Quality chosen by the planner who produces once for all consumers."""
    return optimal_quality(model, _check_nu(nu) / params.consumers)


def _bliss_gap(model: CostModel, params: MarketParams, nu: float) -> float:
    # equilibrium quality minus planner quality on the intermediated branch
    return intermediated_quality(model, params.alpha, nu) - planner_quality(model, params, nu)


def bliss_point_power(beta: float, alpha: float, C: float) -> float:
    """Closed-form candidate bliss point for ``g(w) = w**beta`` (not range-checked)."""
    denom = (C ** (1.0 / (beta - 1)) - 1.0) * beta ** (-1.0 / (beta - 1)) + beta ** (-beta / (beta - 1))
    return (alpha / denom) ** (-(beta - 1))


def bliss_point(
    model: CostModel, params: MarketParams, thresholds: Thresholds | None = None
) -> float | None:
    """Production cost where equilibrium welfare equals the planner optimum, if any.

    Such a point lies in the intermediated range and solves
    ``alpha + U(nu) = w*(nu / C)``. The gap is monotone in ``nu`` so there is
    at most one root.
    """
    if thresholds is None:
        thresholds = compute_thresholds(model, params)
    if thresholds.empty:
        return None
    if model.family is Family.POWER:
        nu_b = bliss_point_power(model.beta, params.alpha, params.consumers)
        return nu_b if regime_at(model, params, nu_b) is Regime.INTERMEDIATED else None

    lo = thresholds.t_lower if thresholds.t_lower is not None else thresholds.nu_min * 1e-12
    hi = thresholds.t_upper if thresholds.t_upper is not None else thresholds.nu_min * 1e12
    f_lo, f_hi = _bliss_gap(model, params, lo), _bliss_gap(model, params, hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        return None
    try:
        return brentq(lambda v: _bliss_gap(model, params, v), lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
    except (RuntimeError, ValueError):
        return None


@dataclass(frozen=True)
class WelfareReport:
    nu: float
    regime: Regime
    quality: float
    consumer_utility: float
    intermediary_utility: float
    supplier_profit: float
    social_welfare: float
    planner_with_intermediary: float
    planner_without_intermediary: float
    bliss_point: float | None

    def accounting_gap(self, consumers: int) -> float:
        """Difference between reported welfare and the sum of agent payoffs."""
        total = consumers * self.consumer_utility + self.intermediary_utility + self.supplier_profit
        return self.social_welfare - total

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


def welfare_report(
    model: CostModel, params: MarketParams, nu: float, thresholds: Thresholds | None = None
) -> WelfareReport:
    nu = _check_nu(nu)
    return WelfareReport(
        nu=nu,
        regime=regime_at(model, params, nu),
        quality=content_quality(model, params, nu),
        consumer_utility=consumer_utility(model, params, nu),
        intermediary_utility=intermediary_utility(model, params, nu),
        supplier_profit=0.0,
        social_welfare=social_welfare(model, params, nu),
        planner_with_intermediary=planner_welfare(model, params, nu, True),
        planner_without_intermediary=planner_welfare(model, params, nu, False),
        bliss_point=bliss_point(model, params, thresholds),
    )

