"""Market variants for the power family ``g(w) = w**beta``.

* a single (monopolist) supplier that prices strategically,
* distribution costs that grow with the number of consumers served,
* a fee proportional to the intermediary's content quality.

General cost families are deliberately not supported here.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.optimize import brentq

from .core import CostModel, PreconditionError, _check_nu, max_direct_utility, optimal_quality
from .equilibrium import ROOT_RTOL, Regime, Thresholds, _power_consts, closed_form_thresholds_power

RESIDUAL_TOL = 1e-9


def _check_power_args(beta: float, alpha: float, C: float) -> None:
    if not (math.isfinite(beta) and beta > 1):
        raise PreconditionError(f"beta must be > 1, got {beta!r}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise PreconditionError(f"alpha must be > 0, got {alpha!r}")
    if not C >= 2:
        raise PreconditionError(f"C must be >= 2, got {C!r}")


def _baseline(beta: float, alpha: float, C: float) -> Thresholds:
    t = closed_form_thresholds_power(beta, alpha, C)
    if t.empty or t.t_lower is None or t.t_upper is None:
        raise PreconditionError(f"no bounded intermediated range for beta={beta}, alpha={alpha}, C={C}")
    return t


# --- monopolist supplier -------------------------------------------------


@dataclass(frozen=True)
class MonopolistSolution:
    """Outcome when one supplier with unit cost ``supply_cost`` sets the price.

    ``case`` names the branch of the price map: ``"markup"`` below the
    suppression band, ``"suppress"`` when the price is held at ``t_lower``,
    ``"intermediate"`` when it is raised to ``t_upper``, and ``"markup_high"``.
    ``tied`` is set when ``supply_cost`` sits exactly on a case boundary.
    """

    price: float
    t_mon_lower: float
    t_mon_upper: float
    t_lower: float
    t_upper: float
    usage: int
    case: str
    tied: bool = False

    @property
    def regime(self) -> Regime:
        return Regime.INTERMEDIATED if self.usage else Regime.DISINTERMEDIATED

    def to_dict(self) -> dict:
        return asdict(self)


def _markup_profit_per_consumer(beta: float, nu: float) -> float:
    # (beta*nu - nu) * g(w*(beta*nu)) in closed form
    return (1 - 1 / beta) * nu ** (-1 / (beta - 1)) * beta ** (-(beta + 1) / (beta - 1))


def monopolist_thresholds(beta: float, alpha: float, C: float) -> tuple[float, float]:
    """Supply costs at which a monopolist switches between selling to the
    intermediary and selling to consumers directly.

    Returns ``(t_mon_lower, t_mon_upper)``. Each is the root of a profit
    comparison: per consumer the supplier earns ``alpha * (1 - nu / T_U)`` by
    pricing at ``T_U`` and serving the intermediary, versus the best direct
    sale (a markup near the top, holding the price at ``T_L`` near the bottom).
    """
    _check_power_args(beta, alpha, C)
    if not C > beta / (beta - 1):
        raise PreconditionError(f"monopolist analysis needs C > beta/(beta-1) = {beta / (beta - 1)!r}, got C={C!r}")
    base = _baseline(beta, alpha, C)
    t_lo, t_hi = base.t_lower, base.t_upper

    def upper_gap(nu: float) -> float:
        return _markup_profit_per_consumer(beta, nu) - alpha * (1 - nu / t_hi)

    # direct sale at price T_L: each consumer buys w*(T_L)
    g_at_tl = optimal_quality(CostModel.power(beta), t_lo) ** beta

    def lower_gap(nu: float) -> float:
        return (1 - nu / t_lo) * t_lo * g_at_tl - alpha * (1 - nu / t_hi)

    out = []
    for f, (a, b) in ((lower_gap, (t_lo / beta, t_lo)), (upper_gap, (t_hi / beta, t_hi))):
        fa, fb = f(a), f(b)
        if fa == 0 or fb == 0:
            root = a if fa == 0 else b
        elif (fa > 0) == (fb > 0):
            raise PreconditionError(f"no sign change on ({a!r}, {b!r}); profit comparison has no root")
        else:
            root = brentq(f, a, b, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
        if abs(f(root)) > RESIDUAL_TOL * max(1.0, alpha):
            raise PreconditionError(f"monopolist threshold residual {f(root)!r} too large")
        out.append(root)
    return out[0], out[1]


def monopolist_price(beta: float, alpha: float, C: float, supply_cost: float) -> MonopolistSolution:
    """Equilibrium price of a monopolist supplier (no manual production, no human cost).

    At exactly ``supply_cost == t_mon_lower`` the price stays at ``t_lower``
    and ``tied`` is set.
    """
    rho = _check_nu(supply_cost)
    t_ml, t_mu = monopolist_thresholds(beta, alpha, C)
    base = _baseline(beta, alpha, C)
    t_lo, t_hi = base.t_lower, base.t_upper
    tied = rho in (t_lo / beta, t_ml, t_mu)
    if rho < t_lo / beta:
        price, use, case = beta * rho, 0, "markup"
    elif rho <= t_ml:
        price, use, case = t_lo, 0, "suppress"
    elif rho <= t_mu:
        price, use, case = t_hi, int(C), "intermediate"
    else:
        price, use, case = beta * rho, 0, "markup_high"
    return MonopolistSolution(price, t_ml, t_mu, t_lo, t_hi, use, case, tied)


def monopolist_profit(beta: float, alpha: float, C: float, supply_cost: float) -> float:
    """Supplier profit at the equilibrium price."""
    sol = monopolist_price(beta, alpha, C, supply_cost)
    margin = sol.price - supply_cost
    if sol.usage:
        return margin * alpha * C / sol.price
    return margin * C * optimal_quality(CostModel.power(beta), sol.price) ** beta


# --- marginal distribution costs -----------------------------------------


@dataclass(frozen=True)
class MarginalCostParams:
    """Distribution cost factor ``gamma``: serving ``n`` consumers costs ``(1 + gamma*n)`` times the base."""

    gamma: float
    consumers: int

    def __post_init__(self):
        if not (0 <= self.gamma < 1):
            raise PreconditionError(f"gamma must lie in [0, 1), got {self.gamma!r}")
        if self.consumers < 2:
            raise PreconditionError(f"consumers must be >= 2, got {self.consumers!r}")

    @property
    def effective_consumers(self) -> float:
        C, g = self.consumers, self.gamma
        return C * (1 + g) / (1 + g * C)


def marginal_cost_thresholds(beta: float, alpha: float, C: int, gamma: float) -> Thresholds:
    """Intermediated range under marginal distribution costs.

    The market is equivalent to the baseline with ``C' = C(1+gamma)/(1+gamma*C)``
    consumers and production cost scaled by ``1 + gamma``.
    """
    _check_power_args(beta, alpha, C)
    mp = MarginalCostParams(gamma, int(C))
    c_eff = mp.effective_consumers
    scale = 1.0 / (1.0 + gamma)
    if c_eff <= 1:
        raise PreconditionError(f"effective consumer count {c_eff!r} must exceed 1")
    t = closed_form_thresholds_power(beta, alpha, c_eff)
    return Thresholds(
        None if t.t_lower is None else t.t_lower * scale,
        None if t.t_upper is None else t.t_upper * scale,
        t.nu_min * scale,
        t.phi_min,
        t.empty,
        t.diagnostics + (f"effective_consumers={c_eff!r}",),
    )


def marginal_cost_margin(beta: float, alpha: float, C: int, gamma: float, nu: float) -> float:
    """Direct margin: intermediary cost of matching consumers minus fee revenue.

    A consumer producing alone pays ``nu * (1 + gamma)`` per unit of ``g``; the
    intermediary serving all ``C`` pays ``nu * (1 + gamma * C)``.
    """
    MarginalCostParams(gamma, int(C))
    nu = _check_nu(nu)
    model = CostModel.power(beta)
    w = alpha + max_direct_utility(model, nu * (1 + gamma))
    return nu * (1 + gamma * C) * w**beta - alpha * C


def marginal_cost_regime(beta: float, alpha: float, C: int, gamma: float, nu: float) -> Regime:
    if marginal_cost_margin(beta, alpha, C, gamma, nu) <= 0:
        return Regime.INTERMEDIATED
    return Regime.DISINTERMEDIATED


# --- quality-proportional fees -------------------------------------------


@dataclass(frozen=True)
class LinearFeeParams:
    """Fee ``alpha * w`` charged per consumer for content of quality ``w``."""

    alpha: float

    def __post_init__(self):
        if not (0 < self.alpha < 1):
            raise PreconditionError(f"linear fee alpha must lie in (0, 1), got {self.alpha!r}")


def linear_fee_usage(beta: float, alpha: float, C: int) -> int:
    """Consumers served by the intermediary; does not depend on production cost."""
    LinearFeeParams(alpha)
    _check_power_args(beta, alpha, C)
    lhs = alpha ** (1 / (beta - 1)) * (1 - alpha)
    rhs = C ** (-1 / (beta - 1)) * _power_consts(beta)
    return int(C) if lhs >= rhs else 0


def linear_fee_quality(beta: float, alpha: float, C: int, nu: float) -> float:
    """Quality consumed under linear fees.

    When intermediated the intermediary offers the larger of the quality that
    just matches the consumer's outside option, ``U / (1 - alpha)``, and its
    unconstrained revenue-maximising quality ``w*(nu / (alpha * C))``.
    """
    nu = _check_nu(nu)
    model = CostModel.power(beta)
    if linear_fee_usage(beta, alpha, C):
        matching = max_direct_utility(model, nu) / (1 - alpha)
        return max(matching, optimal_quality(model, nu / (alpha * C)))
    return optimal_quality(model, nu)
