"""Brute-force verification by backward induction on discrete grids.

The oracle never calls the analytic solvers to decide anything. It evaluates
the cost function on a quality grid, lets consumers best-respond on that grid,
lets the intermediary pick the best grid quality, and checks supplier prices
against a finite list of deviations. Analytic optima are used only to size the
grid and to verify that it covers them.

The ``compare_*`` helpers then run both engines on the same inputs and record
per-point differences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import (
    CostModel,
    DisintermediationError,
    MarketParams,
    eval_g,
    max_direct_utility,
    optimal_quality,
)
from .equilibrium import Regime, compute_thresholds, solve_equilibrium

DEFAULT_POINTS = 10_001
MIN_POINTS = 100
PROFIT_TOL = 1e-12


class OracleConfigError(DisintermediationError, ValueError):
    """The oracle grid cannot represent the problem it was asked to solve."""


class Tiebreak(str, enum.Enum):
    BASELINE = "baseline"  # consumers pick the intermediary on ties
    MONOPOLIST_FOOTNOTE = "monopolist_footnote"  # consumers pick Direct on ties below ``tie_cutoff``


class FeeMode(str, enum.Enum):
    FIXED = "fixed"
    LINEAR = "linear"


@dataclass(frozen=True)
class OracleConfig:
    """Grid and rule settings.

    ``w_max=None`` sizes the quality grid per subgame to twice the largest
    relevant optimum. ``price_grid=None`` pins prices to the competitive
    level; otherwise it lists the prices suppliers may deviate to (competitive
    mode) or choose from (single supplier).
    """

    points: int = DEFAULT_POINTS
    w_max: float | None = None
    price_grid: tuple[float, ...] | None = None
    tiebreak: Tiebreak = Tiebreak.BASELINE
    tie_cutoff: float = math.inf
    marginal_gamma: float = 0.0
    fee_mode: FeeMode = FeeMode.FIXED

    def __post_init__(self):
        if int(self.points) != self.points or self.points < MIN_POINTS:
            raise OracleConfigError(f"points must be an integer >= {MIN_POINTS}, got {self.points!r}")
        if self.w_max is not None and not (math.isfinite(self.w_max) and self.w_max > 0):
            raise OracleConfigError(f"w_max must be positive, got {self.w_max!r}")
        if self.price_grid is not None:
            pg = tuple(float(p) for p in self.price_grid)
            if not pg or any(not (p > 0 and math.isfinite(p)) for p in pg):
                raise OracleConfigError("price_grid must be a non-empty list of positive prices")
            object.__setattr__(self, "price_grid", pg)
        if not self.marginal_gamma >= 0:
            raise OracleConfigError(f"marginal_gamma must be >= 0, got {self.marginal_gamma!r}")
        object.__setattr__(self, "tiebreak", Tiebreak(self.tiebreak))
        object.__setattr__(self, "fee_mode", FeeMode(self.fee_mode))


@dataclass(frozen=True)
class OracleOutcome:
    regime: Regime
    nu: float
    provider: int | str
    intermediary_quality_index: int
    consumer_quality_index: int
    intermediary_quality: float
    consumer_quality: float
    intermediary_utility: float
    consumer_utility: float
    best_direct_utility: float
    grid_step: float
    supplier_units: float  # units of g bought from the chosen provider

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


def _cheapest(params: MarketParams, prices) -> tuple[float, int | str]:
    prices = [float(p) for p in prices]
    i = min(range(len(prices)), key=lambda k: (prices[k], k))
    via = params.human_cost + prices[i]
    if params.manual_cost < via:
        return params.manual_cost, "manual"
    return via, i


def _required_w_max(model: CostModel, params: MarketParams, nu: float, config: OracleConfig) -> float:
    """Twice the largest quality either player could want at cost ``nu``."""
    gamma, alpha, C = config.marginal_gamma, params.alpha, params.consumers
    nu_c = nu * (1 + gamma)
    u = max_direct_utility(model, nu_c)
    need = [alpha + u, optimal_quality(model, nu_c)]
    if config.fee_mode is FeeMode.LINEAR:
        if alpha < 1:
            need.append(u / (1 - alpha))
        need.append(optimal_quality(model, nu * (1 + gamma * C) / (alpha * C)))
    return 2.0 * max(need)


def quality_grid(model: CostModel, params: MarketParams, nu: float, config: OracleConfig) -> np.ndarray:
    required = _required_w_max(model, params, nu, config)
    if not math.isfinite(required):
        raise OracleConfigError(f"optimal quality at nu={nu!r} is not finite; cannot size a grid")
    w_max = required if config.w_max is None else config.w_max
    if w_max < required * (1 - 1e-12):
        raise OracleConfigError(f"w_max={w_max!r} does not cover the optima at nu={nu!r} (need >= {required!r})")
    return np.linspace(0.0, w_max, int(config.points))


def _last_argmax(values: np.ndarray) -> int:
    # ties toward the higher index, i.e. the higher quality
    return int(len(values) - 1 - np.argmax(values[::-1]))


def brute_force_subgame(model: CostModel, params: MarketParams, prices, config: OracleConfig) -> OracleOutcome:
    """Intermediary and consumer stages at fixed supplier ``prices``, solved on a grid."""
    nu, provider = _cheapest(params, prices)
    gamma, alpha, C = config.marginal_gamma, params.alpha, params.consumers
    nu_c = nu * (1 + gamma)
    nu_m = nu * (1 + gamma * C)

    w = quality_grid(model, params, nu, config)
    g = np.asarray(eval_g(model, w), dtype=float)

    direct = w - nu_c * g
    d_idx = int(np.argmax(direct))  # consumers have no quality tiebreak; the first max is used
    best_direct = float(direct[d_idx])

    if config.fee_mode is FeeMode.LINEAR:
        fee = alpha * w
    else:
        fee = np.full_like(w, alpha)
    net = w - fee
    if config.tiebreak is Tiebreak.MONOPOLIST_FOOTNOTE and nu < config.tie_cutoff:
        attracts = net > best_direct
    else:
        attracts = net >= best_direct

    with np.errstate(invalid="ignore"):
        payoff = np.where(attracts, C * fee - nu_m * g, -nu * g)
    m_idx = _last_argmax(payoff)

    if attracts[m_idx]:
        regime = Regime.INTERMEDIATED
        c_idx = m_idx
        consumer_u = float(net[m_idx])
        units = (1 + gamma * C) * float(g[m_idx])
    else:
        regime = Regime.DISINTERMEDIATED
        c_idx = d_idx
        consumer_u = best_direct
        units = C * (1 + gamma) * float(g[d_idx]) + float(g[m_idx])
    return OracleOutcome(
        regime=regime,
        nu=nu,
        provider=provider,
        intermediary_quality_index=m_idx,
        consumer_quality_index=c_idx,
        intermediary_quality=float(w[m_idx]),
        consumer_quality=float(w[c_idx]),
        intermediary_utility=float(payoff[m_idx]),
        consumer_utility=consumer_u,
        best_direct_utility=best_direct,
        grid_step=float(w[1] - w[0]),
        supplier_units=units,
    )


def _supplier_profit(outcome: OracleOutcome, index: int, price: float, unit_cost: float) -> float:
    if outcome.provider != index:
        return 0.0
    return (price - unit_cost) * outcome.supplier_units


@dataclass(frozen=True)
class Deviation:
    supplier: int
    price: float
    profit: float


@dataclass(frozen=True)
class OracleEquilibrium:
    outcome: OracleOutcome
    prices: tuple[float, ...]
    profitable_deviations: tuple[Deviation, ...] = ()
    profit: float = 0.0
    price_regimes: tuple[str, ...] = field(default=())  # per price_grid entry, single-supplier mode only

    @property
    def verified(self) -> bool:
        return not self.profitable_deviations


def _competitive(model: CostModel, params: MarketParams, config: OracleConfig) -> OracleEquilibrium:
    rho = params.supply_cost
    base_prices = (rho,) * params.suppliers
    outcome = brute_force_subgame(model, params, base_prices, config)
    grid = config.price_grid or tuple(rho * f for f in (0.5, 0.9, 1.0, 1.1, 2.0))
    found = []
    for i in range(params.suppliers):
        for p in grid:
            prices = list(base_prices)
            prices[i] = p
            dev = brute_force_subgame(model, params, prices, config)
            profit = _supplier_profit(dev, i, p, rho)
            if profit > PROFIT_TOL:
                found.append(Deviation(i, p, profit))
    return OracleEquilibrium(outcome, base_prices, tuple(found), 0.0)


def _single_supplier(model: CostModel, params: MarketParams, config: OracleConfig) -> OracleEquilibrium:
    if config.price_grid is None:
        raise OracleConfigError("a single supplier needs an explicit price_grid to choose from")
    rho = params.supply_cost
    best: tuple[float, float, OracleOutcome] | None = None
    regimes = []
    for p in config.price_grid:
        out = brute_force_subgame(model, params, (p,), config)
        regimes.append(out.regime.value)
        profit = _supplier_profit(out, 0, p, rho)
        # ties go to the higher price (grid is scanned in the given order)
        if best is None or profit >= best[0]:
            best = (profit, p, out)
    profit, price, out = best
    return OracleEquilibrium(out, (price,), (), profit, tuple(regimes))


def brute_force_equilibrium(model: CostModel, params: MarketParams, config: OracleConfig) -> OracleEquilibrium:
    """Grid equilibrium of the full game.

    With two or more suppliers, prices are pinned to marginal cost and every
    unilateral move to a ``price_grid`` value is tried; any profitable move is
    reported in ``profitable_deviations``. With one supplier, the supplier picks
    the profit-maximising price from ``price_grid``.
    """
    if params.suppliers >= 2:
        return _competitive(model, params, config)
    return _single_supplier(model, params, config)


# --- comparison against the analytic engine ------------------------------


@dataclass(frozen=True)
class PointDiff:
    label: str
    x: float
    analytic_regime: str
    oracle_regime: str
    analytic_quality: float
    oracle_quality: float
    grid_step: float
    extra: dict = field(default_factory=dict)
    ok_extra: bool = True

    @property
    def regime_match(self) -> bool:
        return self.analytic_regime == self.oracle_regime

    @property
    def quality_gap(self) -> float:
        return abs(self.oracle_quality - self.analytic_quality)

    @property
    def quality_match(self) -> bool:
        return self.quality_gap <= self.grid_step * (1 + 1e-9)

    @property
    def ok(self) -> bool:
        return self.regime_match and self.quality_match and self.ok_extra

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(regime_match=self.regime_match, quality_gap=self.quality_gap,
                 quality_match=self.quality_match, ok=self.ok)
        return d


@dataclass(frozen=True)
class ComparisonReport:
    name: str
    points: tuple[PointDiff, ...]

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.points)

    @property
    def mismatches(self) -> tuple[PointDiff, ...]:
        return tuple(p for p in self.points if not p.ok)

    @property
    def mean_quality_gap(self) -> float:
        return float(np.mean([p.quality_gap for p in self.points])) if self.points else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "n_points": len(self.points),
            "n_mismatches": len(self.mismatches),
            "points": [p.to_dict() for p in self.points],
        }

    def summary(self) -> str:
        lines = [f"{self.name}: {len(self.points) - len(self.mismatches)}/{len(self.points)} points agree"]
        for p in self.mismatches:
            lines.append(
                f"  MISMATCH {p.label} x={p.x!r}: regime {p.analytic_regime}/{p.oracle_regime}, "
                f"quality gap {p.quality_gap:.3g} vs step {p.grid_step:.3g}, extra={p.extra}"
            )
        return "\n".join(lines)


def compare_with_analytic(model: CostModel, params: MarketParams, config: OracleConfig | None = None) -> ComparisonReport:
    """Oracle vs analytic solver at the competitive prices of ``params``."""
    config = config or OracleConfig()
    eq = brute_force_equilibrium(model, params, config)
    an = solve_equilibrium(model, params)
    diff = PointDiff(
        label="competitive",
        x=params.competitive_nu,
        analytic_regime=an.regime.value,
        oracle_regime=eq.outcome.regime.value,
        analytic_quality=an.consumer_quality,
        oracle_quality=eq.outcome.consumer_quality,
        grid_step=eq.outcome.grid_step,
        extra={"profitable_deviations": len(eq.profitable_deviations)},
        ok_extra=eq.verified,
    )
    return ComparisonReport("point", (diff,))


def _sweep_params(params: MarketParams, nu: float) -> MarketParams:
    return replace(params, supply_cost=nu, human_cost=0.0, manual_cost=math.inf)


def compare_baseline_sweep(
    model: CostModel, params: MarketParams, nus, config: OracleConfig | None = None
) -> ComparisonReport:
    """Regime and quality agreement at each production cost in ``nus``."""
    config = config or OracleConfig()
    points = []
    for nu in nus:
        rep = compare_with_analytic(model, _sweep_params(params, float(nu)), config)
        points.append(replace(rep.points[0], label="baseline"))
    return ComparisonReport("baseline", tuple(points))


def compare_marginal_sweep(
    beta: float, alpha: float, C: int, gammas, nus, config: OracleConfig | None = None
) -> ComparisonReport:
    from .extensions import marginal_cost_thresholds

    model = CostModel.power(beta)
    base = config or OracleConfig()
    points = []
    for gamma in gammas:
        t = marginal_cost_thresholds(beta, alpha, C, gamma)
        cfg = replace(base, marginal_gamma=float(gamma))
        for nu in nus:
            nu = float(nu)
            params = MarketParams(alpha, C, suppliers=2, supply_cost=nu, manual_cost=math.inf)
            out = brute_force_subgame(model, params, (nu, nu), cfg)
            inside = t.contains(nu)
            if inside:
                q = alpha + max_direct_utility(model, nu * (1 + gamma))
            else:
                q = optimal_quality(model, nu * (1 + gamma))
            points.append(PointDiff(
                label=f"gamma={gamma!r}", x=nu,
                analytic_regime=(Regime.INTERMEDIATED if inside else Regime.DISINTERMEDIATED).value,
                oracle_regime=out.regime.value,
                analytic_quality=q, oracle_quality=out.consumer_quality, grid_step=out.grid_step,
                extra={"gamma": float(gamma)},
            ))
    return ComparisonReport("marginal", tuple(points))


def _price_label(regimes: tuple[str, ...], idx: int) -> str:
    """Classify the oracle's chosen price by where it sits relative to the intermediated band."""
    inter = Regime.INTERMEDIATED.value
    if regimes[idx] == inter:
        return "intermediate"
    if idx + 1 < len(regimes) and regimes[idx + 1] == inter:
        return "suppress"
    if any(r == inter for r in regimes[idx + 1:]):
        return "markup"
    return "markup_high"


def monopolist_price_grid(supply_cost: float, upper: float, per_decade: int = 300) -> tuple[float, ...]:
    """Geometric grid of candidate prices from marginal cost up to ``upper``."""
    decades = max(math.log10(upper / supply_cost), 1.0)
    n = int(math.ceil(decades * per_decade)) + 1
    return tuple(float(p) for p in np.geomspace(supply_cost, supply_cost * 10**decades, n))


def compare_monopolist_sweep(
    beta: float, alpha: float, C: int, supply_costs, config: OracleConfig | None = None,
    per_decade: int = 300,
) -> ComparisonReport:
    """Price-case labels, price location and quality for a single supplier."""
    from .extensions import monopolist_price

    model = CostModel.power(beta)
    base = config or OracleConfig()
    points = []
    for rho in supply_costs:
        rho = float(rho)
        sol = monopolist_price(beta, alpha, C, rho)
        # sizing only: the grid must reach past the intermediated band and the markup price
        grid = monopolist_price_grid(rho, max(2.0 * sol.t_upper, 4.0 * beta * rho), per_decade)
        cfg = replace(base, price_grid=grid, tiebreak=Tiebreak.MONOPOLIST_FOOTNOTE, tie_cutoff=sol.t_upper)
        params = MarketParams(alpha, C, suppliers=1, supply_cost=rho, manual_cost=math.inf)
        eq = brute_force_equilibrium(model, params, cfg)
        idx = grid.index(eq.prices[0])
        label = _price_label(eq.price_regimes, idx)
        step = math.log(grid[1] / grid[0])

        p_o = eq.prices[0]
        out = eq.outcome
        extra = {"analytic_case": sol.case, "oracle_case": label, "analytic_price": sol.price,
                 "oracle_price": p_o, "oracle_profit": eq.profit}
        if sol.case in ("suppress", "intermediate"):
            # the analytic price sits on a regime boundary, so the oracle's best
            # price is the adjacent grid point on the profitable side
            price_ok = abs(math.log(p_o / sol.price)) <= step * (1 + 1e-9)
        else:
            at_analytic = brute_force_subgame(model, params, (sol.price,), cfg)
            there = _supplier_profit(at_analytic, 0, sol.price, rho)
            extra["oracle_profit_at_analytic_price"] = there
            # profit is linear in g(w): half a quality step moves it by about
            # beta * step / (2 w) in relative terms, at either price
            w_ref = max(min(at_analytic.consumer_quality, out.consumer_quality), out.grid_step)
            slack = 1e-3 + beta * max(out.grid_step, at_analytic.grid_step) / w_ref
            price_ok = there >= (1 - slack) * eq.profit
        # quality is checked at the oracle's own price, under the analytic regime
        if sol.usage:
            q = alpha + max_direct_utility(model, p_o)
        else:
            q = optimal_quality(model, p_o)
        points.append(PointDiff(
            label=f"case={sol.case}", x=rho,
            analytic_regime=sol.regime.value,
            oracle_regime=out.regime.value,
            analytic_quality=q,
            oracle_quality=out.consumer_quality,
            grid_step=out.grid_step,
            extra=extra,
            ok_extra=(label == sol.case) and price_ok,
        ))
    return ComparisonReport("monopolist", tuple(points))


def compare_linear_fee(
    beta: float, alpha: float, C: int, supply_costs, config: OracleConfig | None = None
) -> ComparisonReport:
    from .extensions import linear_fee_quality, linear_fee_usage

    model = CostModel.power(beta)
    cfg = replace(config or OracleConfig(), fee_mode=FeeMode.LINEAR)
    usage = linear_fee_usage(beta, alpha, C)
    regime = Regime.INTERMEDIATED if usage else Regime.DISINTERMEDIATED
    points = []
    for rho in supply_costs:
        rho = float(rho)
        params = MarketParams(alpha, C, suppliers=2, supply_cost=rho, manual_cost=math.inf)
        out = brute_force_subgame(model, params, (rho, rho), cfg)
        points.append(PointDiff(
            label="linear_fee", x=rho,
            analytic_regime=regime.value, oracle_regime=out.regime.value,
            analytic_quality=linear_fee_quality(beta, alpha, C, rho),
            oracle_quality=out.consumer_quality, grid_step=out.grid_step,
        ))
    return ComparisonReport("linear_fee", tuple(points))


STANDARD_NUS = tuple(float(v) for v in np.geomspace(1e-3, 10.0, 50))
STANDARD_MONOPOLIST_COSTS = (0.002, 0.004, 0.007, 0.010, 0.012, 0.015, 0.05, 0.5, 2.5, 4.0, 6.0, 10.0)
STANDARD_GAMMAS = (0.0, 0.25, 0.5)


def threshold_band_check(model: CostModel, params: MarketParams, config: OracleConfig | None = None) -> dict:
    """Oracle regimes just inside and outside each analytic threshold (1% margins)."""
    t = compute_thresholds(model, params)
    config = config or OracleConfig()
    out = {}
    for name, v in (("t_lower", t.t_lower), ("t_upper", t.t_upper)):
        if v is None:
            continue
        for tag, f in (("below", 0.99), ("above", 1.01)):
            nu = v * f
            res = brute_force_subgame(model, _sweep_params(params, nu), (nu, nu), config)
            out[f"{name}_{tag}"] = res.regime.value
    return out


__all__ = [
    "ComparisonReport", "Deviation", "FeeMode", "OracleConfig", "OracleConfigError", "OracleEquilibrium",
    "OracleOutcome", "PointDiff", "STANDARD_GAMMAS", "STANDARD_MONOPOLIST_COSTS", "STANDARD_NUS",
    "Tiebreak", "brute_force_equilibrium", "brute_force_subgame", "compare_baseline_sweep",
    "compare_linear_fee", "compare_marginal_sweep", "compare_monopolist_sweep", "compare_with_analytic",
    "monopolist_price_grid", "quality_grid", "threshold_band_check",
]
