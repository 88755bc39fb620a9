"""Disintermediation margin, threshold computation and the competitive equilibrium."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import (
    CostModel,
    DomainError,
    EffectiveCost,
    Family,
    MarketParams,
    PreconditionError,
    SolverError,
    Source,
    _check_nu,
    effective_cost,
    eval_g_prime,
    log_g,
    log_ratio,
    log_ratio_sup,
    max_direct_utility,
    optimal_quality,
)

ROOT_RTOL = 1e-15
MARGIN_TOL = 1e-9  # |margin| at a threshold, relative to alpha * C
UPPER_CAP = 1e12
LOWER_FLOOR = 1e-300


class Regime(str, enum.Enum):
    INTERMEDIATED = "intermediated"
    DISINTERMEDIATED = "disintermediated"


class Action(str, enum.Enum):
    MIDDLEMAN = "middleman"
    DIRECT = "direct"


@dataclass(frozen=True)
class Thresholds:
    """Boundaries of the intermediated range of production costs.

    ``t_lower is None`` means the intermediary survives however cheap
    production gets; ``t_upper is None`` means no upper boundary was found
    below the search cap. ``empty`` marks parameter sets where the intermediary
    never survives.
    """

    t_lower: float | None
    t_upper: float | None
    nu_min: float
    phi_min: float
    empty: bool = False
    diagnostics: tuple[str, ...] = field(default=())

    def contains(self, nu: float) -> bool:
        if self.empty:
            return False
        lo = 0.0 if self.t_lower is None else self.t_lower
        hi = math.inf if self.t_upper is None else self.t_upper
        return lo <= nu <= hi

    @property
    def width(self) -> float:
        if self.empty:
            return 0.0
        lo = 0.0 if self.t_lower is None else self.t_lower
        hi = math.inf if self.t_upper is None else self.t_upper
        return hi - lo

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = list(self.diagnostics)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Thresholds":
        d = dict(d)
        d["diagnostics"] = tuple(d.get("diagnostics", ()))
        return cls(**d)


def intermediated_quality(model: CostModel, alpha: float, nu: float) -> float:
    """Quality the intermediary must offer to match direct production: ``alpha + U(nu)``."""
    return alpha + max_direct_utility(model, nu)


def intermediary_cost(model: CostModel, alpha: float, nu: float) -> float:
    """``nu * g(alpha + U(nu))``, evaluated in log space."""
    x = intermediated_quality(model, alpha, nu)
    if math.isinf(x):
        return math.inf
    with np.errstate(over="ignore"):
        return float(np.exp(math.log(nu) + log_g(model, x)))


def disintermediation_margin(model: CostModel, params: MarketParams, nu: float) -> float:
    """``nu * g(alpha + U(nu)) - alpha * C``.

    Positive means the intermediary cannot afford to retain consumers at
    production cost ``nu``; zero or negative means it survives.
    """
    nu = _check_nu(nu)
    return intermediary_cost(model, params.alpha, nu) - params.alpha * params.consumers


def regime_at(model: CostModel, params: MarketParams, nu: float) -> Regime:
    # consumers tiebreak toward the intermediary, so margin == 0 is intermediated
    if disintermediation_margin(model, params, nu) <= 0:
        return Regime.INTERMEDIATED
    return Regime.DISINTERMEDIATED


def usage(model: CostModel, params: MarketParams, nu: float) -> int:
    """Number of consumers who buy from the intermediary at cost ``nu``."""
    return params.consumers if regime_at(model, params, nu) is Regime.INTERMEDIATED else 0


def interior_minimizer(model: CostModel, alpha: float) -> float | None:
    """Production cost where ``nu * g(alpha + U(nu))`` is smallest.

    This is the unique ``nu`` with ``g/g'`` at ``w*(nu)`` equal to ``alpha``.
    Returns ``None`` when no such ``nu`` exists, which happens when ``g/g'`` is
    bounded by ``alpha`` (PowerExp with ``alpha >= 1``); the margin is then
    increasing in ``nu`` everywhere.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    b = model.beta
    if model.family is Family.POWER:
        w_t = alpha * b
        return 1.0 / (b * w_t ** (b - 1))
    if alpha >= log_ratio_sup(model):
        return None

    def h(u: float) -> float:
        return math.log(log_ratio(model, math.exp(u))) - math.log(alpha)

    lo, hi = math.log(alpha), math.log(alpha * b) + 1.0
    while h(lo) > 0:
        lo -= 2.0 * (abs(lo) + 1.0)
    while h(hi) < 0:
        hi += 2.0 * (abs(hi) + 1.0)
        if hi > 700:
            return None
    u_t = brentq(h, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
    dg = float(eval_g_prime(model, math.exp(u_t)))
    if not (0 < dg < math.inf):
        return None
    nu_t = 1.0 / dg
    return nu_t if nu_t > 0 else None


def _root(f, a: float, b: float) -> float:
    return brentq(f, a, b, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)


def _search_lower(phi, start: float, floor: float = LOWER_FLOOR) -> float | None:
    """Walk downward from ``start`` until the margin turns positive."""
    nu = start
    while nu >= floor:
        if phi(nu) > 0:
            return nu
        nu *= 1e-6
    return None


def _search_upper(phi, start: float, cap: float = UPPER_CAP) -> float | None:
    nu = start
    while nu <= cap:
        if phi(nu) > 0:
            return nu
        nu *= 2.0
    return None


def _thresholds_from(phi, nu_min: float, scale: float, *, interior: bool) -> Thresholds:
    """Shared bracket-and-solve logic for any U-shaped (or increasing) margin."""
    notes: list[str] = []
    phi_min = phi(nu_min)
    if not interior:
        notes.append("no interior minimiser: margin is increasing in nu; nu_min is a grid argmin")
    if phi_min > 0:
        if interior:
            notes.append("margin positive at its minimum")
            return Thresholds(None, None, nu_min, phi_min, empty=True, diagnostics=tuple(notes))
        below = _search_lower(lambda v: -phi(v), nu_min)
        if below is None:
            notes.append("margin positive down to the search floor")
            return Thresholds(None, None, nu_min, phi_min, empty=True, diagnostics=tuple(notes))
        nu_min, phi_min = below, phi(below)

    eps = min(1e-12, nu_min * 1e-9)
    lo_bracket = _search_lower(phi, eps)
    t_lower = None
    if lo_bracket is None:
        notes.append(f"margin stays <= 0 down to nu={LOWER_FLOOR:g}; no lower threshold")
    else:
        t_lower = _root(phi, lo_bracket, nu_min)

    hi_bracket = _search_upper(phi, nu_min)
    t_upper = None
    if hi_bracket is None:
        notes.append(f"no sign change up to nu={UPPER_CAP:g}; upper threshold unbounded")
    else:
        t_upper = _root(phi, max(nu_min, hi_bracket / 2.0), hi_bracket)

    for name, t in (("t_lower", t_lower), ("t_upper", t_upper)):
        if t is not None and abs(phi(t)) > MARGIN_TOL * scale:
            raise SolverError(f"{name} residual {phi(t)!r} exceeds tolerance", (t, t))
    return Thresholds(t_lower, t_upper, nu_min, phi_min, diagnostics=tuple(notes))


def compute_thresholds(model: CostModel, params: MarketParams) -> Thresholds:
    """Lower and upper disintermediation thresholds for a general cost family."""
    alpha, C = params.alpha, params.consumers

    def phi(nu: float) -> float:
        return disintermediation_margin(model, params, nu)

    nu_t = interior_minimizer(model, alpha)
    interior = nu_t is not None
    if not interior:
        grid = np.geomspace(1e-12, 1e12, 241)
        vals = [phi(v) for v in grid]
        nu_t = float(grid[int(np.argmin(vals))])
    return _thresholds_from(phi, nu_t, alpha * C, interior=interior)


def _power_consts(beta: float) -> float:
    """``beta^(-1/(beta-1)) - beta^(-beta/(beta-1))``, so that ``U(nu) = k * nu^(-1/(beta-1))``."""
    return beta ** (-1.0 / (beta - 1)) - beta ** (-beta / (beta - 1))


def closed_form_thresholds_power(beta: float, alpha: float, C: float) -> Thresholds:
    """Thresholds for ``g(w) = w**beta`` from the explicit scalar equation.

    Roots of ``F(nu) = C**(1/beta)`` where
    ``F(nu) = nu^(-1/(beta(beta-1))) * k * alpha^(-1/beta) + nu^(1/beta) * alpha^((beta-1)/beta)``.
    ``C`` may be non-integer (the marginal-cost extension uses an effective count).
    """
    if not beta > 1:
        raise DomainError(f"beta must be > 1, got {beta!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    if not C > 1:
        raise DomainError(f"C must be > 1, got {C!r}")
    k = _power_consts(beta)
    a_lo = k * alpha ** (-1.0 / beta)
    a_hi = alpha ** ((beta - 1) / beta)
    p_lo = -1.0 / (beta * (beta - 1))
    p_hi = 1.0 / beta

    def lhs(nu: float) -> float:
        return nu**p_lo * a_lo + nu**p_hi * a_hi

    def phi(nu: float) -> float:
        # same sign as the margin: nu * g(alpha + U) = alpha * lhs**beta
        return alpha * lhs(nu) ** beta - alpha * C

    w_t = alpha * beta
    nu_t = 1.0 / (beta * w_t ** (beta - 1))
    return _thresholds_from(phi, nu_t, alpha * C, interior=True)


@dataclass(frozen=True)
class EquilibriumOutcome:
    regime: Regime
    supplier_prices: tuple[float, ...]
    effective_cost: EffectiveCost
    intermediary_quality: float
    intermediary_provider: int | str | None
    consumer_action: Action
    consumer_quality: float
    consumer_provider: int | str | None


def _provider(eff: EffectiveCost) -> int | str:
    return "manual" if eff.source is Source.MANUAL else eff.supplier


def subgame_outcome(model: CostModel, params: MarketParams, prices) -> EquilibriumOutcome:
    """Intermediary and consumer play after suppliers have posted ``prices``."""
    eff = effective_cost(params, prices)
    nu = eff.nu
    prices = tuple(float(p) for p in prices)
    if regime_at(model, params, nu) is Regime.INTERMEDIATED:
        w_m = intermediated_quality(model, params.alpha, nu)
        return EquilibriumOutcome(
            Regime.INTERMEDIATED, prices, eff, w_m, _provider(eff), Action.MIDDLEMAN, w_m, None
        )
    w_d = optimal_quality(model, nu)
    return EquilibriumOutcome(
        Regime.DISINTERMEDIATED, prices, eff, 0.0, None, Action.DIRECT, w_d, _provider(eff)
    )


def solve_equilibrium(model: CostModel, params: MarketParams) -> EquilibriumOutcome:
    """Subgame-perfect equilibrium with competing suppliers (``suppliers >= 2``).

    All suppliers price at marginal cost; the intermediary survives iff the
    margin at ``nu = min(supply_cost + human_cost, manual_cost)`` is <= 0.
    """
    if params.suppliers < 2:
        raise PreconditionError("solve_equilibrium needs >= 2 suppliers; use extensions.monopolist_price")
    prices = (params.supply_cost,) * params.suppliers
    return subgame_outcome(model, params, prices)
