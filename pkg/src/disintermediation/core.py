"""Cost-function families, market parameters and the consumer's direct-production problem.

Every cost family has the form ``g(w) = w**beta * h(w)`` and satisfies
``g(0) = g'(0) = 0``, strict convexity and strict log-concavity for
``beta > 1``. Functions accept Python floats or numpy arrays; scalar input
returns a plain ``float``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# First-order residual target for the direct-production optimum (log scale).
FOC_TOL = 1e-13
MAX_SOLVER_ITER = 200


class DisintermediationError(Exception):
    """Base class for errors raised by this package."""


class DomainError(DisintermediationError, ValueError):
    """An argument lies outside the domain of the function."""


class PreconditionError(DisintermediationError, ValueError):
    """A documented precondition of an operation does not hold."""


class SolverError(DisintermediationError, RuntimeError):
    """A numeric solve failed to converge.

    ``bracket`` carries the last bracket examined, when one exists.
    """

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        if bracket is not None:
            message = f"{message} (last bracket [{bracket[0]!r}, {bracket[1]!r}])"
        super().__init__(message)
        self.bracket = bracket


class Family(str, enum.Enum):
    POWER = "power"
    POWER_EXP_SQRT = "powerexpsqrt"
    POWER_LOG = "powerlog"
    POWER_EXP = "powerexp"


@dataclass(frozen=True)
class CostModel:
    """Production cost family ``g``.

    Args:
        family: which functional form.
        beta: primary exponent, must exceed 1.
        eta: exponent of ``log(w + 1)``; only read by ``Family.POWER_LOG``.
    """

    family: Family = Family.POWER
    beta: float = 2.0
    eta: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (math.isfinite(self.beta) and self.beta > 1):
            raise DomainError(f"beta must be a finite number > 1, got {self.beta!r}")
        if self.family is Family.POWER_LOG and not (math.isfinite(self.eta) and self.eta > 1):
            raise DomainError(f"eta must be a finite number > 1, got {self.eta!r}")

    @classmethod
    def power(cls, beta: float = 2.0) -> "CostModel":
        return cls(Family.POWER, beta)


class Source(str, enum.Enum):
    SUPPLIER = "supplier"
    MANUAL = "manual"


@dataclass(frozen=True)
class MarketParams:
    """Market-level parameters.

    ``manual_cost`` may be ``math.inf`` (manual production unavailable).
    """

    alpha: float
    consumers: int
    suppliers: int = 2
    supply_cost: float = 1.0
    human_cost: float = 0.0
    manual_cost: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be > 0, got {self.alpha!r}")
        if int(self.consumers) != self.consumers or self.consumers < 2:
            raise DomainError(f"consumers must be an integer >= 2, got {self.consumers!r}")
        if int(self.suppliers) != self.suppliers or self.suppliers < 1:
            raise DomainError(f"suppliers must be an integer >= 1, got {self.suppliers!r}")
        if not (math.isfinite(self.supply_cost) and self.supply_cost > 0):
            raise DomainError(f"supply_cost must be > 0, got {self.supply_cost!r}")
        if not (math.isfinite(self.human_cost) and self.human_cost >= 0):
            raise DomainError(f"human_cost must be >= 0, got {self.human_cost!r}")
        if math.isnan(self.manual_cost) or self.manual_cost <= 0:
            raise DomainError(f"manual_cost must be > 0 or inf, got {self.manual_cost!r}")
        object.__setattr__(self, "consumers", int(self.consumers))
        object.__setattr__(self, "suppliers", int(self.suppliers))

    @property
    def competitive_nu(self) -> float:
        """Effective cost when every supplier prices at marginal cost."""
        return min(self.supply_cost + self.human_cost, self.manual_cost)


@dataclass(frozen=True)
class EffectiveCost:
    nu: float
    source: Source
    supplier: int | None = None  # lowest-index cheapest supplier when source is SUPPLIER


def effective_cost(params: MarketParams, prices) -> EffectiveCost:
    """Cheapest way to produce, given supplier prices.

    Ties go to suppliers over manual production, then to the lowest index.
    """
    prices = [float(p) for p in prices]
    if not prices:
        raise PreconditionError("at least one supplier price is required")
    best = min(range(len(prices)), key=lambda i: (prices[i], i))
    via_supplier = params.human_cost + prices[best]
    if params.manual_cost < via_supplier:
        return EffectiveCost(params.manual_cost, Source.MANUAL)
    if via_supplier <= 0:
        raise DomainError(f"effective cost must be positive, got {via_supplier!r}")
    return EffectiveCost(via_supplier, Source.SUPPLIER, best)


# -- cost function evaluation -------------------------------------------------


def _as_array(w: ArrayLike, *, strict: bool = False) -> tuple[np.ndarray, bool]:
    arr = np.asarray(w, dtype=float)
    bad = arr <= 0 if strict else arr < 0
    if np.any(bad) or np.any(np.isnan(arr)):
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"quality must be {bound}, got {w!r}")
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool) -> ArrayLike:
    return float(arr) if scalar else arr


def log_g(model: CostModel, w: ArrayLike) -> ArrayLike:
    """``log g(w)``; ``-inf`` at ``w = 0``."""
    arr, scalar = _as_array(w)
    b = model.beta
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.log(arr)
        fam = model.family
        if fam is Family.POWER:
            out = b * lw
        elif fam is Family.POWER_EXP_SQRT:
            out = b * lw + np.sqrt(arr)
        elif fam is Family.POWER_EXP:
            out = b * lw + arr
        else:
            out = b * lw + model.eta * np.log(np.log1p(arr))
    out = np.where(arr == 0, -np.inf, out)
    return _out(out, scalar)


def eval_g(model: CostModel, w: ArrayLike) -> ArrayLike:
    """Production cost ``g(w)``; overflow is reported as ``inf``."""
    arr, scalar = _as_array(w)
    fam = model.family
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fam is Family.POWER:
            out = arr ** model.beta
        elif fam is Family.POWER_LOG:
            out = arr ** model.beta * np.log1p(arr) ** model.eta
        else:
            # exponential families go through log space to delay overflow
            out = np.exp(np.asarray(log_g(model, arr)))
    return _out(out, scalar)


def eval_g_prime(model: CostModel, w: ArrayLike) -> ArrayLike:
    """Derivative ``g'(w)``."""
    arr, scalar = _as_array(w)
    b = model.beta
    fam = model.family
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fam is Family.POWER:
            out = b * arr ** (b - 1)
        elif fam is Family.POWER_EXP_SQRT:
            s = np.sqrt(arr)
            out = np.exp((b - 1) * np.log(arr) + s) * (b + 0.5 * s)
        elif fam is Family.POWER_EXP:
            out = np.exp((b - 1) * np.log(arr) + arr) * (b + arr)
        else:
            eta = model.eta
            L = np.log1p(arr)
            out = b * arr ** (b - 1) * L**eta + eta * arr**b * L ** (eta - 1) / (arr + 1)
    out = np.where(arr == 0, 0.0, out)
    return _out(out, scalar)


def log_ratio(model: CostModel, w: ArrayLike) -> ArrayLike:
    """``g(w) / g'(w)``, the reciprocal of the log-derivative.

    Lies in ``(0, w]`` and is strictly increasing for every family.
    """
    arr, scalar = _as_array(w, strict=True)
    b = model.beta
    fam = model.family
    if fam is Family.POWER:
        out = arr / b
    elif fam is Family.POWER_EXP_SQRT:
        out = arr / (b + 0.5 * np.sqrt(arr))
    elif fam is Family.POWER_EXP:
        out = arr / (b + arr)
    else:
        L = np.log1p(arr)
        out = 1.0 / (b / arr + model.eta / ((arr + 1) * L))
    return _out(out, scalar)


def log_ratio_sup(model: CostModel) -> float:
    """Supremum of ``g/g'`` over ``w > 0`` (``inf`` unless the family is PowerExp)."""
    return 1.0 if model.family is Family.POWER_EXP else math.inf


def satisfies_strong_condition(model: CostModel) -> bool:
    """Whether ``g(w - g/g') / g'(w)`` diverges as ``w`` grows.

    Families with this property have both disintermediation thresholds finite
    and positive for every fee and consumer count.
    """
    return model.family in (Family.POWER, Family.POWER_EXP_SQRT, Family.POWER_LOG)


# -- direct production ----------------------------------------------------------


def _log_dg_and_slope(model: CostModel, u: float) -> tuple[float, float]:
    """``log g'(e^u)`` and its derivative in ``u``."""
    w = math.exp(u)
    b = model.beta
    fam = model.family
    if fam is Family.POWER:
        return math.log(b) + (b - 1) * u, b - 1
    if fam is Family.POWER_EXP_SQRT:
        s = math.sqrt(w)
        k = b + 0.5 * s
        return (b - 1) * u + s + math.log(k), (b - 1) + 0.5 * s + 0.25 * s / k
    if fam is Family.POWER_EXP:
        return (b - 1) * u + w + math.log(b + w), (b - 1) + w + w / (b + w)
    eta = model.eta
    L = math.log1p(w)
    q = w / (w + 1)
    k = b * L + eta * q
    val = (b - 1) * u + (eta - 1) * math.log(L) + math.log(k)
    slope = (b - 1) + (eta - 1) * q / L + w * (b / (w + 1) + eta / (w + 1) ** 2) / k
    return val, slope


def _check_nu(nu: float) -> float:
    nu = float(nu)
    if not nu > 0 or math.isnan(nu):
        raise DomainError(f"production cost nu must be > 0, got {nu!r}")
    return nu


def optimal_quality(model: CostModel, nu: float) -> float:
    """Unique maximiser ``w*(nu)`` of ``w - nu * g(w)``.

    Solves ``g'(w) = 1/nu`` by Newton's method in ``log w`` inside an expanding
    bracket, with bisection whenever a Newton step leaves the bracket.
    Returns ``inf`` when ``nu`` is so small that the optimum overflows.
    """
    nu = _check_nu(nu)
    b = model.beta
    log_nu = math.log(nu)
    if model.family is Family.POWER:
        u = -(log_nu + math.log(b)) / (b - 1)
        return math.exp(u) if u < 709.0 else math.inf

    def f(u: float) -> tuple[float, float]:
        v, s = _log_dg_and_slope(model, u)
        return v + log_nu, s

    u = -(log_nu + math.log(b)) / (b - 1)
    u = min(max(u, -700.0), 700.0)
    fu, su = f(u)
    lo = hi = None
    if fu < 0:
        lo, step = u, 1.0
        while hi is None:
            cand = u + step
            if cand > 709.0:
                return math.inf
            if f(cand)[0] >= 0:
                hi = cand
            else:
                lo = cand
                step *= 2
    else:
        hi, step = u, 1.0
        while lo is None:
            cand = u - step
            if cand < -745.0:
                raise SolverError("optimal quality underflows", (cand, hi))
            if f(cand)[0] <= 0:
                lo = cand
            else:
                hi = cand
                step *= 2

    u = 0.5 * (lo + hi)
    for _ in range(MAX_SOLVER_ITER):
        fu, su = f(u)
        if abs(fu) <= FOC_TOL:
            return math.exp(u)
        if fu < 0:
            lo = u
        else:
            hi = u
        nxt = u - fu / su
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if nxt == u:
            return math.exp(u)
        u = nxt
    raise SolverError("Newton/bisection on g'(w) = 1/nu did not converge", (math.exp(lo), math.exp(hi)))


def max_direct_utility(model: CostModel, nu: float) -> float:
    """``U(nu) = max_w (w - nu * g(w))``, the consumer's best self-production payoff."""
    w = optimal_quality(model, nu)
    if math.isinf(w):
        return math.inf
    return max(w - nu * float(eval_g(model, w)), 0.0)


def direct_cost_at_optimum(model: CostModel, nu: float) -> float:
    """``nu * g(w*(nu))``, the spend of a consumer who self-produces."""
    w = optimal_quality(model, nu)
    if math.isinf(w):
        return math.inf
    return float(log_ratio(model, w))
