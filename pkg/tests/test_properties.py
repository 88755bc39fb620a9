"""Randomised invariants over parameter draws."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from disintermediation.core import (
    CostModel,
    Family,
    MarketParams,
    eval_g,
    eval_g_prime,
    log_ratio,
    max_direct_utility,
    optimal_quality,
)
from disintermediation.equilibrium import (
    Regime,
    compute_thresholds,
    disintermediation_margin,
    intermediary_cost,
    interior_minimizer,
    regime_at,
)
from disintermediation.metrics import (
    content_quality,
    planner_welfare,
    social_welfare,
    welfare_report,
)

CASES = 120
SETTINGS = settings(max_examples=CASES, deadline=None, suppress_health_check=[HealthCheck.too_slow])

STRONG = [Family.POWER, Family.POWER_EXP_SQRT, Family.POWER_LOG]

betas = st.floats(1.2, 4.0)
alphas = st.floats(0.2, 5.0)
consumers = st.integers(2, 32)
log_nus = st.floats(-3.0, 2.0)


@st.composite
def models(draw, families=tuple(Family)):
    fam = draw(st.sampled_from(families))
    return CostModel(fam, draw(betas), draw(st.floats(1.2, 3.0)))


@st.composite
def markets(draw, families=tuple(Family)):
    return draw(models(families)), MarketParams(draw(alphas), draw(consumers), manual_cost=math.inf)


@SETTINGS
@given(models(), log_nus)
def test_envelope_finite_difference(model, log_nu):
    nu = 10.0**log_nu
    h = 1e-6 * nu
    fd = (max_direct_utility(model, nu + h) - max_direct_utility(model, nu - h)) / (2 * h)
    exact = -float(eval_g(model, optimal_quality(model, nu)))
    assert fd == pytest.approx(exact, rel=1e-5)


@SETTINGS
@given(models(), st.floats(-4.0, 4.0), st.floats(1e-3, 1.0))
def test_log_ratio_increasing_and_below_identity(model, log_w, rel_step):
    w1 = 10.0**log_w
    w2 = w1 * (1 + rel_step)
    r1, r2 = float(log_ratio(model, w1)), float(log_ratio(model, w2))
    assert r1 < r2
    assert 0 < r1 <= w1


@SETTINGS
@given(models(), st.floats(-4.0, 2.0), st.floats(1e-3, 1.0))
def test_marginal_cost_increasing(model, log_w, rel_step):
    # above ~700 the exponential family overflows to inf by design
    w1 = 10.0**log_w
    assert float(eval_g_prime(model, w1)) < float(eval_g_prime(model, w1 * (1 + rel_step)))


@SETTINGS
@given(models(), log_nus)
def test_first_order_condition_and_nonnegative_utility(model, log_nu):
    nu = 10.0**log_nu
    w = optimal_quality(model, nu)
    assert float(eval_g_prime(model, w)) * nu == pytest.approx(1.0, rel=1e-10)
    assert max_direct_utility(model, nu) >= 0


@SETTINGS
@given(markets(), log_nus, st.floats(1e-3, 1.0))
def test_quality_decreasing_within_regime(market, log_nu, rel_step):
    model, params = market
    nu1 = 10.0**log_nu
    nu2 = nu1 * (1 + rel_step)
    assume(regime_at(model, params, nu1) is regime_at(model, params, nu2))
    assert content_quality(model, params, nu1) > content_quality(model, params, nu2)


@SETTINGS
@given(markets(), log_nus, st.floats(1e-3, 1.0))
def test_welfare_decreasing(market, log_nu, rel_step):
    model, params = market
    nu1 = 10.0**log_nu
    nu2 = nu1 * (1 + rel_step)
    a, b = social_welfare(model, params, nu1), social_welfare(model, params, nu2)
    # continuous across thresholds, so the order holds even when the regime changes
    assert a > b or a == pytest.approx(b, rel=1e-9)


@SETTINGS
@given(markets(tuple(STRONG)))
def test_quality_jump_directions(market):
    model, params = market
    t = compute_thresholds(model, params)
    assume(t.t_lower is not None and t.t_upper is not None)
    for edge in (t.t_lower, t.t_upper):
        direct = optimal_quality(model, edge)
        mediated = params.alpha + max_direct_utility(model, edge)
        if edge == t.t_lower:
            assert direct > mediated  # quality drops on entering the band
        else:
            assert direct < mediated  # and drops again on leaving it


@SETTINGS
@given(markets(tuple(STRONG)))
def test_margin_u_shape_and_minimum(market):
    model, params = market
    nu_t = interior_minimizer(model, params.alpha)
    assert nu_t is not None
    assert intermediary_cost(model, params.alpha, nu_t) == pytest.approx(params.alpha, rel=1e-9)
    left = np.geomspace(nu_t * 1e-3, nu_t, 12)
    right = np.geomspace(nu_t, nu_t * 1e3, 12)
    phi_l = [disintermediation_margin(model, params, float(v)) for v in left]
    phi_r = [disintermediation_margin(model, params, float(v)) for v in right]
    assert all(a > b for a, b in zip(phi_l, phi_l[1:]))
    assert all(a < b for a, b in zip(phi_r, phi_r[1:]))


@SETTINGS
@given(markets(), log_nus)
def test_welfare_accounting_and_planner_bounds(market, log_nu):
    model, params = market
    nu = 10.0**log_nu
    rep = welfare_report(model, params, nu)
    assert abs(rep.accounting_gap(params.consumers)) <= 1e-10 * max(1.0, abs(rep.social_welfare))
    with_i = planner_welfare(model, params, nu, True)
    without = planner_welfare(model, params, nu, False)
    assert rep.social_welfare <= with_i * (1 + 1e-12)
    assert rep.social_welfare >= without * (1 - 1e-12)
    if rep.regime is Regime.INTERMEDIATED:
        assert rep.intermediary_utility >= -1e-9 * params.alpha * params.consumers
