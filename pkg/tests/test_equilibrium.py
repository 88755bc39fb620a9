import math

import numpy as np
import pytest

from disintermediation.core import CostModel, DomainError, Family, MarketParams, PreconditionError, Source
from disintermediation.equilibrium import (
    Action,
    Regime,
    Thresholds,
    closed_form_thresholds_power,
    compute_thresholds,
    disintermediation_margin,
    intermediary_cost,
    interior_minimizer,
    regime_at,
    solve_equilibrium,
    subgame_outcome,
    usage,
)

from frozen_values import T_LOWER_C2, T_LOWER_C4, T_UPPER_C2, T_UPPER_C4

POWER2 = CostModel.power(2.0)
BASE = MarketParams(alpha=1.0, consumers=4, manual_cost=math.inf)
STRONG = [
    CostModel(Family.POWER, 2.0),
    CostModel(Family.POWER_EXP_SQRT, 2.0),
    CostModel(Family.POWER_LOG, 1.5, 2.0),
]


class TestMargin:
    @pytest.mark.parametrize("nu, expected", [(1.0, -2.4375), (4.0, 0.515625), (0.01, 2.76)])
    def test_hand_values(self, nu, expected):
        assert disintermediation_margin(POWER2, BASE, nu) == pytest.approx(expected, rel=1e-12)

    def test_regime_sign(self):
        assert regime_at(POWER2, BASE, 1.0) is Regime.INTERMEDIATED
        assert regime_at(POWER2, BASE, 4.0) is Regime.DISINTERMEDIATED
        assert usage(POWER2, BASE, 1.0) == 4 and usage(POWER2, BASE, 4.0) == 0

    def test_rejects_bad_nu(self):
        with pytest.raises(DomainError):
            disintermediation_margin(POWER2, BASE, 0.0)

    def test_intermediary_cost_no_overflow_warning(self):
        m = CostModel(Family.POWER_EXP, 2.0)
        assert intermediary_cost(m, 1.0, 1e-300) >= 0


class TestInteriorMinimizer:
    def test_power_examples(self):
        assert interior_minimizer(POWER2, 1.0) == pytest.approx(0.25, rel=1e-15)
        assert interior_minimizer(POWER2, 0.5) == pytest.approx(0.5, rel=1e-15)

    @pytest.mark.parametrize("model", STRONG, ids=lambda m: m.family.value)
    def test_minimum_value_equals_alpha(self, model):
        for alpha in (0.3, 1.0, 4.0):
            nu_t = interior_minimizer(model, alpha)
            assert intermediary_cost(model, alpha, nu_t) == pytest.approx(alpha, rel=1e-9)

    def test_powerexp_small_alpha_has_minimizer(self):
        m = CostModel(Family.POWER_EXP, 2.0)
        nu_t = interior_minimizer(m, 0.5)
        assert nu_t is not None
        assert intermediary_cost(m, 0.5, nu_t) == pytest.approx(0.5, rel=1e-9)

    def test_powerexp_large_alpha_has_none(self):
        assert interior_minimizer(CostModel(Family.POWER_EXP, 2.0), 1.5) is None
        assert interior_minimizer(CostModel(Family.POWER_EXP, 2.0), 1.0) is None

    def test_rejects_alpha(self):
        with pytest.raises(DomainError):
            interior_minimizer(POWER2, 0.0)


class TestThresholds:
    def test_closed_form_c4(self):
        t = compute_thresholds(POWER2, BASE)
        assert t.t_lower == pytest.approx(T_LOWER_C4, rel=1e-9)
        assert t.t_upper == pytest.approx(T_UPPER_C4, rel=1e-9)
        assert t.nu_min == pytest.approx(0.25)
        assert t.phi_min == pytest.approx(1.0 - 4.0, rel=1e-12)
        assert not t.empty

    def test_closed_form_c2(self):
        t = closed_form_thresholds_power(2.0, 1.0, 2)
        assert t.t_lower == pytest.approx(T_LOWER_C2, rel=1e-9)
        assert t.t_upper == pytest.approx(T_UPPER_C2, rel=1e-9)

    def test_monotone_in_consumers(self):
        t4 = compute_thresholds(POWER2, BASE)
        t8 = compute_thresholds(POWER2, MarketParams(1.0, 8))
        assert t8.t_lower < t4.t_lower and t8.t_upper > t4.t_upper

    @pytest.mark.parametrize("beta", [1.2, 1.8, 2.6, 4.0])
    @pytest.mark.parametrize("alpha", [0.2, 1.0, 5.0])
    @pytest.mark.parametrize("C", [2, 16])
    def test_general_matches_closed_form(self, beta, alpha, C):
        a = compute_thresholds(CostModel.power(beta), MarketParams(alpha, C))
        b = closed_form_thresholds_power(beta, alpha, C)
        assert a.t_lower == pytest.approx(b.t_lower, rel=1e-9)
        assert a.t_upper == pytest.approx(b.t_upper, rel=1e-9)

    @pytest.mark.parametrize("model", STRONG, ids=lambda m: m.family.value)
    def test_invariants_strong_families(self, model):
        p = MarketParams(1.0, 4)
        t = compute_thresholds(model, p)
        assert 0 < t.t_lower < t.nu_min < t.t_upper < math.inf
        for root in (t.t_lower, t.t_upper):
            assert abs(disintermediation_margin(model, p, root)) <= 1e-9 * 4
        # sign pattern around each root
        assert disintermediation_margin(model, p, t.t_lower * (1 - 1e-6)) > 0
        assert disintermediation_margin(model, p, t.t_lower * (1 + 1e-6)) < 0
        assert disintermediation_margin(model, p, t.t_upper * (1 - 1e-6)) < 0
        assert disintermediation_margin(model, p, t.t_upper * (1 + 1e-6)) > 0

    def test_powerexp_counterexample_has_no_lower(self):
        m = CostModel(Family.POWER_EXP, 2.0)
        p = MarketParams(1.5, 4)
        t = compute_thresholds(m, p)
        assert t.t_lower is None
        assert t.t_upper is not None and t.t_upper > 0
        assert any("no lower threshold" in d for d in t.diagnostics)
        for nu in (1e-6, 1e-4, 1e-2):
            assert disintermediation_margin(m, p, nu) < 0

    def test_powerexp_empty_range(self):
        t = compute_thresholds(CostModel(Family.POWER_EXP, 2.0), MarketParams(10.0, 2))
        assert t.empty and t.t_lower is None and t.t_upper is None
        assert not t.contains(1.0)
        assert t.width == 0.0

    def test_powerexp_lower_threshold_follows_the_small_cost_limit(self):
        # as nu -> 0 the intermediary's cost tends to exp(alpha - 1); a lower
        # threshold exists only when that limit exceeds alpha * C
        m = CostModel(Family.POWER_EXP, 2.0)
        t = compute_thresholds(m, MarketParams(0.05, 2))
        assert math.exp(0.05 - 1) > 0.05 * 2
        assert t.t_lower is not None and t.t_upper is not None
        t = compute_thresholds(m, MarketParams(0.5, 4))
        assert math.exp(0.5 - 1) < 0.5 * 4
        assert t.t_lower is None and t.t_upper is not None
        # the approach is logarithmically slow and from below
        assert intermediary_cost(m, 0.5, 1e-50) < math.exp(-0.5)
        assert intermediary_cost(m, 0.5, 1e-50) == pytest.approx(math.exp(-0.5), rel=1e-2)

    def test_contains_is_closed(self):
        t = compute_thresholds(POWER2, BASE)
        assert t.contains(t.t_lower) and t.contains(t.t_upper)
        assert not t.contains(t.t_upper * 1.001)

    def test_dict_round_trip(self):
        t = compute_thresholds(CostModel(Family.POWER_EXP, 2.0), MarketParams(1.5, 4))
        assert Thresholds.from_dict(t.to_dict()) == t

    def test_closed_form_domain(self):
        with pytest.raises(DomainError):
            closed_form_thresholds_power(1.0, 1.0, 4)
        with pytest.raises(DomainError):
            closed_form_thresholds_power(2.0, -1.0, 4)

    def test_u_shape(self):
        t = compute_thresholds(POWER2, BASE)
        left = [disintermediation_margin(POWER2, BASE, v) for v in np.geomspace(1e-4, t.nu_min, 60)]
        right = [disintermediation_margin(POWER2, BASE, v) for v in np.geomspace(t.nu_min, 1e3, 60)]
        assert all(a > b for a, b in zip(left, left[1:]))
        assert all(a < b for a, b in zip(right, right[1:]))


class TestSolveEquilibrium:
    def test_intermediated(self):
        out = solve_equilibrium(POWER2, MarketParams(1.0, 4, supply_cost=1.0, manual_cost=math.inf))
        assert out.regime is Regime.INTERMEDIATED
        assert out.supplier_prices == (1.0, 1.0)
        assert out.intermediary_quality == pytest.approx(1.25)
        assert out.consumer_quality == out.intermediary_quality
        assert out.consumer_action is Action.MIDDLEMAN
        assert out.intermediary_provider == 0 and out.consumer_provider is None

    def test_disintermediated(self):
        out = solve_equilibrium(POWER2, MarketParams(1.0, 4, supply_cost=4.0, manual_cost=math.inf))
        assert out.regime is Regime.DISINTERMEDIATED
        assert out.intermediary_quality == 0.0
        assert out.consumer_quality == pytest.approx(0.125)
        assert out.consumer_action is Action.DIRECT
        assert out.consumer_provider == 0

    def test_manual_production(self):
        out = solve_equilibrium(POWER2, MarketParams(1.0, 4, supply_cost=2.0, manual_cost=1.0))
        assert out.effective_cost.source is Source.MANUAL
        assert out.effective_cost.nu == 1.0
        assert out.intermediary_provider == "manual"

    def test_needs_two_suppliers(self):
        with pytest.raises(PreconditionError):
            solve_equilibrium(POWER2, MarketParams(1.0, 4, suppliers=1))

    def test_tie_at_threshold_goes_to_intermediary(self):
        # the margin at T_U is within rounding of zero; the closed interval keeps it intermediated
        t = compute_thresholds(POWER2, BASE)
        nu = t.t_upper
        if disintermediation_margin(POWER2, BASE, nu) > 0:
            nu = math.nextafter(nu, 0)
        out = subgame_outcome(POWER2, BASE, (nu, nu))
        assert out.regime is Regime.INTERMEDIATED

    def test_regime_matches_margin_sign_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            fam = list(Family)[rng.integers(4)]
            model = CostModel(fam, float(rng.uniform(1.2, 4.0)), float(rng.uniform(1.2, 3.0)))
            p = MarketParams(float(rng.uniform(0.1, 5)), int(rng.integers(2, 40)),
                             supply_cost=float(10 ** rng.uniform(-3, 1.5)), manual_cost=math.inf)
            out = solve_equilibrium(model, p)
            phi = disintermediation_margin(model, p, p.supply_cost)
            assert (out.regime is Regime.INTERMEDIATED) == (phi <= 0)
