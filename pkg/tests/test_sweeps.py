import math

import numpy as np
import pytest

from disintermediation.core import DomainError
from disintermediation.sweeps import (
    FIGURE_IDS,
    SweepSpec,
    figure_data,
    format_value,
    parse_csv,
    rows_to_csv,
    run_sweep,
)

from frozen_values import T_LOWER_C4, T_UPPER_C4


class TestSweepSpec:
    def test_outputs_reordered_canonically(self):
        s = SweepSpec(outputs=("usage", "quality", "margin", "quality"))
        assert s.outputs == ("quality", "margin", "usage")
        assert s.columns() == ["nu", "regime", "quality", "margin", "usage"]

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(lo=2.0, hi=1.0),
            dict(points=1),
            dict(spacing="cubic"),
            dict(spacing="log", lo=0.0),
            dict(outputs=("nope",)),
            dict(variable="gamma"),  # gamma only in marginal mode
            dict(mode="monopolist", variable="nu"),
            dict(outputs=("price",)),
            dict(mode="marginal", family="powerexp", variable="gamma", lo=0.0, hi=0.5, spacing="linear"),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(DomainError):
            SweepSpec(**kwargs)

    def test_integer_consumer_grid(self):
        s = SweepSpec(variable="C", lo=2, hi=10, points=30, spacing="linear")
        assert s.grid() == [float(c) for c in range(2, 11)]

    def test_dict_round_trip(self):
        s = SweepSpec(mode="marginal", variable="gamma", lo=0.0, hi=0.5, spacing="linear", outputs=("usage",))
        assert SweepSpec.from_dict(s.to_dict()) == s


class TestRows:
    def test_quality_curve_decreasing_with_two_jumps(self):
        rows = run_sweep(SweepSpec(outputs=("quality",)))
        q = [r["quality"] for r in rows]
        assert all(a > b for a, b in zip(q, q[1:]))
        regimes = [r["regime"] for r in rows]
        switches = [i for i in range(1, len(rows)) if regimes[i] != regimes[i - 1]]
        assert len(switches) == 2
        assert rows[switches[0] - 1]["nu"] < T_LOWER_C4 <= rows[switches[0]]["nu"]
        assert rows[switches[1] - 1]["nu"] <= T_UPPER_C4 < rows[switches[1]]["nu"]

    def test_intermediary_utility_peak(self):
        rows = run_sweep(SweepSpec(outputs=("intermediary_utility",), points=2001))
        best = max(rows, key=lambda r: r["intermediary_utility"])
        assert best["intermediary_utility"] == pytest.approx(3.0, rel=1e-4)
        assert best["nu"] == pytest.approx(0.25, rel=0.01)

    def test_linear_fee_usage_constant(self):
        spec = SweepSpec(mode="linear_fee", variable="supply_cost", lo=1e-3, hi=1e3, points=13,
                         alpha=0.5, outputs=("usage", "margin"))
        rows = run_sweep(spec)
        assert {r["usage"] for r in rows} == {4}
        assert all(r["margin"] is None for r in rows)

    def test_monopolist_rows(self):
        spec = SweepSpec(mode="monopolist", variable="supply_cost", lo=1e-3, hi=10, points=9,
                         suppliers=1, outputs=("price", "usage"))
        rows = run_sweep(spec)
        for r in rows:
            assert r["price"] >= r["supply_cost"]
        assert {r["usage"] for r in rows} == {0, 4}

    def test_monopolist_requires_no_manual_option(self):
        spec = SweepSpec(mode="monopolist", variable="supply_cost", manual_cost=1.0, outputs=("price",))
        with pytest.raises(Exception):
            run_sweep(spec)

    def test_marginal_rows_match_thresholds(self):
        from disintermediation.extensions import marginal_cost_thresholds

        spec = SweepSpec(mode="marginal", gamma=0.5, outputs=("usage",))
        t = marginal_cost_thresholds(2.0, 1.0, 4, 0.5)
        for r in run_sweep(spec):
            assert (r["usage"] == 4) == t.contains(r["nu"])

    def test_marginal_zero_gamma_equals_baseline(self):
        outs = ("quality", "intermediary_utility", "consumer_utility", "social_welfare",
                "planner_with", "planner_without", "usage")
        a = run_sweep(SweepSpec(mode="marginal", gamma=0.0, outputs=outs, points=40))
        b = run_sweep(SweepSpec(outputs=outs, points=40))
        for x, y in zip(a, b):
            for k in outs:
                assert x[k] == pytest.approx(y[k], rel=1e-12, abs=1e-300)

    def test_workers_preserve_order(self):
        spec = SweepSpec(points=60, outputs=("quality", "margin"))
        assert run_sweep(spec, workers=4) == run_sweep(spec)

    def test_alpha_sweep(self):
        rows = run_sweep(SweepSpec(variable="alpha", lo=0.1, hi=5, points=10, outputs=("usage",)))
        assert [r["alpha"] for r in rows][0] == pytest.approx(0.1)


class TestCsv:
    def test_format(self):
        assert format_value(None) == "null"
        assert format_value(0.1) == "0.1"
        assert format_value(4) == "4"
        assert format_value(np.float64(1 / 3)) == repr(1 / 3)
        assert format_value(math.inf) == "inf"

    def test_round_trip_and_line_endings(self):
        spec = SweepSpec(points=7, outputs=("quality", "usage", "margin"))
        rows = run_sweep(spec)
        text = rows_to_csv(rows, spec.columns())
        assert "\r" not in text and text.endswith("\n")
        back = parse_csv(text)
        for a, b in zip(rows, back):
            assert b["quality"] == a["quality"] and b["regime"] == a["regime"]

    def test_deterministic(self):
        spec = SweepSpec(points=50, outputs=("social_welfare", "planner_with"))
        assert rows_to_csv(run_sweep(spec), spec.columns()) == rows_to_csv(run_sweep(spec), spec.columns())


class TestFigures:
    def test_unknown_id(self):
        with pytest.raises(DomainError):
            figure_data("3a")

    def test_2b_band_widens_in_consumers(self):
        rows = figure_data("2b").rows
        lo = [r["t_lower"] for r in rows]
        hi = [r["t_upper"] for r in rows]
        assert all(a > b for a, b in zip(lo, lo[1:]))
        assert all(a < b for a, b in zip(hi, hi[1:]))

    def test_5_inverse_u_with_markers(self):
        fig = figure_data("5a")
        markers = fig.metadata["threshold_markers"]
        for label, m in markers.items():
            rows = [r for r in fig.rows if r["series"] == label]
            inside = [r for r in rows if m["t_lower"] <= r["nu"] <= m["t_upper"]]
            assert all(r["intermediary_utility"] > -1e-12 for r in inside)
            assert all(r["intermediary_utility"] == 0.0 for r in rows if r not in inside)
            vals = [r["intermediary_utility"] for r in inside]
            peak = int(np.argmax(vals))
            assert 0 < peak < len(vals) - 1

    @pytest.mark.parametrize("fid", ["6a", "6b"])
    def test_6_consumer_curves_identical(self, fid):
        fig = figure_data(fid)
        series = {}
        for r in fig.rows:
            series.setdefault(r["series"], []).append(r["consumer_utility"])
        curves = list(series.values())
        assert all(c == curves[0] for c in curves)

    def test_7_welfare_below_planner(self):
        for r in figure_data("7b").rows:
            assert r["social_welfare"] <= r["planner_with"] * (1 + 1e-12)

    def test_8_bands(self):
        for r in figure_data("8a").rows:
            assert r["t_lower"] / 2 < r["t_mon_lower"] < r["t_lower"]
            assert r["t_upper"] / 2 < r["t_mon_upper"] < r["t_upper"]
        widths = [r["t_upper"] - r["t_lower"] for r in figure_data("8b").rows]
        assert all(a > b for a, b in zip(widths, widths[1:]))

    def test_every_id_builds(self):
        for fid in FIGURE_IDS:
            fig = figure_data(fid)
            assert fig.rows and "parameter_sets_note" in fig.metadata
            assert fig.csv().splitlines()[0] == ",".join(fig.columns)
