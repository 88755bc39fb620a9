"""Parameter sweeps and the data series behind the standard figures.

A sweep varies one parameter over a grid and records the regime plus any of
the canonical outputs at each point. Rows are plain dicts whose key order is
fixed by the spec, so CSV output is byte-for-byte reproducible.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import extensions as ext
from .core import (
    CostModel,
    DomainError,
    Family,
    MarketParams,
    PreconditionError,
    eval_g,
    max_direct_utility,
    optimal_quality,
)
from .equilibrium import Regime, compute_thresholds, disintermediation_margin
from .metrics import (
    consumer_utility,
    content_quality,
    intermediary_utility,
    planner_welfare,
    social_welfare,
)

CANONICAL_OUTPUTS = (
    "quality",
    "intermediary_utility",
    "consumer_utility",
    "social_welfare",
    "planner_with",
    "planner_without",
    "margin",
    "usage",
    "price",
)
NULL = "null"


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    MONOPOLIST = "monopolist"
    MARGINAL = "marginal"
    LINEAR_FEE = "linear_fee"


ALLOWED_VARIABLES = {
    Mode.BASELINE: ("nu", "alpha", "C", "supply_cost"),
    Mode.MONOPOLIST: ("supply_cost", "alpha", "C"),
    Mode.MARGINAL: ("nu", "gamma", "alpha", "C"),
    Mode.LINEAR_FEE: ("nu", "supply_cost", "alpha", "C"),
}


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to reproduce a sweep."""

    variable: str = "nu"
    lo: float = 1e-3
    hi: float = 10.0
    points: int = 400
    spacing: str = "log"
    mode: Mode = Mode.BASELINE
    outputs: tuple[str, ...] = ("quality",)
    family: Family = Family.POWER
    beta: float = 2.0
    eta: float = 2.0
    alpha: float = 1.0
    consumers: int = 4
    suppliers: int = 2
    supply_cost: float = 1.0
    human_cost: float = 0.0
    manual_cost: float = math.inf
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "family", Family(self.family))
        outs = tuple(self.outputs)
        unknown = [o for o in outs if o not in CANONICAL_OUTPUTS]
        if unknown:
            raise DomainError(f"unknown outputs {unknown}; choose from {list(CANONICAL_OUTPUTS)}")
        if "price" in outs and self.mode is not Mode.MONOPOLIST:
            raise DomainError("the price output is only available in monopolist mode")
        # canonical order, duplicates removed
        object.__setattr__(self, "outputs", tuple(o for o in CANONICAL_OUTPUTS if o in outs))
        if self.variable not in ALLOWED_VARIABLES[self.mode]:
            raise DomainError(
                f"variable {self.variable!r} is not valid in {self.mode.value} mode; "
                f"choose from {list(ALLOWED_VARIABLES[self.mode])}"
            )
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got lo={self.lo!r}, hi={self.hi!r}")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"points must be an integer >= 2, got {self.points!r}")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and not self.lo > 0:
            raise DomainError("log spacing needs lo > 0")
        if self.mode is not Mode.BASELINE and self.family is not Family.POWER:
            raise DomainError(f"{self.mode.value} mode supports the power family only")

    def model(self) -> CostModel:
        return CostModel(self.family, self.beta, self.eta)

    def grid(self) -> list[float]:
        if self.spacing == "log":
            vals = np.geomspace(self.lo, self.hi, int(self.points))
        else:
            vals = np.linspace(self.lo, self.hi, int(self.points))
        if self.variable == "C":
            # consumer counts are integers; round and drop repeats
            return [float(c) for c in sorted({int(round(v)) for v in vals}) if c >= 2]
        return [float(v) for v in vals]

    def columns(self) -> list[str]:
        return [self.variable, "regime", *self.outputs]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["family"] = self.family.value
        d["outputs"] = list(self.outputs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        if "outputs" in d:
            d["outputs"] = tuple(d["outputs"])
        return cls(**d)


def _point_spec(spec: SweepSpec, x: float) -> SweepSpec:
    if spec.variable == "nu":
        return replace(spec, supply_cost=x, human_cost=0.0, manual_cost=math.inf)
    if spec.variable == "C":
        return replace(spec, consumers=int(x))
    return replace(spec, **{spec.variable: x})


def _params(spec: SweepSpec, suppliers: int | None = None) -> MarketParams:
    return MarketParams(
        alpha=spec.alpha,
        consumers=spec.consumers,
        suppliers=spec.suppliers if suppliers is None else suppliers,
        supply_cost=spec.supply_cost,
        human_cost=spec.human_cost,
        manual_cost=spec.manual_cost,
    )


def _baseline_row(spec: SweepSpec) -> dict:
    model, params = spec.model(), _params(spec)
    nu = params.competitive_nu
    margin = disintermediation_margin(model, params, nu)
    regime = Regime.INTERMEDIATED if margin <= 0 else Regime.DISINTERMEDIATED
    return {
        "regime": regime.value,
        "quality": content_quality(model, params, nu),
        "intermediary_utility": intermediary_utility(model, params, nu),
        "consumer_utility": consumer_utility(model, params, nu),
        "social_welfare": social_welfare(model, params, nu),
        "planner_with": planner_welfare(model, params, nu, True),
        "planner_without": planner_welfare(model, params, nu, False),
        "margin": margin,
        "usage": params.consumers if regime is Regime.INTERMEDIATED else 0,
    }


def _marginal_row(spec: SweepSpec) -> dict:
    model, params = spec.model(), _params(spec)
    nu, gamma, alpha, C, b = params.competitive_nu, spec.gamma, spec.alpha, spec.consumers, spec.beta
    margin = ext.marginal_cost_margin(b, alpha, C, gamma, nu)
    inter = margin <= 0
    nu_c, nu_m = nu * (1 + gamma), nu * (1 + gamma * C)
    u = max_direct_utility(model, nu_c)
    if inter:
        w = alpha + u
        iu = alpha * C - nu_m * float(eval_g(model, w))
        sw = C * w - nu_m * float(eval_g(model, w))
    else:
        w, iu, sw = optimal_quality(model, nu_c), 0.0, C * u
    return {
        "regime": (Regime.INTERMEDIATED if inter else Regime.DISINTERMEDIATED).value,
        "quality": w,
        "intermediary_utility": iu,
        "consumer_utility": u,
        "social_welfare": sw,
        "planner_with": C * max_direct_utility(model, nu_m / C),
        "planner_without": C * u,
        "margin": margin,
        "usage": C if inter else 0,
    }


def _monopolist_row(spec: SweepSpec) -> dict:
    model = spec.model()
    b, alpha, C, rho = spec.beta, spec.alpha, spec.consumers, spec.supply_cost
    if spec.human_cost != 0 or math.isfinite(spec.manual_cost):
        raise PreconditionError("monopolist mode needs human_cost = 0 and manual_cost = inf")
    sol = ext.monopolist_price(b, alpha, C, rho)
    price = sol.price
    u = max_direct_utility(model, price)
    if sol.usage:
        w = alpha + u
        g = float(eval_g(model, w))
        iu = alpha * C - price * g
        sw = C * w - rho * g
    else:
        w = optimal_quality(model, price)
        iu = 0.0
        sw = C * (w - rho * float(eval_g(model, w)))
    params = MarketParams(alpha, C, 1, rho, 0.0, math.inf)
    return {
        "regime": sol.regime.value,
        "quality": w,
        "intermediary_utility": iu,
        "consumer_utility": u,
        "social_welfare": sw,
        "planner_with": planner_welfare(model, params, rho, True),
        "planner_without": planner_welfare(model, params, rho, False),
        "margin": disintermediation_margin(model, params, price),
        "usage": sol.usage,
        "price": price,
    }


def _linear_fee_row(spec: SweepSpec) -> dict:
    model, params = spec.model(), _params(spec)
    nu, alpha, C, b = params.competitive_nu, spec.alpha, spec.consumers, spec.beta
    use = ext.linear_fee_usage(b, alpha, C)
    w = ext.linear_fee_quality(b, alpha, C, nu)
    u = max_direct_utility(model, nu)
    if use:
        g = float(eval_g(model, w))
        iu, cu, sw = alpha * C * w - nu * g, (1 - alpha) * w, C * w - nu * g
    else:
        iu, cu, sw = 0.0, u, C * u
    return {
        "regime": (Regime.INTERMEDIATED if use else Regime.DISINTERMEDIATED).value,
        "quality": w,
        "intermediary_utility": iu,
        "consumer_utility": cu,
        "social_welfare": sw,
        "planner_with": planner_welfare(model, params, nu, True),
        "planner_without": planner_welfare(model, params, nu, False),
        "margin": None,  # no fixed-fee margin under linear fees
        "usage": use,
    }


_ROW_FUNCS = {
    Mode.BASELINE: _baseline_row,
    Mode.MARGINAL: _marginal_row,
    Mode.MONOPOLIST: _monopolist_row,
    Mode.LINEAR_FEE: _linear_fee_row,
}


def sweep_point(spec: SweepSpec, x: float) -> dict:
    full = _ROW_FUNCS[spec.mode](_point_spec(spec, x))
    row = {spec.variable: x, "regime": full["regime"]}
    for o in spec.outputs:
        row[o] = full[o]
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """Evaluate every grid point. Output order is the grid order regardless of ``workers``."""
    xs = spec.grid()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda x: sweep_point(spec, x), xs))
    return [sweep_point(spec, x) for x in xs]


def format_value(v) -> str:
    """Shortest round-trip text for floats, ``null`` for missing values."""
    if v is None:
        return NULL
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    """Inverse of :func:`rows_to_csv` for numeric columns; ``null`` becomes ``None``."""
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for r in reader:
        row = {}
        for k, v in r.items():
            if v == NULL:
                row[k] = None
            else:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        out.append(row)
    return out


# --- figure data -----------------------------------------------------------

FIGURE_IDS = ("2a", "2b", "4a", "4b", "5a", "5b", "6a", "6b", "7a", "7b", "8a", "8b")
FIGURE_BETA = 2.0
PANEL_ALPHAS = (0.5, 1.0, 2.0)  # panel (a): fixed C = 4
PANEL_CONSUMERS = (2, 4, 8)  # panel (b): fixed alpha = 1
FIGURE_NU_RANGE = (1e-3, 10.0, 400)
METRIC_FIGURES = {
    "4": ("quality",),
    "5": ("intermediary_utility",),
    "6": ("consumer_utility",),
    "7": ("social_welfare", "planner_with", "planner_without"),
}


@dataclass(frozen=True)
class FigureData:
    figure_id: str
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def csv(self) -> str:
        return rows_to_csv(self.rows, self.columns)


def _band_row(model: CostModel, params: MarketParams) -> dict:
    t = compute_thresholds(model, params)
    return {"t_lower": t.t_lower, "t_upper": t.t_upper, "nu_min": t.nu_min, "empty": int(t.empty)}


def _figure_2(panel: str) -> FigureData:
    model = CostModel.power(FIGURE_BETA)
    rows = []
    if panel == "a":
        for a in np.geomspace(0.05, 20.0, 121):
            rows.append({"alpha": float(a), **_band_row(model, MarketParams(float(a), 4))})
        cols, varied = ["alpha", "t_lower", "t_upper", "nu_min", "empty"], {"alpha": [0.05, 20.0, 121, "log"], "C": 4}
    else:
        for c in range(2, 65):
            rows.append({"C": float(c), **_band_row(model, MarketParams(1.0, c))})
        cols, varied = ["C", "t_lower", "t_upper", "nu_min", "empty"], {"C": [2, 64, "integers"], "alpha": 1.0}
    return FigureData(f"2{panel}", cols, rows, {"axes": varied, "beta": FIGURE_BETA})


def _series(panel: str) -> list[tuple[str, float, int]]:
    if panel == "a":
        return [(f"alpha={a!r}", a, 4) for a in PANEL_ALPHAS]
    return [(f"C={c}", 1.0, c) for c in PANEL_CONSUMERS]


def _metric_figure(num: str, panel: str) -> FigureData:
    outputs = METRIC_FIGURES[num]
    lo, hi, n = FIGURE_NU_RANGE
    rows, specs, dashed = [], [], {}
    model = CostModel.power(FIGURE_BETA)
    for label, alpha, C in _series(panel):
        spec = SweepSpec(variable="nu", lo=lo, hi=hi, points=n, spacing="log", outputs=outputs,
                         beta=FIGURE_BETA, alpha=alpha, consumers=C)
        specs.append(spec.to_dict())
        t = compute_thresholds(model, MarketParams(alpha, C))
        dashed[label] = {"t_lower": t.t_lower, "t_upper": t.t_upper}
        for r in run_sweep(spec):
            rows.append({"series": label, "alpha": alpha, "C": C, **r})
    cols = ["series", "alpha", "C", "nu", "regime", *outputs]
    return FigureData(f"{num}{panel}", cols, rows, {"sweeps": specs, "threshold_markers": dashed})


def _figure_8(panel: str) -> FigureData:
    b, alpha = FIGURE_BETA, 1.0
    rows = []
    model = CostModel.power(b)
    if panel == "a":
        for c in range(3, 33):
            base = compute_thresholds(model, MarketParams(alpha, c))
            lo, hi = ext.monopolist_thresholds(b, alpha, c)
            rows.append({"C": float(c), "t_lower": base.t_lower, "t_upper": base.t_upper,
                         "t_mon_lower": lo, "t_mon_upper": hi})
        cols = ["C", "t_lower", "t_upper", "t_mon_lower", "t_mon_upper"]
        meta = {"axes": {"C": [3, 32, "integers"], "alpha": alpha}, "beta": b}
    else:
        C = 4
        for gamma in np.linspace(0.0, 0.9, 46):
            t = ext.marginal_cost_thresholds(b, alpha, C, float(gamma))
            c_eff = ext.MarginalCostParams(float(gamma), C).effective_consumers
            rows.append({"gamma": float(gamma), "t_lower": t.t_lower, "t_upper": t.t_upper,
                         "effective_consumers": c_eff})
        cols = ["gamma", "t_lower", "t_upper", "effective_consumers"]
        meta = {"axes": {"gamma": [0.0, 0.9, 46, "linear"], "alpha": alpha, "C": C}, "beta": b}
    return FigureData(f"8{panel}", cols, rows, meta)


def figure_data(figure_id: str) -> FigureData:
    if figure_id not in FIGURE_IDS:
        raise DomainError(f"unknown figure id {figure_id!r}; choose from {list(FIGURE_IDS)}")
    num, panel = figure_id[:-1], figure_id[-1]
    if num == "2":
        fig = _figure_2(panel)
    elif num == "8":
        fig = _figure_8(panel)
    else:
        fig = _metric_figure(num, panel)
    fig.metadata["parameter_sets_note"] = (
        "axis parameter values are reconstructions chosen to show the qualitative shape; "
        "they are not tabulated source data"
    )
    return fig
