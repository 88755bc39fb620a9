"""Command-line front end.

Subcommands: ``thresholds``, ``sweep``, ``oracle-check``, ``figures``. Global
flags ``--json``, ``--out`` and ``--config`` may appear before or after the
subcommand. A config file is a flat JSON object whose keys are option names
(dashes or underscores); explicit flags win over config values.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import CostModel, DisintermediationError, Family, MarketParams
from .equilibrium import MARGIN_TOL, ROOT_RTOL, closed_form_thresholds_power, compute_thresholds
from .oracle import (
    DEFAULT_POINTS,
    STANDARD_GAMMAS,
    STANDARD_MONOPOLIST_COSTS,
    STANDARD_NUS,
    ComparisonReport,
    OracleConfig,
    compare_baseline_sweep,
    compare_linear_fee,
    compare_marginal_sweep,
    compare_monopolist_sweep,
)
from .sweeps import CANONICAL_OUTPUTS, FIGURE_IDS, Mode, SweepSpec, figure_data, rows_to_csv, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# defaults applied after config merging; flags themselves default to None
DEFAULTS = {
    "family": "power", "beta": 2.0, "eta": 2.0, "alpha": 1.0, "consumers": 4, "suppliers": 2,
    "supply_cost": 1.0, "human_cost": 0.0, "manual_cost": math.inf, "gamma": 0.0,
    "method": "general",
    "variable": "nu", "lo": 1e-3, "hi": 10.0, "points": 400, "spacing": "log", "mode": "baseline",
    "outputs": "quality", "workers": 1,
    "suite": "baseline", "grid_points": DEFAULT_POINTS,
    "json": False, "out": None,
}


class UsageError(Exception):
    pass


def _tolerances() -> dict:
    return {"root_rtol": ROOT_RTOL, "margin_tol": MARGIN_TOL}


def _add_global(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--json", action="store_const", const=True, default=d, help="machine-readable output")
    p.add_argument("--out", default=d, help="write output to this path (directory for figures)")
    p.add_argument("--config", default=d, help="flat JSON file of option values")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--beta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--consumers", type=int)
    p.add_argument("--suppliers", type=int)
    p.add_argument("--supply-cost", dest="supply_cost", type=float)
    p.add_argument("--human-cost", dest="human_cost", type=float)
    p.add_argument("--manual-cost", dest="manual_cost", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disintermediation", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="lower/upper disintermediation thresholds")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--method", choices=["general", "closed"], help="closed form needs the power family")

    p = sub.add_parser("sweep", help="write a CSV of outputs along one parameter")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--variable", choices=["nu", "alpha", "C", "gamma", "supply_cost"])
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--spacing", choices=["linear", "log"])
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--outputs", help=f"comma-separated subset of {','.join(CANONICAL_OUTPUTS)}")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("oracle-check", help="compare the brute-force oracle with the analytic engine")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--suite", choices=["baseline", "monopolist", "marginal", "linear_fee", "all"])
    p.add_argument("--grid-points", dest="grid_points", type=int, help="quality grid size")

    p = sub.add_parser("figures", help="data series behind a standard figure")
    _add_global(p, suppress=True)
    p.add_argument("figure_id", help=f"one of {', '.join(FIGURE_IDS)} or 'all'")
    return parser


def _merge(ns: argparse.Namespace) -> dict:
    opts = {k: v for k, v in vars(ns).items()}
    if opts.get("config"):
        try:
            cfg = json.loads(Path(opts["config"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {opts['config']!r}: {e}") from e
        if not isinstance(cfg, dict):
            raise UsageError("config must be a flat JSON object")
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if isinstance(v, (dict, list)):
                raise UsageError(f"config value for {k!r} must be a scalar")
            if opts.get(key) is None:
                opts[key] = v
    for k, v in DEFAULTS.items():
        if opts.get(k) is None:
            opts[k] = v
    if isinstance(opts["manual_cost"], str):
        opts["manual_cost"] = float(opts["manual_cost"])
    return opts


def _model_params(o: dict) -> tuple[CostModel, MarketParams]:
    model = CostModel(Family(o["family"]), float(o["beta"]), float(o["eta"]))
    params = MarketParams(
        alpha=float(o["alpha"]), consumers=int(o["consumers"]), suppliers=int(o["suppliers"]),
        supply_cost=float(o["supply_cost"]), human_cost=float(o["human_cost"]),
        manual_cost=float(o["manual_cost"]),
    )
    return model, params


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as e:
            raise UsageError(f"cannot write {out!r}: {e}") from e
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    return "null" if v is None else repr(v)


def cmd_thresholds(o: dict) -> int:
    model, params = _model_params(o)
    if o["method"] == "closed":
        if model.family is not Family.POWER:
            raise UsageError("--method closed requires --family power")
        t = closed_form_thresholds_power(model.beta, params.alpha, params.consumers)
    else:
        t = compute_thresholds(model, params)
    if o["json"]:
        text = json.dumps(t.to_dict(), sort_keys=True) + "\n"
    else:
        text = (
            f"t_lower {_fmt(t.t_lower)}\nt_upper {_fmt(t.t_upper)}\n"
            f"nu_min {_fmt(t.nu_min)}\nphi_min {_fmt(t.phi_min)}\n"
        )
        if t.empty:
            text += "intermediated range is empty\n"
    _emit(text, o["out"])
    return EXIT_OK


def _sweep_spec(o: dict) -> SweepSpec:
    outputs = o["outputs"]
    if isinstance(outputs, str):
        outputs = [s.strip() for s in outputs.split(",") if s.strip()]
    return SweepSpec(
        variable=o["variable"], lo=float(o["lo"]), hi=float(o["hi"]), points=int(o["points"]),
        spacing=o["spacing"], mode=o["mode"], outputs=tuple(outputs), family=o["family"],
        beta=float(o["beta"]), eta=float(o["eta"]), alpha=float(o["alpha"]), consumers=int(o["consumers"]),
        suppliers=int(o["suppliers"]), supply_cost=float(o["supply_cost"]), human_cost=float(o["human_cost"]),
        manual_cost=float(o["manual_cost"]), gamma=float(o["gamma"]),
    )


def cmd_sweep(o: dict) -> int:
    spec = _sweep_spec(o)
    rows = run_sweep(spec, workers=int(o["workers"]))
    if o["json"]:
        payload = {"spec": spec.to_dict(), "columns": spec.columns(), "rows": rows}
        text = json.dumps(payload, sort_keys=True, allow_nan=True) + "\n"
    else:
        text = rows_to_csv(rows, spec.columns())
    _emit(text, o["out"])
    return EXIT_OK


def run_oracle_suite(suite: str, o: dict) -> list[ComparisonReport]:
    model, params = _model_params(o)
    cfg = OracleConfig(points=int(o["grid_points"]))
    b, a, C = model.beta, params.alpha, params.consumers
    reports = []
    if suite in ("baseline", "all"):
        reports.append(compare_baseline_sweep(model, params, STANDARD_NUS, cfg))
    if suite in ("monopolist", "all"):
        reports.append(compare_monopolist_sweep(b, a, C, STANDARD_MONOPOLIST_COSTS, cfg))
    if suite in ("marginal", "all"):
        reports.append(compare_marginal_sweep(b, a, C, STANDARD_GAMMAS, STANDARD_NUS, cfg))
    if suite in ("linear_fee", "all"):
        # linear fees need alpha in (0, 1); the standard check uses alpha = 0.5
        la = a if 0 < a < 1 else 0.5
        reports.append(compare_linear_fee(b, la, C, (0.01, 1.0, 100.0), cfg))
    return reports


def cmd_oracle_check(o: dict) -> int:
    if o["suite"] != "baseline" and o["family"] != "power":
        raise UsageError("extension suites support the power family only")
    reports = run_oracle_suite(o["suite"], o)
    passed = all(r.passed for r in reports)
    if o["json"]:
        text = json.dumps({"passed": passed, "reports": [r.to_dict() for r in reports]}, sort_keys=True) + "\n"
    else:
        text = "\n".join(r.summary() for r in reports) + f"\n{'PASS' if passed else 'FAIL'}\n"
    _emit(text, o["out"])
    return EXIT_OK if passed else EXIT_FAIL


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_figures(o: dict) -> int:
    fid = o["figure_id"]
    ids = list(FIGURE_IDS) if fid == "all" else [fid]
    if any(i not in FIGURE_IDS for i in ids):
        raise UsageError(f"unknown figure id {fid!r}; choose from {', '.join(FIGURE_IDS)} or all")
    out_dir = Path(o["out"] or ".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for i in ids:
            fig = figure_data(i)
            meta = {
                "figure_id": i,
                "columns": fig.columns,
                "engine_version": __version__,
                "tolerances": _tolerances(),
                **fig.metadata,
            }
            _write(out_dir / f"figure_{i}.csv", fig.csv())
            _write(out_dir / f"figure_{i}.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")
            written.append(str(out_dir / f"figure_{i}.csv"))
    except OSError as e:
        raise UsageError(f"cannot write figures to {str(out_dir)!r}: {e}") from e
    if o["json"]:
        sys.stdout.write(json.dumps({"written": written}) + "\n")
    else:
        sys.stdout.write("".join(f"wrote {w}\n" for w in written))
    return EXIT_OK


COMMANDS = {
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
    "figures": cmd_figures,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        opts = _merge(ns)
        return COMMANDS[ns.command](opts)
    except (UsageError, DisintermediationError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
