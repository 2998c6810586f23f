"""Command-line front end.

Each command reads a JSON scenario file and writes plot-ready CSV and JSON
files into the output directory, plus a ``run_meta.json`` sidecar holding
everything that is not deterministic (timestamps, interpreter version).

Exit codes: 0 ok, 2 invalid config or infeasible market, 3 no clearing
cycle, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .cycle import demand_bound_residual, solve_cycle, validate_cycle
from .distributions import from_dict
from .equilibrium import STABILITY_HEADER, best_response_gap, stability_report
from .errors import ConfigError, CycleError, SurgeCycleError
from .floor import floor_interval, verify_floor_breaks_cycles
from .market import MarketParams, MarketState, compute_soss, drift_at, waiting_ratio_residual
from .policy import PriceLimits, build_boundary_curves, classify_pn, action_for
from .simulator import TRAJECTORY_HEADER, ThresholdStrategy, simulate, time_to_soss
from .welfare import check_thm43, welfare_report

COMMANDS = ("soss", "field", "simulate", "cycle", "welfare", "floor", "sweep")
FIELD_HEADER = ("p", "n", "drift", "policy_action")
SWEEP_HEADER = ("p_low", "p_high", "residual", "clears", "n1", "stable")
FLOOR_SWEEP_HEADER = ("p_low", "p_high", "residual")
MARKET_KEYS = ("lambda_d", "lambda_r", "c_d", "c_r", "tau", "alpha")
DEFAULT_SOLVER = {"dt": 1e-3, "tol_clear": None, "tol_u": 1e-6, "grid_n": 4096}


@dataclass
class ScenarioConfig:
    name: str
    market: MarketParams
    limits: PriceLimits
    cycle: dict | None = None
    floor: float | None = None
    simulate: dict | None = None
    field: dict | None = None
    sweep: dict | None = None
    solver: dict = dc_field(default_factory=lambda: dict(DEFAULT_SOLVER))
    output_dir: str | None = None


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("market", "distribution", "limits"):
        if key not in raw:
            raise ConfigError(f"config is missing '{key}'")
    mk = raw["market"]
    missing = [k for k in MARKET_KEYS if k not in mk]
    if missing:
        raise ConfigError(f"market is missing {missing}")
    try:
        values = {k: float(mk[k]) for k in MARKET_KEYS}
        lim = PriceLimits(float(raw["limits"]["ell_plus"]), float(raw["limits"]["ell_minus"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SurgeCycleError):
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"bad numeric field: {exc}") from exc
    m = MarketParams(dist=from_dict(raw["distribution"]), **values)
    solver = dict(DEFAULT_SOLVER)
    solver.update(raw.get("solver") or {})
    if not float(solver["dt"]) > 0:
        raise ConfigError("solver.dt must be positive")
    return ScenarioConfig(
        name=str(raw.get("name", "scenario")), market=m, limits=lim,
        cycle=raw.get("cycle"), floor=raw.get("floor"), simulate=raw.get("simulate"),
        field=raw.get("field"), sweep=raw.get("sweep"), solver=solver,
        output_dir=raw.get("output_dir"),
    )


def _clean(v):
    """JSON-safe value: numpy scalars unwrapped, non-finite floats to None."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def cmd_soss(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    s = compute_soss(cfg.market)
    write_json(out / "soss.json", {
        "scenario": cfg.name,
        "p_star": s.p_star, "n_star": s.n_star, "u_star": s.u_star,
        "welfare_rate": s.welfare_rate,
        "waiting_ratio_residual": waiting_ratio_residual(cfg.market, s),
    })
    return ["soss.json"]


def _range(spec, key, default):
    v = (spec or {}).get(key, default)
    return float(v[0]), float(v[1])


def field_rows(cfg: ScenarioConfig, p_range, n_range, resolution):
    m, l = cfg.market, cfg.limits
    b = build_boundary_curves(m, l)
    kp, kn = resolution
    for p in np.linspace(p_range[0], p_range[1], kp):
        p = float(p)
        inside = b.p_min <= p <= b.p_max
        for n in np.linspace(n_range[0], n_range[1], kn):
            n = float(n)
            act = action_for(classify_pn(b, p, n), l) if inside else None
            yield p, n, drift_at(m, p, n), act


def cmd_field(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    spec = cfg.field or {}
    s = compute_soss(cfg.market)
    p_range = args.p_range or _range(spec, "p_range", (0.0, cfg.market.dist.practical_top()))
    n_range = args.n_range or _range(spec, "n_range", (0.0, max(20.0 * s.n_star, 1.0)))
    res = args.resolution or spec.get("resolution", (101, 101))
    if isinstance(res, int):
        res = (res, res)
    write_csv(out / "field.csv", FIELD_HEADER, field_rows(cfg, p_range, n_range, tuple(res)))
    return ["field.csv"]


def cmd_simulate(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    m, l = cfg.market, cfg.limits
    spec = dict(cfg.simulate or {})
    for key in ("p0", "n0", "t_end"):
        if getattr(args, key) is not None:
            spec[key] = getattr(args, key)
    if "p0" not in spec or "n0" not in spec:
        raise ConfigError("simulate needs an initial state (p0, n0)")
    st = spec.get("strategy")
    strategy = ThresholdStrategy(float(st["p_low"]), float(st["p_high"])) if st else None
    s = compute_soss(m)
    b = build_boundary_curves(m, l, soss=s)
    s0 = MarketState(float(spec["p0"]), float(spec["n0"]), float(spec.get("n_off0", 0.0)))
    fl = spec.get("floor")
    traj = simulate(m, l, b, strategy, s0, float(spec.get("t_end", 20.0)),
                    dt=float(cfg.solver["dt"]), floor=None if fl is None else float(fl))
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, traj.rows())
    write_json(out / "simulate.json", {
        "scenario": cfg.name,
        "p0": s0.p, "n0": s0.n, "n_off0": s0.n_off, "t_end": float(traj.t[-1]),
        "time_to_soss": time_to_soss(traj, s),
        "final": {"p": traj.p[-1], "n": traj.n[-1], "n_off": traj.n_off[-1]},
        "samples": len(traj),
    })
    return ["trajectory.csv", "simulate.json"]


def _cycle_from_config(cfg: ScenarioConfig, args=None):
    spec = dict(cfg.cycle or {})
    if args is not None:
        for key in ("p_low", "p_high", "n1_hint"):
            if getattr(args, key, None) is not None:
                spec[key] = getattr(args, key)
    if "p_low" not in spec or "p_high" not in spec:
        raise ConfigError("cycle thresholds (p_low, p_high) are required")
    hint = spec.get("n1_hint")
    tol = cfg.solver.get("tol_clear")
    return solve_cycle(cfg.market, cfg.limits, float(spec["p_low"]), float(spec["p_high"]),
                       None if hint is None else float(hint), dt=float(cfg.solver["dt"]),
                       tol_clear=None if tol is None else float(tol))


def cmd_cycle(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    m = cfg.market
    c = _cycle_from_config(cfg, args)
    b = build_boundary_curves(m, cfg.limits)
    validity = validate_cycle(c, b)
    rep = stability_report(m, c, grid_n=int(cfg.solver["grid_n"]), tol=float(cfg.solver["tol_u"]))
    g_min, g_pos = best_response_gap(rep)
    write_json(out / "cycle.json", {"scenario": cfg.name, **c.summary(),
                                    "validity": validity.flags, "valid": validity.ok})
    write_csv(out / "cycle_trajectory.csv", TRAJECTORY_HEADER, c.traj.rows())
    write_json(out / "stability.json", {"scenario": cfg.name, **rep.summary(),
                                        "g_min": g_min, "g_positive": g_pos})
    write_csv(out / "stability.csv", STABILITY_HEADER, rep.rows())
    return ["cycle.json", "cycle_trajectory.csv", "stability.json", "stability.csv"]


def cmd_welfare(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    m = cfg.market
    s = compute_soss(m)
    c = _cycle_from_config(cfg, args)
    rep = welfare_report(m, s, c)
    thm = check_thm43(m, s, cfg.limits, c)
    write_json(out / "welfare.json", {
        "scenario": cfg.name,
        "table": rep.table(),
        "driver_condition": {
            "lhs": thm.thm43_condition_lhs, "rhs": thm.thm43_condition_rhs,
            "convexity_ok": thm.convexity_ok, "hypothesis_holds": thm.hypothesis_holds,
            "waiting_cost_cycle": thm.waiting_cost_cycle, "waiting_cost_soss": thm.waiting_cost_soss,
            "trip_payoff_cycle": thm.trip_payoff_cycle, "trip_payoff_soss": thm.trip_payoff_soss,
            "driver_payoff_gap": thm.driver_payoff_gap, "conclusion_holds": thm.conclusion_holds,
        },
    })
    return ["welfare.json"]


def cmd_floor(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    m, l = cfg.market, cfg.limits
    p_floor = args.p_floor if args.p_floor is not None else cfg.floor
    if p_floor is None:
        rep = floor_interval(m, None, l)
    else:
        rep = verify_floor_breaks_cycles(m, l, float(p_floor), sweep_grid=args.grid,
                                         dt=float(cfg.solver["dt"]))
    write_json(out / "floor.json", {"scenario": cfg.name, **rep.summary()})
    write_csv(out / "floor_sweep.csv", FLOOR_SWEEP_HEADER, rep.sweep_result)
    return ["floor.json", "floor_sweep.csv"]


def _sweep_point(cfg: ScenarioConfig, p_low: float, p_high: float):
    m = cfg.market
    hint = (cfg.cycle or {}).get("n1_hint")
    try:
        c = solve_cycle(m, cfg.limits, p_low, p_high, hint, dt=float(cfg.solver["dt"]))
    except CycleError:
        # no cycle: report the largest residual over n1 instead
        return (p_low, p_high, demand_bound_residual(m, cfg.limits, p_low, p_high), False, None, None)
    try:
        stable = stability_report(m, c, grid_n=int(cfg.solver["grid_n"])).stable
    except SurgeCycleError:
        stable = False
    return (p_low, p_high, c.residual, True, c.n1, stable)


def _grid(spec, key):
    a, b, k = spec[key]
    return [float(x) for x in np.linspace(float(a), float(b), int(k))]


def cmd_sweep(cfg: ScenarioConfig, out: Path, args) -> list[str]:
    spec = cfg.sweep
    if not spec:
        raise ConfigError("sweep needs a 'sweep' block with p_low and p_high grids")
    pairs = [(a, b) for a in _grid(spec, "p_low") for b in _grid(spec, "p_high") if a < b]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_sweep_point, [cfg] * len(pairs), *zip(*pairs)))
    else:
        rows = [_sweep_point(cfg, a, b) for a, b in pairs]
    write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    write_json(out / "sweep.json", {
        "scenario": cfg.name, "pairs": len(rows),
        "clearing": sum(1 for r in rows if r[3]),
        "stable": sum(1 for r in rows if r[5]),
    })
    return ["sweep.csv", "sweep.json"]


HANDLERS = {
    "soss": cmd_soss, "field": cmd_field, "simulate": cmd_simulate, "cycle": cmd_cycle,
    "welfare": cmd_welfare, "floor": cmd_floor, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surgecycle", description="Surge pricing cycles in a fluid ride-hailing market.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    parsers = {}
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir or .)")
        parsers[name] = p
    f = parsers["field"]
    f.add_argument("--p-range", nargs=2, type=float, default=None)
    f.add_argument("--n-range", nargs=2, type=float, default=None)
    f.add_argument("--resolution", nargs=2, type=int, default=None)
    s = parsers["simulate"]
    s.add_argument("--p0", type=float, default=None)
    s.add_argument("--n0", type=float, default=None)
    s.add_argument("--t-end", dest="t_end", type=float, default=None)
    for name in ("cycle", "welfare"):
        c = parsers[name]
        c.add_argument("--p-low", dest="p_low", type=float, default=None)
        c.add_argument("--p-high", dest="p_high", type=float, default=None)
        c.add_argument("--n1-hint", dest="n1_hint", type=float, default=None)
    fl = parsers["floor"]
    fl.add_argument("--p-floor", dest="p_floor", type=float, default=None)
    fl.add_argument("--grid", type=int, default=50)
    parsers["sweep"].add_argument("--jobs", type=int, default=1)
    return ap


def _write_meta(out: Path, args, files) -> None:
    write_json(out / "run_meta.json", {
        "command": args.command,
        "config": str(args.config),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "argv": sys.argv[1:],
        "outputs": files,
    })


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output_dir or ".")
        out.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[args.command](cfg, out, args)
    except SurgeCycleError as exc:
        print(f"surgecycle {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"surgecycle {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"surgecycle {args.command}: {exc}", file=sys.stderr)
        return 2
    _write_meta(out, args, files)
    for name in files:
        print(out / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
