"""Command-line front end: simulate, optimize, pmv, weather-gen, report."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import shutil
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from . import bridge as bridge_mod
from .building import Building, default_reunion_house
from .comfort import ComfortConvergenceError, ComfortParams, IndoorCondition, pmv, ppd, sensation
from .config import ConfigError, load_building, load_coupling
from .materials import MAX_THICKNESS, MIN_THICKNESS, WallAssembly
from .objective import MODES, SIGNED, ObjectiveReport, evaluate, hourly_pmv
from .optimizer import (OptimizerConfig, OptimizeResult, ParamSpec, TraceFormatError, map_params,
                        optimize, read_trace)
from .thermal_sim import SimConfig, SimulationError, ZoneConditionSeries, simulate
from .weather import WeatherFormatError, WeatherSeries, parse_weather_csv, synthetic_tropical, write_weather_csv

log = logging.getLogger("wallopt")

# CLI layer name -> material of that layer in the wall stack.
LAYER_MATERIALS = {"wood": "wood", "insulation": "glass_wool", "concrete": "concrete_block"}

EXIT_INPUT = 2
EXIT_RUNTIME = 1
INPUT_ERRORS = (FileNotFoundError, ConfigError, WeatherFormatError, TraceFormatError)

ZONE_PMV_HEADER = ("hour", "zone", "pmv", "ppd", "occupants")
SUMMARY_HEADER = ("layer", "baseline_thickness_m", "optimized_thickness_m", "baseline_wall_mm",
                  "optimized_wall_mm", "wall_change_pct", "baseline_total_pmv", "optimized_total_pmv",
                  "pmv_change_pct", "evaluations", "converged")
COMPARISON_HEADER = ("quantity", "item", "baseline", "optimized", "change_pct")


class CLIError(Exception):
    def __init__(self, message, status=EXIT_INPUT):
        super().__init__(message)
        self.status = status


@dataclass
class RunConfig:
    building: Building
    weather: WeatherSeries | None
    sim: SimConfig
    comfort: ComfortParams
    mode: str
    occupied_only: bool
    out: Path


def _pct(new: float, old: float) -> float:
    return math.nan if old == 0 else 100.0 * (new - old) / abs(old)


def _fmt_pct(p: float) -> str:
    return "n/a" if math.isnan(p) else f"{p:+.0f}%"


@contextmanager
def staged_output(out: Path):
    """Write into a scratch directory; publish into `out` only on success."""
    out = Path(out)
    existed = out.exists()
    if existed and not out.is_dir():
        raise CLIError(f"output path {out} exists and is not a directory")
    parent = out.resolve().parent
    parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".wallopt-stage-", dir=parent))
    try:
        yield stage
        out.mkdir(exist_ok=True)
        for f in sorted(stage.iterdir()):
            shutil.move(str(f), out / f.name)
    except BaseException:
        if not existed and out.exists():
            shutil.rmtree(out, ignore_errors=True)
        raise
    finally:
        shutil.rmtree(stage, ignore_errors=True)


# -- argument handling ---------------------------------------------------------

def _add_building(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--default-house", action="store_true", help="built-in five-zone Reunion house")
    g.add_argument("--building", type=Path, help="building configuration file")


def _add_weather(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--weather", type=Path, help="hourly weather CSV")
    g.add_argument("--synthetic-days", type=int, help="generate N days of synthetic tropical weather")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic weather (default 0)")


def _add_comfort(p):
    p.add_argument("--met", type=float, default=1.2, help="metabolic rate, met (default 1.2)")
    p.add_argument("--clo", type=float, default=0.5, help="clothing insulation, clo (default 0.5)")
    p.add_argument("--work", type=float, default=0.0, help="external work, met (default 0)")


def _add_sim(p):
    p.add_argument("--timestep", type=float, default=3600.0, help="simulation step, s")
    p.add_argument("--nodes-per-layer", type=int, default=4)
    p.add_argument("--warmup-days", type=int, default=7)
    p.add_argument("--air-velocity", type=float, default=0.15, help="indoor air speed, m/s")
    p.add_argument("--objective", choices=MODES, default=SIGNED)
    p.add_argument("--all-hours", action="store_true", help="average zone PMV over all hours")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wallopt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a building and score comfort")
    _add_building(p)
    _add_weather(p)
    _add_comfort(p)
    _add_sim(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("optimize", help="optimise wall layer thickness for comfort")
    _add_building(p)
    _add_weather(p, required=False)
    _add_comfort(p)
    _add_sim(p)
    p.add_argument("--layer", action="append", choices=sorted(LAYER_MATERIALS), required=True,
                   help="layer to optimise; repeat for a multi-variable run")
    p.add_argument("--assembly", default=None, help="assembly to modify (default: the only one)")
    p.add_argument("--bridge", type=Path, help="coupling spec for an external evaluator")
    p.add_argument("--max-evals", type=int, default=500)
    p.add_argument("--min-step", type=float, default=1e-4)
    p.add_argument("--step-factor", type=float, default=0.5)
    p.add_argument("--initial-step", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("pmv", help="PMV, PPD and sensation for one condition")
    p.add_argument("--ta", type=float, required=True, help="air temperature, C")
    p.add_argument("--tr", type=float, default=None, help="mean radiant temperature, C (default ta)")
    p.add_argument("--rh", type=float, required=True, help="relative humidity, %%")
    p.add_argument("--vel", type=float, default=0.15, help="air velocity, m/s")
    _add_comfort(p)

    p = sub.add_parser("weather-gen", help="write synthetic tropical weather as CSV")
    p.add_argument("--synthetic-days", type=int, default=365)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="compare baseline and optimised runs")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--summary", type=Path, required=True)
    p.add_argument("--comparison", type=Path, default=None,
                   help="comparison CSV (default: comparison.csv next to the summary)")
    return parser


def _building(args) -> Building:
    return default_reunion_house() if args.default_house else load_building(args.building)


def _weather(args) -> WeatherSeries | None:
    if args.weather is not None:
        return parse_weather_csv(args.weather)
    if args.synthetic_days is not None:
        if args.synthetic_days < 1:
            raise CLIError("--synthetic-days must be >= 1")
        return synthetic_tropical(args.synthetic_days, args.seed)
    return None


def run_config(args) -> RunConfig:
    try:
        sim = SimConfig(timestep=args.timestep, nodes_per_layer=args.nodes_per_layer,
                        warmup_days=args.warmup_days, air_velocity=args.air_velocity)
        comfort = ComfortParams.from_met(args.met, args.clo, args.work)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    return RunConfig(_building(args), _weather(args), sim, comfort, args.objective,
                     not args.all_hours, args.out)


# -- simulate -----------------------------------------------------------------

def write_zone_pmv(series: ZoneConditionSeries, building: Building, params: ComfortParams, path) -> None:
    values = {z: hourly_pmv(series, z, params) for z in series.zones}
    weekly = {z: building.schedule.weekly(z) for z in series.zones}
    how = series.hour_of_week
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ZONE_PMV_HEADER)
        for i, hour in enumerate(series.hours):
            for z in series.zones:
                p = float(values[z][i])
                w.writerow([int(hour), z, f"{p:.6f}", f"{ppd(p):.6f}", int(weekly[z][how[i]])])


def cmd_simulate(cfg: RunConfig) -> ObjectiveReport:
    series = simulate(cfg.building, cfg.weather, cfg.sim)
    report = evaluate(series, cfg.building, cfg.comfort, mode=cfg.mode, occupied_only=cfg.occupied_only)
    with staged_output(cfg.out) as stage:
        series.write_csv(stage / "zone_conditions.csv")
        write_zone_pmv(series, cfg.building, cfg.comfort, stage / "zone_pmv.csv")
        report.write_csv(stage / "objective.csv")
        report.write_objective(stage / "objective.txt")
    return report


# -- optimize -----------------------------------------------------------------

def _target_assembly(building: Building, name: str | None) -> tuple[str, WallAssembly]:
    if name is None:
        if len(building.assemblies) != 1:
            raise CLIError(f"building has assemblies {sorted(building.assemblies)}; choose one with --assembly")
        name = next(iter(building.assemblies))
    if name not in building.assemblies:
        raise CLIError(f"unknown assembly {name!r}")
    return name, building.assemblies[name]


def layer_indices(assembly: WallAssembly, layers) -> list[int]:
    try:
        return [assembly.index_of(LAYER_MATERIALS[layer]) for layer in layers]
    except KeyError as exc:
        raise CLIError(str(exc.args[0])) from None


class SimulationCost:
    """Total PMV of the building with the active layers resized; keeps reports by vector."""

    def __init__(self, cfg: RunConfig, assembly_name: str, indices):
        self.cfg = cfg
        self.assembly_name = assembly_name
        self.assembly = cfg.building.assemblies[assembly_name]
        self.indices = list(indices)
        self.reports: dict[tuple[float, ...], ObjectiveReport] = {}

    def building_for(self, vector) -> Building:
        asm = map_params(self.assembly, self.indices, vector)
        return self.cfg.building.with_assembly(self.assembly_name, asm)

    def report(self, vector) -> ObjectiveReport:
        key = tuple(float(v) for v in vector)
        if key not in self.reports:
            building = self.building_for(key)
            series = simulate(building, self.cfg.weather, self.cfg.sim)
            self.reports[key] = evaluate(series, building, self.cfg.comfort, mode=self.cfg.mode,
                                         occupied_only=self.cfg.occupied_only)
        return self.reports[key]

    def __call__(self, vector) -> float:
        return self.report(vector).total


def _write_comparison(path, layers, assembly: WallAssembly, best_assembly: WallAssembly,
                      indices, base_report, best_report, base_cost, best_cost):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        if base_report is not None:
            for zone in base_report.zone_pmv:
                b, o = base_report.zone_pmv[zone], best_report.zone_pmv[zone]
                w.writerow(["pmv", zone, repr(b), repr(o), repr(_pct(o, b))])
        w.writerow(["pmv", "TOTAL", repr(base_cost), repr(best_cost), repr(_pct(best_cost, base_cost))])
        for i, layer in enumerate(assembly.layers):
            b = 1000.0 * layer.thickness
            o = 1000.0 * best_assembly.layers[i].thickness
            w.writerow(["thickness_mm", layer.material.name, repr(b), repr(o), repr(_pct(o, b))])
        b, o = 1000.0 * assembly.total_thickness, 1000.0 * best_assembly.total_thickness
        w.writerow(["thickness_mm", "wall", repr(b), repr(o), repr(_pct(o, b))])


def cmd_optimize(cfg: RunConfig, layers, assembly_name=None, coupling=None, opt=None,
                 initial_step=None) -> OptimizeResult:
    opt = opt or OptimizerConfig()
    assembly_name, assembly = _target_assembly(cfg.building, assembly_name)
    indices = layer_indices(assembly, layers)
    if len(set(indices)) != len(indices):
        raise CLIError("each layer may be selected once")
    specs = [ParamSpec(name, MIN_THICKNESS, MAX_THICKNESS, assembly.layers[i].thickness, initial_step)
             for name, i in zip(layers, indices)]

    if coupling is not None:
        cost = bridge_mod.BridgeCost(coupling, [s.name for s in specs])
        sim_cost = None
    else:
        if cfg.weather is None:
            raise CLIError("optimize needs --weather or --synthetic-days unless --bridge is given")
        cost = sim_cost = SimulationCost(cfg, assembly_name, indices)

    result = optimize(cost, specs, opt)
    if result.budget_exhausted:
        log.warning("evaluation budget of %d exhausted before convergence", opt.max_evaluations)
    base_vec = result.trace[0].params
    base_cost = result.trace[0].cost
    best_assembly = map_params(assembly, indices, result.x)
    base_report = best_report = None
    if sim_cost is not None:
        base_report, best_report = sim_cost.report(base_vec), sim_cost.report(result.x)

    with staged_output(cfg.out) as stage:
        result.trace.write_csv(stage / "trace.csv")
        with open(stage / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            base_mm, best_mm = 1000.0 * assembly.total_thickness, 1000.0 * best_assembly.total_thickness
            for name, b, o in zip(layers, base_vec, result.x):
                w.writerow([name, repr(b), repr(o), repr(base_mm), repr(best_mm), repr(_pct(best_mm, base_mm)),
                            repr(base_cost), repr(result.cost), repr(_pct(result.cost, base_cost)),
                            result.evaluations, int(result.converged)])
        _write_comparison(stage / "comparison.csv", layers, assembly, best_assembly, indices,
                          base_report, best_report, base_cost, result.cost)
    return result


# -- report -------------------------------------------------------------------

def _read_rows(path: Path, header) -> list[dict[str, str]]:
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != tuple(header):
            raise TraceFormatError(f"{path}:1: expected header {','.join(header)}")
        rows = list(reader)
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    return rows


def _label(p: float) -> str:
    text = sensation(p)
    near = round(p - 0.5) + 0.5
    if abs(p - near) < 0.1 and -3.0 < near < 3.0:
        lo, hi = sensation(near - 0.25), sensation(near + 0.25)
        text += f" (near {lo}/{hi} boundary)"
    return text


def cmd_report(trace_path, summary_path, comparison_path=None) -> str:
    trace = read_trace(trace_path)
    summary = _read_rows(Path(summary_path), SUMMARY_HEADER)
    if comparison_path is None:
        candidate = Path(summary_path).with_name("comparison.csv")
        comparison_path = candidate if candidate.is_file() else None
    comparison = _read_rows(Path(comparison_path), COMPARISON_HEADER) if comparison_path else []

    base = trace[0].cost
    best_rec = min(trace, key=lambda r: r.cost)
    best = best_rec.cost
    lines = [
        f"evaluations: {len(trace)}",
        f"total PMV: {base:.4f} -> {best:.4f} ({_fmt_pct(_pct(best, base))})",
        f"sensation: {_label(base)} -> {_label(best)}",
    ]
    zone_rows = [r for r in comparison if r["quantity"] == "pmv" and r["item"] != "TOTAL"]
    if zone_rows:
        width = max(len(r["item"]) for r in zone_rows) + 2
        lines.append("")
        lines.append(f"{'zone':<{width}}{'baseline':>10}{'optimized':>11}  {'baseline sensation':<20}{'optimized sensation'}")
        for r in zone_rows:
            b, o = float(r["baseline"]), float(r["optimized"])
            lines.append(f"{r['item']:<{width}}{b:>10.3f}{o:>11.3f}  {sensation(b):<20}{sensation(o)}")

    lines.append("")
    lines.append(f"{'item':<16}{'baseline_mm':>12}{'optimized_mm':>14}{'delta_mm':>10}{'change':>8}")
    thick = [r for r in comparison if r["quantity"] == "thickness_mm"]
    if thick:
        items = [(r["item"], float(r["baseline"]), float(r["optimized"])) for r in thick]
    else:
        items = [(r["layer"], 1000 * float(r["baseline_thickness_m"]), 1000 * float(r["optimized_thickness_m"]))
                 for r in summary]
        items.append(("wall", float(summary[0]["baseline_wall_mm"]), float(summary[0]["optimized_wall_mm"])))
    for name, b, o in items:
        lines.append(f"{name:<16}{b:>12.1f}{o:>14.1f}{o - b:>+10.1f}{_fmt_pct(_pct(o, b)):>8}")
    return "\n".join(lines)


# -- entry point --------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "pmv":
            tr = args.ta if args.tr is None else args.tr
            try:
                cond = IndoorCondition(args.ta, tr, args.rh, args.vel)
                params = ComfortParams.from_met(args.met, args.clo, args.work)
            except ValueError as exc:
                raise CLIError(str(exc)) from None
            r = pmv(cond, params)
            print(f"{r.pmv:.4f},{r.ppd:.2f},{r.sensation}")
        elif args.command == "weather-gen":
            if args.synthetic_days < 1:
                raise CLIError("--synthetic-days must be >= 1")
            series = synthetic_tropical(args.synthetic_days, args.seed)
            with staged_output(args.out) as stage:
                write_weather_csv(series, stage / "weather.csv")
        elif args.command == "simulate":
            report = cmd_simulate(run_config(args))
            print(f"PMV_total = {report.total:.6f}")
        elif args.command == "optimize":
            cfg = run_config(args)
            coupling = load_coupling(args.bridge) if args.bridge else None
            try:
                opt = OptimizerConfig(args.step_factor, args.min_step, args.max_evals, args.workers)
            except ValueError as exc:
                raise CLIError(str(exc)) from None
            result = cmd_optimize(cfg, args.layer, args.assembly, coupling, opt, args.initial_step)
            values = ", ".join(f"{n} = {v:.4f} m" for n, v in zip(args.layer, result.x))
            print(f"best: {values}; PMV_total = {result.cost:.6f} after {result.evaluations} evaluations")
        elif args.command == "report":
            print(cmd_report(args.trace, args.summary, args.comparison))
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SimulationError, ComfortConvergenceError, bridge_mod.BridgeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
