"""Experiment runner CLI.

`scnpower run <spec.json>` executes a sweep described by a JSON spec (or a
named packaged preset) over schemes and seeds, writing a sorted summary CSV,
per-run JSON traces, a per-round CSV, and rendered figures into the spec's
output directory. `scnpower verify` runs the oracle suite; `scnpower trace`
summarizes a stored game trace.

Exit codes: 0 ok, 1 spec validation error, 2 non-convergence or disallowed
infeasibility, 3 internal error. SCNPOWER_WORKERS caps run parallelism.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import datetime
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InfeasibleRate, NotConverged, SpecValidationError
from .metrics import EeParams, PowerProfile, system_ee, system_se
from .scenario import ScenarioConfig, dbm_to_watts, generate
from .ee_solver import InnerSolverConfig, PenaltySchedule
from .game import GameConfig, GameTrace, run_game
from .baselines import GridOracleConfig, grid_search_system_ee, run_se_game

SPEC_FORMAT_VERSION = 1
SUMMARY_COLUMNS = ("scheme", "sweep_var", "value", "seed",
                   "system_ee", "system_se", "rounds", "converged")
_SCHEMES = ("eengt", "sengt", "exhaustive")
_SWEEP_VARS = ("p_max_dbm", "n_sues_per_cell")
_PRESETS = ("fig2", "fig3", "fig4")


@dataclass
class ExperimentSpec:
    """Validated experiment description."""

    scenario: dict
    params: dict
    sweep_var: str
    sweep_values: list
    schemes: list
    seeds: list
    output_dir: str
    game: dict = field(default_factory=dict)
    solver_schedule: dict = field(default_factory=dict)
    solver_inner: dict = field(default_factory=dict)
    grid_points: int = 21
    allow_infeasible: bool = False

    _KNOWN_KEYS = {"format_version", "scenario", "params", "game", "solver",
                   "sweep", "schemes", "seeds", "output_dir", "grid_points",
                   "allow_infeasible"}

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise SpecValidationError("<root>", "spec must be a JSON object")
        unknown = set(doc) - cls._KNOWN_KEYS
        if unknown:
            raise SpecValidationError(sorted(unknown)[0], "unknown field")
        if doc.get("format_version") != SPEC_FORMAT_VERSION:
            raise SpecValidationError(
                "format_version", f"must be {SPEC_FORMAT_VERSION}")

        sweep = doc.get("sweep")
        if not isinstance(sweep, dict) or "variable" not in sweep or "values" not in sweep:
            raise SpecValidationError("sweep", "needs 'variable' and 'values'")
        if sweep["variable"] not in _SWEEP_VARS:
            raise SpecValidationError("sweep.variable",
                                      f"must be one of {_SWEEP_VARS}")
        values = sweep["values"]
        if not isinstance(values, list) or not values:
            raise SpecValidationError("sweep.values", "must be a non-empty list")

        schemes = doc.get("schemes", ["eengt"])
        if not isinstance(schemes, list) or not schemes:
            raise SpecValidationError("schemes", "must be a non-empty list")
        for s in schemes:
            if s not in _SCHEMES:
                raise SpecValidationError("schemes", f"unknown scheme {s!r}")

        seeds = doc.get("seeds")
        if not isinstance(seeds, list) or not seeds:
            raise SpecValidationError("seeds", "must be a non-empty list")
        if not all(isinstance(s, int) for s in seeds):
            raise SpecValidationError("seeds", "must be integers")

        output_dir = doc.get("output_dir")
        if not output_dir or not isinstance(output_dir, str):
            raise SpecValidationError("output_dir", "must be a non-empty string")

        scenario = dict(doc.get("scenario", {}))
        scenario.pop("seed", None)   # seeds come from the seed list
        try:
            ScenarioConfig(**scenario).validate()
        except TypeError as exc:
            raise SpecValidationError("scenario", str(exc)) from exc
        except ValueError as exc:
            raise SpecValidationError("scenario", str(exc)) from exc

        params = dict(doc.get("params", {}))
        if "p_max_dbm" in params:
            params["p_max_w"] = dbm_to_watts(float(params.pop("p_max_dbm")))
        try:
            EeParams(**params)
        except TypeError as exc:
            raise SpecValidationError("params", str(exc)) from exc
        except ValueError as exc:
            raise SpecValidationError("params", str(exc)) from exc

        game = dict(doc.get("game", {}))
        try:
            GameConfig(**game)
        except (TypeError, ValueError) as exc:
            raise SpecValidationError("game", str(exc)) from exc

        solver = dict(doc.get("solver", {}))
        schedule = dict(solver.pop("schedule", {}))
        inner = dict(solver.pop("inner", {}))
        if solver:
            raise SpecValidationError("solver",
                                      f"unknown entries {sorted(solver)}")
        try:
            PenaltySchedule(**schedule)
            InnerSolverConfig(**inner)
        except (TypeError, ValueError) as exc:
            raise SpecValidationError("solver", str(exc)) from exc

        grid_points = doc.get("grid_points", 21)
        if not isinstance(grid_points, int) or grid_points < 2:
            raise SpecValidationError("grid_points", "must be an integer >= 2")

        if "exhaustive" in schemes:
            k = scenario.get("k_cells", ScenarioConfig().k_cells)
            n = scenario.get("n_rbs", ScenarioConfig().n_rbs)
            if k * n > 6:
                raise SpecValidationError(
                    "schemes", f"exhaustive needs k_cells*n_rbs <= 6, got {k * n}")

        return cls(
            scenario=scenario,
            params=params,
            sweep_var=sweep["variable"],
            sweep_values=list(values),
            schemes=list(schemes),
            seeds=list(seeds),
            output_dir=output_dir,
            game=game,
            solver_schedule=schedule,
            solver_inner=inner,
            grid_points=grid_points,
            allow_infeasible=bool(doc.get("allow_infeasible", False)),
        )


def load_spec(source: str) -> ExperimentSpec:
    """Load a spec from a JSON file path or a packaged preset name."""
    path = Path(source)
    if path.is_file():
        doc = json.loads(path.read_text())
    elif source in _PRESETS:
        doc = json.loads(resources.files("scnpower.presets")
                         .joinpath(f"{source}.json").read_text())
    else:
        raise SpecValidationError("<spec>",
                                  f"{source!r} is neither a file nor one of {_PRESETS}")
    return ExperimentSpec.from_dict(doc)


def _run_id(scheme: str, sweep_var: str, value, seed: int) -> str:
    return f"{scheme}_{sweep_var}-{value:g}_seed{seed}"


def _execute_one(spec: ExperimentSpec, scheme: str, value, seed: int) -> dict:
    """Run one (scheme, sweep value, seed) cell; returns a result record."""
    scenario_kwargs = dict(spec.scenario)
    params_kwargs = dict(spec.params)
    if spec.sweep_var == "n_sues_per_cell":
        scenario_kwargs["n_sues_per_cell"] = int(value)
    else:
        params_kwargs["p_max_w"] = dbm_to_watts(float(value))
    scn = generate(ScenarioConfig(seed=seed, **scenario_kwargs))
    params = EeParams(**params_kwargs)
    gcfg = GameConfig(**spec.game)
    sched = PenaltySchedule(**spec.solver_schedule)
    inner = InnerSolverConfig(**spec.solver_inner)

    record = {
        "run_id": _run_id(scheme, spec.sweep_var, value, seed),
        "scheme": scheme, "sweep_var": spec.sweep_var, "value": value,
        "seed": seed, "system_ee": math.nan, "system_se": math.nan,
        "rounds": 0, "converged": False, "trace": None, "rounds_rows": [],
        "error": None,
    }
    bandwidth_total = scn.n_rbs * scn.bandwidth_hz

    def fill_metrics(profile):
        record["system_ee"] = system_ee(scn, profile, params)
        record["system_se"] = system_se(scn, profile) / bandwidth_total

    try:
        if scheme == "exhaustive":
            profile, _ = grid_search_system_ee(
                scn, params, GridOracleConfig(points_per_dim=spec.grid_points))
            record["converged"] = True
            fill_metrics(profile)
            return record

        runner = run_game if scheme == "eengt" else run_se_game
        if scheme == "eengt":
            profile, trace = runner(scn, params, gcfg, sched, inner)
        else:
            profile, trace = runner(scn, params, gcfg)
        record["converged"] = trace.converged
        record["rounds"] = trace.rounds_used
        fill_metrics(profile)
    except NotConverged as exc:
        trace = exc.trace
        record["rounds"] = trace.rounds_used
        fill_metrics(trace.final_profile())
        record["error"] = "not_converged"
    except InfeasibleRate as exc:
        record["error"] = f"infeasible_rate: {exc}"
        return record

    record["trace"] = trace.to_dict()
    for rnd, (utils, delta) in enumerate(zip(trace.utilities, trace.utility_deltas)):
        see = system_ee(scn, PowerProfile(trace.profiles[rnd].copy()), params)
        for k, u in enumerate(utils):
            record["rounds_rows"].append(
                (record["run_id"], rnd, k, u,
                 math.nan if delta is None else delta, see))
    return record


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_experiment(spec: ExperimentSpec) -> tuple[Path, list[dict]]:
    """Execute every (scheme, value, seed) cell and write all outputs.

    Returns (output directory, result records sorted like the CSV)."""
    out = Path(spec.output_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    tasks = [(scheme, value, seed)
             for scheme in spec.schemes
             for value in spec.sweep_values
             for seed in spec.seeds]

    workers = int(os.environ.get("SCNPOWER_WORKERS", "1"))
    if workers > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_execute_one, spec, s, v, sd)
                       for s, v, sd in tasks]
            records = [f.result() for f in futures]
    else:
        records = [_execute_one(spec, s, v, sd) for s, v, sd in tasks]

    records.sort(key=lambda r: (r["scheme"], r["value"], r["seed"]))

    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    lines = [f"# scnpower run {stamp}", ",".join(SUMMARY_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(r[c]) for c in SUMMARY_COLUMNS))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")

    round_lines = [f"# scnpower run {stamp}",
                   "run_id,round,cell,utility,utility_delta,system_ee"]
    for r in records:
        for row in r["rounds_rows"]:
            round_lines.append(",".join(_fmt(x) for x in row))
    (out / "rounds.csv").write_text("\n".join(round_lines) + "\n")

    for r in records:
        if r["trace"] is not None:
            doc = dict(r["trace"], run_id=r["run_id"], seed=r["seed"],
                       sweep_var=r["sweep_var"], value=r["value"])
            (out / "traces" / f"{r['run_id']}.json").write_text(
                json.dumps(doc))

    from . import plots
    plots.render_figures(out)
    return out, records


def cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.output_dir:
        spec = dataclasses.replace(spec, output_dir=args.output_dir)
    out, records = run_experiment(spec)
    n_bad = sum(1 for r in records if r["error"])
    print(f"{len(records)} runs -> {out} ({n_bad} failed)")
    for r in records:
        if r["error"]:
            print(f"  {r['run_id']}: {r['error']}")
    if any(r["error"] == "not_converged" for r in records):
        return 2
    if n_bad and not spec.allow_infeasible:
        return 2
    return 0


def cmd_verify(args) -> int:
    from . import verification
    names = args.only.split(",") if args.only else None
    results = verification.run_all(names)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 2


def cmd_trace(args) -> int:
    path = Path(args.id)
    if not path.is_file():
        path = Path(args.output_dir) / "traces" / f"{args.id}.json"
    if not path.is_file():
        print(f"no trace found for {args.id!r}", file=sys.stderr)
        return 1
    doc = json.loads(path.read_text())
    trace = GameTrace.from_dict(doc)
    print(f"run: {doc.get('run_id', path.stem)}  scheme: {trace.scheme}")
    print(f"rounds used: {trace.rounds_used}  converged: {trace.converged}")
    print("round  utility_delta   per-cell utility")
    for rnd, (utils, delta) in enumerate(zip(trace.utilities, trace.utility_deltas)):
        d = "    initial" if delta is None else f"{delta:11.4e}"
        cells = "  ".join(f"{u:10.3f}" for u in utils)
        print(f"{rnd:5d}  {d}  {cells}")
    final = trace.final_profile()
    print("final per-cell radiated power (W):",
          np.array2string(final.p.sum(axis=1), precision=6))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scnpower",
        description="Energy-efficient small-cell power control experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment spec")
    p_run.add_argument("spec", help="path to a spec JSON, or a preset name "
                                    f"({', '.join(_PRESETS)})")
    p_run.add_argument("--output-dir", default=None,
                       help="override the spec's output directory")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run the oracle verification suite")
    p_verify.add_argument("--only", default=None,
                          help="comma-separated substrings selecting checks")
    p_verify.set_defaults(func=cmd_verify)

    p_trace = sub.add_parser("trace", help="summarize a stored game trace")
    p_trace.add_argument("id", help="run id or path to a trace JSON")
    p_trace.add_argument("--output-dir", default="results",
                         help="directory holding traces/ (default: results)")
    p_trace.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecValidationError as exc:
        print(f"spec validation error: {exc}", file=sys.stderr)
        return 1
    except NotConverged as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
