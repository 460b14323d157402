"""Command-line front door: generate, solve, export, validate, render, report.

Every command prints a single JSON document on stdout. Exit codes: 0 on
success, 2 when the instance is infeasible, 3 on a resource limit, 1 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .engines import EngineConfig, solve
from .errors import (
    InfeasibleByReductionError,
    InfeasibleError,
    PlannerError,
    ResourceLimitError,
)
from .formulation import (
    build_model,
    export_lp,
    plan_from_dict,
    plan_to_dict,
    reduce_variables,
    validate_plan,
)
from .presets import CASE_SUMMARIES, apply_case
from .render import RenderSpec, render_to_file
from .scenario import (
    derive_tables,
    generate_instance,
    load_scenario,
    reference_scenario,
    save_scenario,
    validate_scenario,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_RESOURCE_LIMIT = 3


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _add_scenario_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--case", type=int, choices=range(1, 6), help="apply a case preset (1..5)")
    parser.add_argument("--horizon", type=int, help="override the time horizon T")
    parser.add_argument("--budget", type=float, help="override the action budget B")
    parser.add_argument("--omega", type=int, help="override the omega detection threshold")
    parser.add_argument("--required-ped", type=float, help="override the required PED floor")
    parser.add_argument(
        "--forced-knockouts",
        help="comma-separated sensor ids treated as permanently disabled",
    )


def _load(args) -> "Scenario":
    if args.scenario == "reference":
        scenario = reference_scenario()
    else:
        scenario = load_scenario(args.scenario)
    if args.case is not None:
        scenario = apply_case(scenario, args.case)
    if args.horizon is not None:
        scenario = replace(scenario, horizon=args.horizon)
    if args.budget is not None:
        scenario = replace(scenario, budget=args.budget)
    if args.omega is not None:
        scenario = replace(scenario, omega=args.omega)
    if args.required_ped is not None:
        scenario = replace(scenario, required_ped=args.required_ped)
    if args.forced_knockouts:
        ids = frozenset(int(x) for x in args.forced_knockouts.split(",") if x)
        scenario = replace(scenario, forced_knockouts=ids)
    validate_scenario(scenario)
    return scenario


def _scenario_header(scenario) -> dict:
    return {
        "mode": scenario.mode,
        "horizon": scenario.horizon,
        "budget": scenario.budget,
        "omega": scenario.omega,
        "knockout_radius": scenario.knockout_radius,
        "confusion_factor": scenario.confusion_factor,
        "required_ped": scenario.required_ped,
        "forced_knockouts": sorted(scenario.forced_knockouts),
        "agents": [
            {
                "id": a.id,
                "start": a.start,
                "knockout_cost": a.knockout_cost,
                "knockout_duration": a.knockout_duration,
                "knockout_cooldown": a.knockout_cooldown,
                "knockout_dwell": a.knockout_dwell,
                "confusion_cost": a.confusion_cost,
                "confusion_duration": a.confusion_duration,
                "confusion_cooldown": a.confusion_cooldown,
                "confusion_dwell": a.confusion_dwell,
            }
            for a in scenario.agents
        ],
    }


def _cmd_gen(args) -> int:
    if args.reference:
        scenario = reference_scenario()
        save_scenario(scenario, args.output)
        _emit({"written": [str(args.output)], "vertices": scenario.mesh.n})
        return EXIT_OK
    params = {}
    if args.case is not None:
        params["case"] = args.case
    if args.horizon is not None:
        params["horizon"] = args.horizon
    if args.slack is not None:
        params["slack"] = args.slack
    if args.area_scale is not None:
        params["area_scale"] = args.area_scale
    if args.seeds:
        lo, hi = (int(x) for x in args.seeds.split(":"))
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for seed in range(lo, hi + 1):
            scenario = generate_instance(
                seed, args.mesh_size, args.sensors, args.agents, args.radius, params
            )
            path = out_dir / f"scenario_{seed}.json"
            save_scenario(scenario, path)
            written.append(str(path))
        _emit({"written": written})
        return EXIT_OK
    scenario = generate_instance(
        args.seed, args.mesh_size, args.sensors, args.agents, args.radius, params
    )
    save_scenario(scenario, args.output)
    _emit({"written": [str(args.output)], "vertices": scenario.mesh.n, "mode": scenario.mode})
    return EXIT_OK


def _cmd_solve(args) -> int:
    scenario = _load(args)
    config = EngineConfig(
        engine=args.engine,
        use_reductions=not args.no_reductions,
        solver_command=args.solver_cmd,
        oracle_force=args.oracle_force,
    )
    if args.node_limit:
        config.node_limit = args.node_limit
    if args.time_limit:
        config.time_limit = args.time_limit
    tables = derive_tables(scenario)
    plan, extras = solve(scenario, tables, config)
    report = validate_plan(plan, scenario, tables)
    result = {
        "engine": args.engine,
        "case": args.case,
        "header": _scenario_header(scenario),
        "objective_value": plan.objective_value,
        "time_to_target": plan.time_to_target,
        "ped": plan.ped,
        "knockouts": [list(k) for k in plan.knockouts],
        "confusions": [list(c) for c in plan.confusions],
        "valid": report.ok,
        "violations": [str(v) for v in report.violations],
        "max_simultaneous_detections": report.max_simultaneous_detections,
    }
    if "trace" in extras:
        trace = extras["trace"]
        result["heuristic"] = {
            "chosen_agent": trace.chosen_agent,
            "iterations": {
                str(a): [
                    {
                        "iteration": r.iteration,
                        "path_length": len(r.path) - 1,
                        "deleted_vertex": r.deleted_vertex,
                        "combos_tried": r.combos_tried,
                        "best_objective": r.best_objective,
                        "truncated": r.truncated,
                    }
                    for r in records
                ]
                for a, records in trace.per_agent.items()
            },
        }
    if args.plan_out:
        Path(args.plan_out).write_text(json.dumps(plan_to_dict(plan), indent=2) + "\n")
        result["plan_file"] = str(args.plan_out)
    if args.scenario_out:
        save_scenario(scenario, args.scenario_out)
        result["scenario_file"] = str(args.scenario_out)
    _emit(result)
    return EXIT_OK


def _cmd_export_lp(args) -> int:
    scenario = _load(args)
    tables = derive_tables(scenario)
    mask = None if args.no_reductions else reduce_variables(scenario, tables)
    model = build_model(scenario, tables, mask)
    export_lp(model, args.output)
    _emit(
        {
            "written": str(args.output),
            "variables": len(model.variables),
            "constraints": len(model.constraints),
            "mode": model.mode,
            "reduced": not args.no_reductions,
        }
    )
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = _load(args)
    tables = derive_tables(scenario)
    plan = plan_from_dict(json.loads(Path(args.plan).read_text()))
    report = validate_plan(plan, scenario, tables)
    _emit(
        {
            "valid": report.ok,
            "violations": [str(v) for v in report.violations],
            "ped": report.ped,
            "time_to_target": report.time_to_target,
            "max_simultaneous_detections": report.max_simultaneous_detections,
        }
    )
    return EXIT_OK if report.ok else EXIT_ERROR


def _cmd_render(args) -> int:
    scenario = _load(args)
    plan = None
    if args.plan:
        plan = plan_from_dict(json.loads(Path(args.plan).read_text()))
    spec = RenderSpec(
        output=args.output,
        show_mesh=not args.no_mesh,
        show_coverage=not args.no_coverage,
        hide_knocked_out=args.hide_knocked_out,
    )
    render_to_file(scenario, plan, spec)
    _emit({"written": str(args.output)})
    return EXIT_OK


def _cmd_stats(args) -> int:
    scenario = _load(args)
    tables = derive_tables(scenario)
    mask = reduce_variables(scenario, tables)
    n = scenario.mesh.n
    _emit(
        {
            "vertices": n,
            "sensors": len(scenario.sensors),
            "agents": len(scenario.agents),
            "horizon": scenario.horizon,
            "mode": scenario.mode,
            "x_variables_total": len(scenario.agents) * n * scenario.horizon,
            "exclusion_percentage": mask.exclusion_percentage,
            "multi_covered_vertices": len(tables.multi_covered),
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentinel",
        description="Plan evasive paths on a triangular mesh through a sensor network.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random scenario (or write the bundled one)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--seeds", help="A:B inclusive sweep; output becomes a directory")
    gen.add_argument("--mesh-size", type=int, default=30)
    gen.add_argument("--sensors", type=int, default=15)
    gen.add_argument("--agents", type=int, default=2)
    gen.add_argument("--radius", type=float, default=2.6)
    gen.add_argument("--case", type=int, choices=range(1, 6))
    gen.add_argument("--horizon", type=int)
    gen.add_argument("--slack", type=int, help="horizon slack above the minimal hop count")
    gen.add_argument("--area-scale", type=float, help="scale sensor detection areas (2.0 doubles)")
    gen.add_argument("--reference", action="store_true", help="write the bundled four-sensor scenario")
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=_cmd_gen)

    slv = sub.add_parser("solve", help="solve a scenario")
    slv.add_argument("scenario", help="scenario file, or 'reference' for the bundled example")
    slv.add_argument(
        "--engine",
        default="exact",
        choices=["exact", "heuristic", "b0", "oracle", "external"],
    )
    _add_scenario_overrides(slv)
    slv.add_argument("--no-reductions", action="store_true")
    slv.add_argument("--node-limit", type=int)
    slv.add_argument("--time-limit", type=float)
    slv.add_argument("--solver-cmd", help="external solver command (invoked as CMD model.lp out.txt)")
    slv.add_argument("--oracle-force", action="store_true", help="run the oracle past its caps")
    slv.add_argument("--plan-out", help="write the plan JSON here")
    slv.add_argument("--scenario-out", help="write the resolved scenario here")
    slv.set_defaults(func=_cmd_solve)

    exp = sub.add_parser("export-lp", help="write the 0-1 model as an LP file")
    exp.add_argument("scenario")
    _add_scenario_overrides(exp)
    exp.add_argument("--no-reductions", action="store_true")
    exp.add_argument("-o", "--output", required=True)
    exp.set_defaults(func=_cmd_export_lp)

    val = sub.add_parser("validate", help="validate a plan against a scenario")
    val.add_argument("scenario")
    val.add_argument("plan")
    _add_scenario_overrides(val)
    val.set_defaults(func=_cmd_validate)

    ren = sub.add_parser("render", help="render scenario (and plan) to SVG")
    ren.add_argument("scenario")
    _add_scenario_overrides(ren)
    ren.add_argument("--plan")
    ren.add_argument("--hide-knocked-out", action="store_true")
    ren.add_argument("--no-mesh", action="store_true")
    ren.add_argument("--no-coverage", action="store_true")
    ren.add_argument("-o", "--output", required=True)
    ren.set_defaults(func=_cmd_render)

    sts = sub.add_parser("stats", help="report variable-reduction statistics")
    sts.add_argument("scenario")
    _add_scenario_overrides(sts)
    sts.set_defaults(func=_cmd_stats)

    cases = sub.add_parser("cases", help="list the case presets")
    cases.set_defaults(func=lambda args: (_emit({str(k): v for k, v in CASE_SUMMARIES.items()}), EXIT_OK)[1])

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InfeasibleError, InfeasibleByReductionError) as exc:
        _emit({"error": "infeasible", "detail": str(exc)})
        return EXIT_INFEASIBLE
    except ResourceLimitError as exc:
        _emit({"error": "resource-limit", "detail": str(exc)})
        return EXIT_RESOURCE_LIMIT
    except PlannerError as exc:
        _emit({"error": exc.__class__.__name__, "detail": str(exc)})
        return EXIT_ERROR
    except OSError as exc:
        _emit({"error": "io", "detail": str(exc)})
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
