"""HTTP planning service: scenario CRUD, solve jobs, what-if knockouts.

Scenarios are stored as files in the data directory (same JSON format as
the CLI); solve jobs run on a small worker pool and are polled via
``GET /api/jobs/{id}``. Forced knockouts arrive per-request, so a client
can iteratively disable sensors and re-solve without editing the scenario.

Configuration: ``--addr``/``--data`` flags, or the environment variables
``SENTINEL_ADDR`` and ``SENTINEL_DATA``.
"""

from __future__ import annotations

import argparse
import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .engines import EngineConfig, solve
from .errors import (
    ConfigError,
    InfeasibleByReductionError,
    InfeasibleError,
    PlannerError,
    ResourceLimitError,
    ScenarioParseError,
)
from .formulation import plan_to_dict, reduce_variables, validate_plan
from .presets import apply_case
from .scenario import (
    Scenario,
    derive_tables,
    scenario_from_dict,
    scenario_problems,
)

SCHEMA_VERSION = 1
DEFAULT_ADDR = "127.0.0.1:8765"
DEFAULT_JOB_TIMEOUT = 60.0

_TERMINAL = {"done", "infeasible", "failed", "timeout"}


@dataclass
class Job:
    id: str
    scenario_id: str
    request: dict
    status: str = "queued"
    result: dict | None = None
    error: str | None = None


@dataclass
class _Store:
    root: Path
    lock: threading.Lock = field(default_factory=threading.Lock)
    scenarios: dict[str, tuple[Scenario | None, dict, str]] = field(default_factory=dict)
    jobs: dict[str, Job] = field(default_factory=dict)

    def write_json(self, rel: str, payload: dict) -> None:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    root = Path(data_dir) if data_dir else Path("sentinel-data")
    root.mkdir(parents=True, exist_ok=True)
    store = _Store(root=root)
    pool = ThreadPoolExecutor(max_workers=4, thread_name_prefix="solve")
    app = FastAPI(title="sentinel planning service")
    app.state.store = store

    def ok(payload: dict, status_code: int = 200) -> JSONResponse:
        payload = {"schema_version": SCHEMA_VERSION, **payload}
        return JSONResponse(payload, status_code=status_code)

    @app.post("/api/scenarios")
    async def create_scenario(request: Request, draft: bool = False):
        try:
            data = await request.json()
        except Exception:
            raise HTTPException(status_code=422, detail=["body is not valid JSON"])
        if not isinstance(data, dict):
            raise HTTPException(status_code=422, detail=["body must be a JSON object"])
        scenario_id = uuid.uuid4().hex[:12]
        if draft:
            with store.lock:
                store.scenarios[scenario_id] = (None, data, "draft")
            store.write_json(f"scenarios/{scenario_id}.json", data)
            return ok({"id": scenario_id, "status": "draft"}, status_code=201)
        try:
            scenario = scenario_from_dict(data)
        except ScenarioParseError as exc:
            raise HTTPException(status_code=422, detail=[str(exc)])
        problems = scenario_problems(scenario)
        if problems:
            raise HTTPException(status_code=422, detail=problems)
        with store.lock:
            store.scenarios[scenario_id] = (scenario, data, "valid")
        store.write_json(f"scenarios/{scenario_id}.json", data)
        return ok({"id": scenario_id, "status": "valid"}, status_code=201)

    def _get_scenario(scenario_id: str) -> tuple[Scenario | None, dict, str]:
        with store.lock:
            entry = store.scenarios.get(scenario_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {scenario_id}")
        return entry

    @app.get("/api/scenarios/{scenario_id}")
    async def get_scenario(scenario_id: str):
        _, data, status = _get_scenario(scenario_id)
        return ok({"id": scenario_id, "status": status, "scenario": data})

    @app.get("/api/scenarios/{scenario_id}/tables")
    async def get_tables(scenario_id: str):
        scenario, _, status = _get_scenario(scenario_id)
        if scenario is None:
            raise HTTPException(status_code=409, detail=f"scenario {scenario_id} is a draft")
        tables = derive_tables(scenario)
        mesh = scenario.mesh
        counts = tables.coverage.sum(axis=0)
        edges = [
            [v.id, w]
            for v in mesh.vertices
            for w in sorted(mesh.adjacency[v.id])
            if w > v.id
        ]
        return ok(
            {
                "id": scenario_id,
                "target": mesh.target,
                "vertices": [[v.id, v.x, v.y] for v in mesh.vertices],
                "edges": edges,
                "coverage_count": {str(v.id): int(counts[v.id]) for v in mesh.vertices},
                "multi_covered": sorted(tables.multi_covered),
                "evade": {str(v.id): float(tables.evade[v.id]) for v in mesh.vertices},
                "evade_confused": {
                    str(v.id): float(tables.evade_confused[v.id]) for v in mesh.vertices
                },
                "omega": scenario.omega,
            }
        )

    def _run_job(job: Job, scenario: Scenario) -> None:
        with store.lock:
            job.status = "running"
        req = job.request
        result = None
        error = None
        try:
            if req.get("case") is not None:
                scenario = apply_case(scenario, int(req["case"]))
            if req.get("horizon") is not None:
                scenario = replace(scenario, horizon=int(req["horizon"]))
            if req.get("budget") is not None:
                scenario = replace(scenario, budget=float(req["budget"]))
            if req.get("required_ped") is not None:
                scenario = replace(scenario, required_ped=float(req["required_ped"]))
            if req.get("forced_knockouts") is not None:
                scenario = replace(
                    scenario,
                    forced_knockouts=frozenset(int(s) for s in req["forced_knockouts"]),
                )
            config = EngineConfig(
                engine=req.get("engine", "exact"),
                time_limit=min(float(req.get("time_limit", DEFAULT_JOB_TIMEOUT)), DEFAULT_JOB_TIMEOUT),
            )
            tables = derive_tables(scenario)
            plan, extras = solve(scenario, tables, config)
            report = validate_plan(plan, scenario, tables)
            mask = reduce_variables(scenario, tables)
            result = {
                "plan": plan_to_dict(plan),
                "objective_value": plan.objective_value,
                "time_to_target": plan.time_to_target,
                "ped": plan.ped,
                "valid": report.ok,
                "violations": [str(v) for v in report.violations],
                "exclusion_percentage": mask.exclusion_percentage,
                "trace_summary": None,
            }
            if "trace" in extras:
                trace = extras["trace"]
                result["trace_summary"] = {
                    "chosen_agent": trace.chosen_agent,
                    "iterations": {
                        str(a): len(records) for a, records in trace.per_agent.items()
                    },
                }
            status = "done"
        except (InfeasibleError, InfeasibleByReductionError) as exc:
            status, error = "infeasible", str(exc)
        except ResourceLimitError as exc:
            status, error = "timeout", str(exc)
        except (PlannerError, ConfigError, ValueError) as exc:
            status, error = "failed", str(exc)
        except Exception as exc:  # defensive: a worker must never die silently
            status, error = "failed", f"{exc.__class__.__name__}: {exc}"
        # persist before flipping the in-memory status so pollers that see a
        # terminal state can rely on the file being present
        job_done = Job(
            id=job.id, scenario_id=job.scenario_id, request=req,
            status=status, result=result, error=error,
        )
        store.write_json(f"jobs/{job.id}.json", _job_payload(job_done))
        with store.lock:
            job.result = result
            job.error = error
            job.status = status

    def _job_payload(job: Job) -> dict:
        return {
            "id": job.id,
            "scenario_id": job.scenario_id,
            "request": job.request,
            "status": job.status,
            "result": job.result,
            "error": job.error,
        }

    @app.post("/api/scenarios/{scenario_id}/solve")
    async def solve_scenario(scenario_id: str, request: Request):
        scenario, _, status = _get_scenario(scenario_id)
        if status == "draft" or scenario is None:
            raise HTTPException(
                status_code=409, detail=f"scenario {scenario_id} is a draft; validate it first"
            )
        try:
            body = await request.json()
        except Exception:
            body = {}
        if not isinstance(body, dict):
            raise HTTPException(status_code=422, detail=["solve request must be a JSON object"])
        engine = body.get("engine", "exact")
        if engine not in ("exact", "heuristic", "b0", "oracle", "external"):
            raise HTTPException(status_code=422, detail=[f"unknown engine {engine!r}"])
        job = Job(id=uuid.uuid4().hex[:12], scenario_id=scenario_id, request=body)
        with store.lock:
            store.jobs[job.id] = job
        pool.submit(_run_job, job, scenario)
        return ok({"job_id": job.id}, status_code=202)

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        with store.lock:
            job = store.jobs.get(job_id)
            payload = None if job is None else _job_payload(job)
        if payload is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return ok(payload)

    return app


def main() -> None:
    import uvicorn

    parser = argparse.ArgumentParser(prog="sentinel-service")
    parser.add_argument(
        "--addr",
        default=os.environ.get("SENTINEL_ADDR", DEFAULT_ADDR),
        help="host:port to bind (env SENTINEL_ADDR)",
    )
    parser.add_argument(
        "--data",
        default=os.environ.get("SENTINEL_DATA", "sentinel-data"),
        help="data directory for scenario/solution files (env SENTINEL_DATA)",
    )
    args = parser.parse_args()
    host, _, port = args.addr.rpartition(":")
    app = create_app(args.data)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
