"""Bridge to external MILP solvers via LP and solution files.

Protocol: the solver command is invoked as ``cmd <model.lp> <solution.txt>``
and must exit 0 after writing ``name value`` lines for the nonzero (or all)
binaries. The imported assignment is validated against the scenario; an
invalid solution is rejected, never repaired.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Sequence

from ..errors import ExternalSolverError, InvalidSolutionError
from ..formulation import (
    Plan,
    build_model,
    export_lp,
    import_solution,
    reduce_variables,
    validate_plan,
)
from ..ped import evaluate_ped
from ..scenario import MODE_MAX_PED, PED_MODES, DerivedTables, Scenario


def solve_external(
    scenario: Scenario,
    tables: DerivedTables,
    solver_command: Sequence[str] | str,
    use_reductions: bool = True,
    timeout: float = 60.0,
    workdir: str | Path | None = None,
) -> Plan:
    if isinstance(solver_command, str):
        command = shlex.split(solver_command)
    else:
        command = list(solver_command)
    if not command:
        raise ExternalSolverError("empty solver command")

    mask = reduce_variables(scenario, tables) if use_reductions else None
    model = build_model(scenario, tables, mask)

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "solution.txt"
        export_lp(model, lp_path)
        try:
            proc = subprocess.run(
                command + [str(lp_path), str(sol_path)],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired as exc:
            raise ExternalSolverError(f"solver timed out after {timeout}s") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-3:]
            raise ExternalSolverError(
                f"solver exited with status {proc.returncode}: {' | '.join(tail)}"
            )
        if not sol_path.exists():
            raise ExternalSolverError("solver exited 0 but wrote no solution file")
        try:
            plan = import_solution(sol_path, model)
        except InvalidSolutionError as exc:
            raise ExternalSolverError(f"invalid solution file: {exc}") from exc

    if scenario.mode in PED_MODES:
        plan.ped = evaluate_ped(plan, scenario, tables)
        if scenario.mode == MODE_MAX_PED:
            plan.objective_value = plan.ped
    report = validate_plan(plan, scenario, tables)
    if not report.ok:
        details = "; ".join(str(v) for v in report.violations[:4])
        raise ExternalSolverError(f"external solution failed validation: {details}")
    return plan
