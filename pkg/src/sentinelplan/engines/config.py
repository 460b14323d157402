"""Engine selection and shared solve entry point."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from ..errors import ConfigError
from ..formulation import Plan
from ..scenario import DerivedTables, Scenario, derive_tables

ENGINES = ("exact", "heuristic", "b0", "oracle", "external")


@dataclass
class EngineConfig:
    engine: str = "exact"
    node_limit: int | None = 2_000_000
    time_limit: float | None = None
    use_reductions: bool = True
    solver_command: Sequence[str] | str | None = None
    combo_limit: int = 100_000
    oracle_force: bool = False

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ConfigError("node_limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")
        if self.combo_limit <= 0:
            raise ConfigError("combo_limit must be positive")


def solve(
    scenario: Scenario,
    tables: DerivedTables | None = None,
    config: EngineConfig | None = None,
) -> tuple[Plan, dict]:
    """Solve with the configured engine; returns (plan, extras).

    ``extras`` carries engine-specific context (currently the heuristic
    trace). The b0 engine by definition ignores actions, so a nonzero
    budget is dropped before calling it.
    """
    cfg = config or EngineConfig()
    if tables is None:
        tables = derive_tables(scenario)

    if cfg.engine == "b0":
        from .b0 import solve_b0

        scn = replace(scenario, budget=0.0) if scenario.budget else scenario
        return solve_b0(scn, tables), {}
    if cfg.engine == "exact":
        from .exact import solve_exact

        return solve_exact(scenario, tables, cfg), {}
    if cfg.engine == "oracle":
        from .oracle import oracle_enumerate

        return oracle_enumerate(scenario, tables, force=cfg.oracle_force), {}
    if cfg.engine == "heuristic":
        from ..heuristic import solve_heuristic

        plan, trace = solve_heuristic(scenario, tables, combo_limit=cfg.combo_limit)
        return plan, {"trace": trace}
    if cfg.engine == "external":
        from .external import solve_external

        if not cfg.solver_command:
            raise ConfigError("external engine needs a solver_command")
        plan = solve_external(
            scenario,
            tables,
            cfg.solver_command,
            use_reductions=cfg.use_reductions,
            timeout=cfg.time_limit or 60.0,
        )
        return plan, {}
    raise ConfigError(f"unknown engine {cfg.engine!r}")
