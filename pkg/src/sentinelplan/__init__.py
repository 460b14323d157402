"""Mission-path planning on a triangular mesh with sensor evasion.

Plan paths for agents to reach a target on a discretised triangular mesh
while never being located by too many sensors at once, with optional
knockout and confusion actions, exact and heuristic solvers, an LP-file
bridge to external MILP solvers, and an HTTP planning service.
"""

from .engines import (
    EngineConfig,
    evaluate_ped,
    oracle_enumerate,
    solve,
    solve_b0,
    solve_exact,
    solve_external,
)
from .errors import (
    ConfigError,
    GenerationFailedError,
    HeuristicInfeasibleError,
    InfeasibleByReductionError,
    InfeasibleError,
    InvalidSolutionError,
    OracleCapError,
    PlannerError,
    ResourceLimitError,
    ScenarioParseError,
    UnsupportedVersionError,
)
from .formulation import (
    Model,
    Plan,
    ReductionMask,
    ValidationReport,
    build_model,
    export_lp,
    import_solution,
    loglinear_objective,
    parse_lp,
    plan_from_dict,
    plan_to_dict,
    reduce_variables,
    validate_plan,
)
from .heuristic import HeuristicTrace, solve_heuristic
from .mesh import (
    DistanceField,
    Mesh,
    build_triangular_mesh,
    hop_distances,
    nearest_vertex,
)
from .presets import CASE_SUMMARIES, CASES, apply_case, min_hops_to_target
from .scenario import (
    Agent,
    DerivedTables,
    Scenario,
    Sensor,
    derive_tables,
    generate_instance,
    load_scenario,
    poisson_binomial_tail,
    reference_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "CASES",
    "CASE_SUMMARIES",
    "ConfigError",
    "DerivedTables",
    "DistanceField",
    "EngineConfig",
    "GenerationFailedError",
    "HeuristicInfeasibleError",
    "HeuristicTrace",
    "InfeasibleByReductionError",
    "InfeasibleError",
    "InvalidSolutionError",
    "Mesh",
    "Model",
    "OracleCapError",
    "Plan",
    "PlannerError",
    "ReductionMask",
    "ResourceLimitError",
    "Scenario",
    "ScenarioParseError",
    "Sensor",
    "UnsupportedVersionError",
    "ValidationReport",
    "apply_case",
    "build_model",
    "build_triangular_mesh",
    "derive_tables",
    "evaluate_ped",
    "export_lp",
    "generate_instance",
    "hop_distances",
    "import_solution",
    "load_scenario",
    "loglinear_objective",
    "min_hops_to_target",
    "nearest_vertex",
    "oracle_enumerate",
    "parse_lp",
    "plan_from_dict",
    "plan_to_dict",
    "poisson_binomial_tail",
    "reduce_variables",
    "reference_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "solve",
    "solve_b0",
    "solve_exact",
    "solve_external",
    "solve_heuristic",
    "validate_plan",
]
