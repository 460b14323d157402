"""Scenario definition: sensors, agents, parameters, and derived tables.

A scenario couples a mesh with a sensor layout, agent roster, and the
planning parameters (horizon, budget, omega rule, action model). From it we
derive the coverage/knockout tables, per-sensor miss probabilities, and the
per-vertex evasion probabilities used by every solver.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    GenerationFailedError,
    ScenarioParseError,
    UnsupportedVersionError,
)
from .mesh import ROW_HEIGHT, Mesh, build_triangular_mesh, hop_distances, nearest_vertex

SCENARIO_VERSION = 1

MODE_FEASIBILITY = "feasibility-at-T"
MODE_MIN_TIME = "min-time"
MODE_MAX_PED = "max-ped"
MODE_MIN_TIME_REQUIRED_PED = "min-time-required-ped"

ALL_MODES = (MODE_FEASIBILITY, MODE_MIN_TIME, MODE_MAX_PED, MODE_MIN_TIME_REQUIRED_PED)
#: Modes with the hard "never located by >= omega sensors" rule and knockouts.
HARD_MODES = frozenset({MODE_FEASIBILITY, MODE_MIN_TIME})
#: Modes driven by detection probabilities, where confusion is available.
PED_MODES = frozenset({MODE_MAX_PED, MODE_MIN_TIME_REQUIRED_PED})
#: Modes where reaching the target forces an immediate move to the sink.
MIN_TIME_FAMILY = frozenset({MODE_MIN_TIME, MODE_MIN_TIME_REQUIRED_PED})

# Coverage boundary comparisons use a small absolute slack so that sensors
# placed exactly one radius away from a lattice vertex count as covering it.
_RANGE_EPS = 1e-9


@dataclass(frozen=True)
class Sensor:
    id: int
    position: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Agent:
    """An agent with its start vertex and per-action costs/durations.

    Cooldowns bound how often an action may be repeated; dwells force the
    agent to stay at the action vertex afterwards. ``None`` disables the
    restriction.
    """

    id: int
    start: int
    knockout_cost: float = 1.0
    knockout_duration: int = 10
    confusion_cost: float = 1.0
    confusion_duration: int = 10
    knockout_cooldown: int | None = None
    confusion_cooldown: int | None = None
    knockout_dwell: int | None = None
    confusion_dwell: int | None = None


@dataclass(frozen=True)
class Scenario:
    mesh: Mesh
    sensors: tuple[Sensor, ...]
    agents: tuple[Agent, ...]
    horizon: int
    budget: float
    omega: int
    knockout_radius: float = 3.0
    confusion_factor: float = 0.1
    required_ped: float | None = None
    mode: str = MODE_MIN_TIME
    exit_target: int | None = None
    forced_knockouts: frozenset[int] = frozenset()

    def agent(self, agent_id: int) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise ConfigError(f"unknown agent id {agent_id}")


@dataclass(frozen=True)
class DerivedTables:
    """Coverage, knockout-reach, and evasion-probability tables.

    All sensor-indexed arrays have shape (S, n+1) and are indexed
    ``[sensor_id - 1, vertex_id]``; column 0 is the absorbing vertex and is
    always zero coverage. Vertex-indexed arrays have shape (n+1,).
    """

    coverage: np.ndarray
    knockout: np.ndarray
    detect_p: np.ndarray
    miss: np.ndarray
    miss_confused: np.ndarray
    evade: np.ndarray
    evade_confused: np.ndarray
    multi_covered: frozenset[int]
    distances_from_starts: Mapping[int, Mapping[int, float]]
    distances_to_target: Mapping[int, float]


def poisson_binomial_tail(probs: Sequence[float], omega: int) -> float:
    """P(at most omega-1 of the independent Bernoulli trials succeed).

    Standard truncated convolution: dp[k] tracks the probability of exactly
    k successes, for k < omega; mass at or beyond omega is discarded.
    """
    if omega <= 0:
        return 0.0
    dp = [0.0] * omega
    dp[0] = 1.0
    for p in probs:
        q = 1.0 - p
        for k in range(omega - 1, 0, -1):
            dp[k] = dp[k] * q + dp[k - 1] * p
        dp[0] *= q
    return float(math.fsum(dp))


def scenario_problems(scenario: Scenario) -> list[str]:
    """Collect every validation problem; an empty list means valid."""
    problems: list[str] = []
    mesh = scenario.mesh
    if scenario.omega < 1:
        problems.append(f"omega must be >= 1, got {scenario.omega}")
    if scenario.horizon < 1:
        problems.append(f"horizon must be >= 1, got {scenario.horizon}")
    if scenario.budget < 0:
        problems.append(f"budget must be >= 0, got {scenario.budget}")
    if not 0.0 <= scenario.confusion_factor <= 1.0:
        problems.append(f"confusion_factor must lie in [0, 1], got {scenario.confusion_factor}")
    if scenario.mode not in ALL_MODES:
        problems.append(f"unknown mode {scenario.mode!r}")
    if scenario.mode == MODE_MIN_TIME_REQUIRED_PED:
        if scenario.required_ped is None:
            problems.append("required_ped must be set in min-time-required-ped mode")
        elif not 0.0 <= scenario.required_ped <= 1.0:
            problems.append(f"required_ped must lie in [0, 1], got {scenario.required_ped}")
    elif scenario.required_ped is not None:
        problems.append(f"required_ped is only meaningful in {MODE_MIN_TIME_REQUIRED_PED} mode")
    if scenario.knockout_radius <= 0:
        problems.append("knockout_radius must be positive")
    for i, sensor in enumerate(scenario.sensors, start=1):
        if sensor.id != i:
            problems.append(f"sensor ids must be 1..S in order, found {sensor.id} at index {i}")
        if sensor.radius <= 0:
            problems.append(f"sensor {sensor.id} radius must be positive")
    sensor_ids = {s.id for s in scenario.sensors}
    for sid in sorted(scenario.forced_knockouts):
        if sid not in sensor_ids:
            problems.append(f"forced knockout names unknown sensor {sid}")
    for i, agent in enumerate(scenario.agents, start=1):
        if agent.id != i:
            problems.append(f"agent ids must be 1..A in order, found {agent.id} at index {i}")
        if agent.start not in mesh.adjacency:
            problems.append(f"agent {agent.id} start vertex {agent.start} not in mesh")
        if agent.knockout_cost < 0 or agent.confusion_cost < 0:
            problems.append(f"agent {agent.id} action costs must be >= 0")
        if agent.knockout_duration < 0 or agent.confusion_duration < 0:
            problems.append(f"agent {agent.id} action durations must be >= 0")
        for name in ("knockout_cooldown", "confusion_cooldown", "knockout_dwell", "confusion_dwell"):
            value = getattr(agent, name)
            if value is not None and not 1 <= value <= scenario.horizon - 1:
                problems.append(
                    f"agent {agent.id} {name}={value} outside [1, T-1]=[1, {scenario.horizon - 1}]"
                )
    if not scenario.agents:
        problems.append("scenario needs at least one agent")
    if scenario.exit_target is not None and scenario.exit_target not in mesh.adjacency:
        problems.append(f"exit_target {scenario.exit_target} not in mesh")
    return problems


def validate_scenario(scenario: Scenario) -> None:
    problems = scenario_problems(scenario)
    if problems:
        raise ConfigError("; ".join(problems))


def derive_tables(scenario: Scenario) -> DerivedTables:
    """Derive coverage, knockout reach, miss probabilities, and evasion tables.

    Coverage is geometric (d <= radius), except that no sensor covers the
    target or the absorbing vertex, and sensors listed in
    ``forced_knockouts`` cover nothing at all. Detection probability inside
    range follows 1 / (1 + d^2 / r^2); confusion scales it by the
    confusion factor.
    """
    mesh = scenario.mesh
    n = mesh.n
    sensors = scenario.sensors
    S = len(sensors)
    xs = np.zeros(n + 1)
    ys = np.zeros(n + 1)
    for v in mesh.vertices:
        xs[v.id] = v.x
        ys[v.id] = v.y

    coverage = np.zeros((S, n + 1), dtype=np.uint8)
    knockout = np.zeros((S, n + 1), dtype=np.uint8)
    detect_p = np.zeros((S, n + 1))
    rho2 = scenario.knockout_radius**2 + _RANGE_EPS
    for i, sensor in enumerate(sensors):
        sx, sy = sensor.position
        d2 = (xs - sx) ** 2 + (ys - sy) ** 2
        in_range = d2 <= sensor.radius**2 + _RANGE_EPS
        in_range[0] = False
        in_range[mesh.target] = False
        knockout[i] = d2 <= rho2
        knockout[i, 0] = 0
        if sensor.id in scenario.forced_knockouts:
            continue
        coverage[i] = in_range
        p = np.where(in_range, 1.0 / (1.0 + d2 / sensor.radius**2), 0.0)
        detect_p[i] = p

    miss = 1.0 - detect_p
    miss_confused = 1.0 - scenario.confusion_factor * detect_p

    omega = scenario.omega
    evade = np.ones(n + 1)
    evade_confused = np.ones(n + 1)
    kappa = scenario.confusion_factor
    for v in range(1, n + 1):
        ps = [detect_p[s, v] for s in range(S) if coverage[s, v]]
        if not ps:
            continue
        evade[v] = poisson_binomial_tail(ps, omega)
        evade_confused[v] = poisson_binomial_tail([kappa * p for p in ps], omega)

    counts = coverage.sum(axis=0)
    multi_covered = frozenset(
        v for v in range(1, n) if counts[v] >= omega
    )

    from_starts = {
        agent.id: hop_distances(mesh, agent.start).dist for agent in scenario.agents
    }
    to_target = hop_distances(mesh, mesh.target).dist
    return DerivedTables(
        coverage=coverage,
        knockout=knockout,
        detect_p=detect_p,
        miss=miss,
        miss_confused=miss_confused,
        evade=evade,
        evade_confused=evade_confused,
        multi_covered=multi_covered,
        distances_from_starts=from_starts,
        distances_to_target=to_target,
    )


def reference_scenario(
    horizon: int = 10,
    budget: float = 0.0,
    mode: str = MODE_MIN_TIME,
    omega: int = 2,
    required_ped: float | None = None,
    forced_knockouts: frozenset[int] = frozenset(),
) -> Scenario:
    """The bundled four-sensor example on a 13x13 mesh.

    Two agents start on the left, the target sits on the right, and four
    radius-2.4 sensors guard the middle. Sensor positions are lattice
    points, so range comparisons at the boundary are exact.
    """
    mesh = build_triangular_mesh(13, 13)
    mesh = mesh.retargeted(nearest_vertex(mesh, (10.0, 6 * ROW_HEIGHT)))
    sensors = (
        Sensor(1, (5.5, 3 * ROW_HEIGHT), 2.4),
        Sensor(2, (5.0, 6 * ROW_HEIGHT), 2.4),
        Sensor(3, (6.0, 8 * ROW_HEIGHT), 2.4),
        Sensor(4, (5.5, 5 * ROW_HEIGHT), 2.4),
    )
    agents = (
        Agent(id=1, start=nearest_vertex(mesh, (2.5, ROW_HEIGHT))),
        Agent(id=2, start=nearest_vertex(mesh, (1.5, 5 * ROW_HEIGHT))),
    )
    return Scenario(
        mesh=mesh,
        sensors=sensors,
        agents=agents,
        horizon=horizon,
        budget=budget,
        omega=omega,
        knockout_radius=3.0,
        confusion_factor=0.1,
        required_ped=required_ped,
        mode=mode,
        forced_knockouts=frozenset(forced_knockouts),
    )


def generate_instance(
    seed: int,
    mesh_size: int,
    n_sensors: int,
    n_agents: int,
    radius: float,
    params: Mapping | None = None,
) -> Scenario:
    """Generate a random instance, deterministically from ``seed``.

    Sensors land uniformly in the central 60% of the bounding box; agents go
    to uncovered vertices near the left boundary and the target to an
    uncovered vertex near the right boundary. ``params`` may carry:

    - ``case``: Table-style case preset (1..5) applied to the result.
    - ``horizon``: explicit horizon; default is the sensor-free minimum
      time to target plus ``slack`` (default 2).
    - ``area_scale``: scales every sensor's detection *area*; 2.0 doubles
      the area, i.e. multiplies the radius by sqrt(2).
    - ``omega``, ``budget``: overrides applied after the case preset.
    """
    params = dict(params or {})
    if mesh_size < 2 or n_sensors < 0 or n_agents < 1:
        raise GenerationFailedError("counts must be positive")
    rng = random.Random(seed)
    mesh = build_triangular_mesh(mesh_size, mesh_size)
    width = mesh_size - 0.5
    height = (mesh_size - 1) * ROW_HEIGHT
    scale = math.sqrt(params.get("area_scale", 1.0))
    eff_radius = radius * scale

    sensors = tuple(
        Sensor(
            id=i + 1,
            position=(
                rng.uniform(0.2 * width, 0.8 * width),
                rng.uniform(0.2 * height, 0.8 * height),
            ),
            radius=eff_radius,
        )
        for i in range(n_sensors)
    )

    def covered(x: float, y: float) -> bool:
        return any(
            (x - s.position[0]) ** 2 + (y - s.position[1]) ** 2 <= s.radius**2 + _RANGE_EPS
            for s in sensors
        )

    strip = max(2, mesh_size // 6)
    left = [v for v in mesh.vertices if v.col < strip and not covered(v.x, v.y)]
    right = [v for v in mesh.vertices if v.col >= mesh_size - strip and not covered(v.x, v.y)]
    if not right or len(left) < n_agents:
        raise GenerationFailedError(
            f"seed {seed}: not enough uncovered boundary vertices for agents/target"
        )
    for _ in range(10_000):
        starts = rng.sample(sorted(v.id for v in left), n_agents)
        target = rng.choice(sorted(v.id for v in right))
        if target not in starts:
            break
    else:
        raise GenerationFailedError(f"seed {seed}: could not place agents/target outside coverage")

    mesh = mesh.retargeted(target)
    agents = tuple(Agent(id=i + 1, start=s) for i, s in enumerate(starts))

    scenario = Scenario(
        mesh=mesh,
        sensors=sensors,
        agents=agents,
        horizon=1,
        budget=float(params.get("budget", 0.0)),
        omega=int(params.get("omega", 2)),
        knockout_radius=float(params.get("knockout_radius", 3.0)),
        confusion_factor=float(params.get("confusion_factor", 0.1)),
        mode=params.get("mode", MODE_MIN_TIME),
    )
    min_hops = min(
        hop_distances(mesh, a.start).dist[mesh.target] for a in agents
    )
    if math.isinf(min_hops):
        raise GenerationFailedError(f"seed {seed}: target unreachable from every agent")
    horizon = int(params.get("horizon") or min_hops + params.get("slack", 2))
    scenario = replace(scenario, horizon=horizon)
    if "case" in params:
        from .presets import apply_case

        scenario = apply_case(scenario, int(params["case"]))
        if "horizon" in params and params["horizon"]:
            scenario = replace(scenario, horizon=int(params["horizon"]))
        if "budget" in params:
            scenario = replace(scenario, budget=float(params["budget"]))
        if "omega" in params:
            scenario = replace(scenario, omega=int(params["omega"]))
    validate_scenario(scenario)
    return scenario


def _cell_of(mesh: Mesh, vertex_id: int) -> list[int]:
    v = mesh.vertex(vertex_id)
    return [v.row, v.col]


def scenario_to_dict(scenario: Scenario) -> dict:
    mesh = scenario.mesh
    return {
        "version": SCENARIO_VERSION,
        "mesh": {
            "rows": mesh.rows,
            "cols": mesh.cols,
            "blocked": sorted(list(c) for c in mesh.blocked),
            "target": _cell_of(mesh, mesh.target),
        },
        "sensors": [
            {"id": s.id, "position": [s.position[0], s.position[1]], "radius": s.radius}
            for s in scenario.sensors
        ],
        "agents": [
            {
                "id": a.id,
                "start": _cell_of(mesh, a.start),
                "knockout_cost": a.knockout_cost,
                "knockout_duration": a.knockout_duration,
                "confusion_cost": a.confusion_cost,
                "confusion_duration": a.confusion_duration,
                "knockout_cooldown": a.knockout_cooldown,
                "confusion_cooldown": a.confusion_cooldown,
                "knockout_dwell": a.knockout_dwell,
                "confusion_dwell": a.confusion_dwell,
            }
            for a in scenario.agents
        ],
        "horizon": scenario.horizon,
        "budget": scenario.budget,
        "omega": scenario.omega,
        "knockout_radius": scenario.knockout_radius,
        "confusion_factor": scenario.confusion_factor,
        "required_ped": scenario.required_ped,
        "mode": scenario.mode,
        "exit_target": None if scenario.exit_target is None else _cell_of(mesh, scenario.exit_target),
        "forced_knockouts": sorted(scenario.forced_knockouts),
    }


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n")


def _require(data: Mapping, key: str, where: str = "scenario"):
    if key not in data:
        raise ScenarioParseError(f"{where} is missing required field '{key}'", field=key)
    return data[key]


def scenario_from_dict(data: Mapping) -> Scenario:
    version = _require(data, "version")
    if version != SCENARIO_VERSION:
        raise UnsupportedVersionError(
            f"unsupported scenario version {version!r}; this build reads version {SCENARIO_VERSION}",
            field="version",
        )
    mesh_data = _require(data, "mesh")
    for key in ("rows", "cols", "blocked", "target"):
        _require(mesh_data, key, where="mesh")
    mesh = build_triangular_mesh(
        int(mesh_data["rows"]), int(mesh_data["cols"]), [tuple(b) for b in mesh_data["blocked"]]
    )

    def vertex_ref(cell, what: str) -> int:
        vid = mesh.id_at(int(cell[0]), int(cell[1]))
        if vid is None:
            raise ScenarioParseError(f"{what} names missing mesh cell {list(cell)}", field=what)
        return vid

    mesh = mesh.retargeted(vertex_ref(mesh_data["target"], "mesh.target"))

    sensors = []
    for i, s in enumerate(_require(data, "sensors")):
        for key in ("id", "position", "radius"):
            _require(s, key, where=f"sensors[{i}]")
        sensors.append(Sensor(int(s["id"]), (float(s["position"][0]), float(s["position"][1])), float(s["radius"])))

    agents = []
    for i, a in enumerate(_require(data, "agents")):
        for key in ("id", "start"):
            _require(a, key, where=f"agents[{i}]")
        agents.append(
            Agent(
                id=int(a["id"]),
                start=vertex_ref(a["start"], f"agents[{i}].start"),
                knockout_cost=float(a.get("knockout_cost", 1.0)),
                knockout_duration=int(a.get("knockout_duration", 10)),
                confusion_cost=float(a.get("confusion_cost", 1.0)),
                confusion_duration=int(a.get("confusion_duration", 10)),
                knockout_cooldown=a.get("knockout_cooldown"),
                confusion_cooldown=a.get("confusion_cooldown"),
                knockout_dwell=a.get("knockout_dwell"),
                confusion_dwell=a.get("confusion_dwell"),
            )
        )

    exit_cell = _require(data, "exit_target")
    required_ped = _require(data, "required_ped")
    scenario = Scenario(
        mesh=mesh,
        sensors=tuple(sensors),
        agents=tuple(agents),
        horizon=int(_require(data, "horizon")),
        budget=float(_require(data, "budget")),
        omega=int(_require(data, "omega")),
        knockout_radius=float(_require(data, "knockout_radius")),
        confusion_factor=float(_require(data, "confusion_factor")),
        required_ped=None if required_ped is None else float(required_ped),
        mode=str(_require(data, "mode")),
        exit_target=None if exit_cell is None else vertex_ref(exit_cell, "exit_target"),
        forced_knockouts=frozenset(int(x) for x in _require(data, "forced_knockouts")),
    )
    problems = scenario_problems(scenario)
    if problems:
        raise ScenarioParseError("; ".join(problems))
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario file must hold a JSON object")
    return scenario_from_dict(data)
