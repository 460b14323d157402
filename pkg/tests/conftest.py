"""Shared fixtures: the bundled reference scenario and the random corpus."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import pytest

import sentinelplan as sp
from sentinelplan.engines import EngineConfig
from sentinelplan.mesh import ROW_HEIGHT

CORPUS_SIZE = 50

#: Known 10-step route through the reference scenario: the agent at
#: (2.5, h) skirts the lower sensor and climbs to the target at (10.0, 6h).
TEN_STEP_ROUTE = [
    (2.5, 1), (3.5, 1), (4.5, 1), (5.5, 1), (6.0, 2), (7.0, 2),
    (7.5, 3), (8.0, 4), (9.0, 4), (9.5, 5), (10.0, 6),
]
#: 9-step knockout solution: the second agent acts at its first step.
NINE_STEP_ROUTE = [
    (1.5, 5), (2.5, 5), (3.5, 5), (4.0, 6), (5.0, 6), (6.0, 6),
    (7.0, 6), (8.0, 6), (9.0, 6), (10.0, 6),
]
#: 10-step maximum-evasion path (single-sensor exposure everywhere).
CLEAN_TEN_STEP_ROUTE = [
    (2.5, 1), (3.5, 1), (4.0, 2), (5.0, 2), (6.0, 2), (7.0, 2),
    (7.5, 3), (8.5, 3), (9.0, 4), (9.5, 5), (10.0, 6),
]


def vertex_at(mesh, x: float, row: int) -> int:
    vid = sp.nearest_vertex(mesh, (x, row * ROW_HEIGHT))
    vx, vy = mesh.position(vid)
    assert abs(vx - x) < 1e-6 and abs(vy - row * ROW_HEIGHT) < 1e-6, (x, row)
    return vid


def path_plan(scenario, agent_id: int, coords, knockouts=(), confusions=()):
    """Build a plan where one agent walks ``coords`` and the rest absorb."""
    mesh = scenario.mesh
    path = [vertex_at(mesh, x, row) for x, row in coords]
    T = scenario.horizon
    steps = len(path) - 1
    traj = list(path)
    if scenario.mode in ("min-time", "min-time-required-ped"):
        traj.extend([0] * (T - steps))
    else:
        traj.extend([traj[-1]] * (T - steps))
    trajectory = {agent_id: traj}
    for agent in scenario.agents:
        if agent.id != agent_id:
            trajectory[agent.id] = [agent.start] + [0] * T
    return sp.Plan(
        trajectory=trajectory,
        knockouts=[(a, vertex_at(mesh, x, row), t) for a, (x, row), t in knockouts],
        confusions=list(confusions),
        time_to_target=steps,
        mode=scenario.mode,
    )


@pytest.fixture(scope="session")
def ref_scenario():
    return sp.reference_scenario()


@pytest.fixture(scope="session")
def ref_tables(ref_scenario):
    return sp.derive_tables(ref_scenario)


def build_corpus(size: int = CORPUS_SIZE):
    """Deterministic random instances cycling the five case presets.

    All within the oracle caps: 9x9 mesh, at most 4 sensors, at most 2
    agents, horizon at most 10, budget at most 2.
    """
    instances = []
    seed = 0
    while len(instances) < size:
        seed += 1
        case = len(instances) % 5 + 1
        rng = random.Random(9000 + seed)
        try:
            scenario = sp.generate_instance(
                seed=9000 + seed,
                mesh_size=9,
                n_sensors=rng.randint(2, 4),
                n_agents=rng.choice([1, 2]),
                radius=rng.uniform(1.4, 2.3),
                params={"case": case, "slack": rng.choice([1, 2])},
            )
        except sp.GenerationFailedError:
            continue
        if scenario.horizon > 10:
            continue
        instances.append(scenario)
    return instances


@dataclass
class CorpusResult:
    scenario: object
    tables: object
    oracle: object | None = None
    exact: object | None = None
    exact_unreduced: object | None = None
    heuristic: object | None = None
    heuristic_error: str | None = None


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def corpus_results(corpus):
    """Solve every corpus instance with every engine once, for reuse."""
    results = []
    started = time.monotonic()
    for scenario in corpus:
        tables = sp.derive_tables(scenario)
        entry = CorpusResult(scenario=scenario, tables=tables)
        try:
            entry.oracle = sp.oracle_enumerate(scenario, tables)
        except sp.InfeasibleError:
            entry.oracle = None
        try:
            entry.exact = sp.solve_exact(scenario, tables)
        except sp.InfeasibleError:
            entry.exact = None
        try:
            entry.exact_unreduced = sp.solve_exact(
                scenario, tables, EngineConfig(use_reductions=False)
            )
        except sp.InfeasibleError:
            entry.exact_unreduced = None
        try:
            entry.heuristic, _ = sp.solve_heuristic(scenario, tables)
        except sp.InfeasibleError as exc:
            entry.heuristic = None
            entry.heuristic_error = str(exc)
        results.append(entry)
    elapsed = time.monotonic() - started
    return results, elapsed
