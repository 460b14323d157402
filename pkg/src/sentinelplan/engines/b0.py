"""Closed-form solver for the no-actions case.

With no budget the hard detection rule collapses to a forbidden-vertex
condition: a path may never touch a vertex covered by omega or more
sensors. The minimal time to target is then a plain shortest path for each
agent, avoiding the multi-covered set, taking the best agent.
"""

from __future__ import annotations

from collections import deque

from ..errors import ConfigError, InfeasibleError
from ..formulation import Plan
from ..mesh import Mesh
from ..scenario import MODE_MIN_TIME, DerivedTables, Scenario, validate_scenario


def _bfs_path(mesh: Mesh, source: int, goal: int, forbidden: frozenset[int]) -> list[int] | None:
    """Shortest path as a vertex list, exploring neighbours in id order."""
    if source == goal:
        return [source]
    parent: dict[int, int] = {source: source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in sorted(mesh.adjacency[u]):
            if w in parent or (w in forbidden and w != goal):
                continue
            parent[w] = u
            if w == goal:
                path = [w]
                while path[-1] != source:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(w)
    return None


def solve_b0(scenario: Scenario, tables: DerivedTables) -> Plan:
    """Minimal-time plan when no knockout or confusion actions are allowed."""
    validate_scenario(scenario)
    if scenario.mode != MODE_MIN_TIME:
        raise ConfigError(f"the B=0 solver handles {MODE_MIN_TIME} mode only, got {scenario.mode}")
    if scenario.budget != 0:
        raise ConfigError(f"the B=0 solver requires budget 0, got {scenario.budget}")

    mesh = scenario.mesh
    forbidden = frozenset(tables.multi_covered)
    best: tuple[int, int, list[int]] | None = None
    for agent in scenario.agents:
        path = _bfs_path(mesh, agent.start, mesh.target, forbidden)
        if path is None:
            continue
        steps = len(path) - 1
        if steps <= scenario.horizon and (best is None or steps < best[0]):
            best = (steps, agent.id, path)
    if best is None:
        raise InfeasibleError(
            "no agent can reach the target within the horizon while avoiding "
            f"vertices covered by >= {scenario.omega} sensors"
        )
    steps, winner, path = best
    T = scenario.horizon
    trajectory: dict[int, list[int]] = {}
    for agent in scenario.agents:
        if agent.id == winner:
            trajectory[agent.id] = path + [0] * (T - steps)
        else:
            trajectory[agent.id] = [agent.start] + [0] * T
    return Plan(
        trajectory=trajectory,
        knockouts=[],
        confusions=[],
        objective_value=float(steps),
        ped=None,
        time_to_target=steps,
        mode=scenario.mode,
    )
