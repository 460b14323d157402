"""Successive shortest-path heuristic.

Each agent is considered in turn: find the shortest path to the target,
enumerate action placements along it (fewest actions first, earlier times
first), and accept the first combination that satisfies the mode's
requirement. Otherwise delete the path vertex covered by the most sensors
and repeat. The final answer is the best plan over all agents.

In the maximise-PED mode there is no crisp satisfaction test; we keep the
best combination per path and stop an agent after three consecutive paths
without improvement.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

from .errors import HeuristicInfeasibleError, PlannerError
from .formulation import Plan, validate_plan
from .ped import evaluate_ped, meets_required_ped
from .scenario import (
    HARD_MODES,
    MIN_TIME_FAMILY,
    MODE_MAX_PED,
    Agent,
    DerivedTables,
    Scenario,
    validate_scenario,
)

_STAGNATION_LIMIT = 3


@dataclass
class HeuristicIteration:
    iteration: int
    path: list[int]
    deleted_vertex: int | None
    combos_tried: int
    best_objective: float | None
    truncated: bool = False


@dataclass
class HeuristicTrace:
    per_agent: dict[int, list[HeuristicIteration]] = field(default_factory=dict)
    chosen_agent: int | None = None
    plan: Plan | None = None


def _bfs_path(scenario: Scenario, start: int, deleted: set[int]) -> list[int] | None:
    mesh = scenario.mesh
    goal = mesh.target
    if start == goal:
        return [start]
    parent = {start: start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in sorted(mesh.adjacency[u]):
            if w in parent or w in deleted:
                continue
            parent[w] = u
            if w == goal:
                path = [w]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(w)
    return None


def _timed_plan(
    scenario: Scenario,
    agent: Agent,
    path: list[int],
    combo: tuple[int, ...],
    action_kind: str,
) -> Plan | None:
    """Walk ``path``, acting at the chosen indices; None if it cannot fit.

    Dwell restrictions insert waiting steps at the action vertex; cooldowns
    and confusion-window overlaps are checked on the resulting times.
    """
    T = scenario.horizon
    traj = [path[0]]
    action_times: list[tuple[int, int]] = []
    dwell = agent.knockout_dwell if action_kind == "K" else agent.confusion_dwell
    cooldown = agent.knockout_cooldown if action_kind == "K" else agent.confusion_cooldown
    for i in range(1, len(path)):
        traj.append(path[i])
        if i in combo:
            t = len(traj) - 1
            action_times.append((path[i], t))
            if dwell:
                traj.extend([path[i]] * dwell)
    arrival = len(traj) - 1
    if arrival > T:
        return None
    times = [t for _, t in action_times]
    if cooldown is not None:
        if any(t2 - t1 <= cooldown for t1, t2 in zip(times, times[1:])):
            return None
    if action_kind == "C":
        if any(
            t2 <= t1 + agent.confusion_duration for t1, t2 in zip(times, times[1:])
        ):
            return None

    if scenario.mode in MIN_TIME_FAMILY:
        traj.extend([0] * (T - arrival))
    else:
        # stay at the target so the agent is there at exactly T
        traj.extend([scenario.mesh.target] * (T - arrival))
    trajectory = {agent.id: traj}
    for other in scenario.agents:
        if other.id != agent.id:
            trajectory[other.id] = [other.start] + [0] * T
    plan = Plan(trajectory=trajectory, mode=scenario.mode, time_to_target=arrival)
    if action_kind == "K":
        plan.knockouts = [(agent.id, v, t) for v, t in action_times]
    else:
        plan.confusions = [(agent.id, t) for _, t in action_times]
    if scenario.mode in MIN_TIME_FAMILY:
        plan.objective_value = float(arrival)
    return plan


def _enumerate_slots(
    scenario: Scenario, tables: DerivedTables, agent: Agent, path: list[int]
) -> tuple[str, list[int], int]:
    """Action kind, usable path indices, and the largest affordable count."""
    if scenario.mode in HARD_MODES:
        kind = "K"
        cost = agent.knockout_cost
        slots = [
            i for i in range(1, len(path)) if tables.knockout[:, path[i]].any()
        ]
    else:
        kind = "C"
        cost = agent.confusion_cost
        slots = list(range(1, len(path)))
    if scenario.budget <= 0:
        return kind, [], 0
    max_actions = len(slots) if cost <= 0 else min(len(slots), int(scenario.budget // cost))
    return kind, slots, max_actions


def solve_heuristic(
    scenario: Scenario,
    tables: DerivedTables,
    combo_limit: int = 100_000,
) -> tuple[Plan, HeuristicTrace]:
    validate_scenario(scenario)
    mode = scenario.mode
    trace = HeuristicTrace()
    counts = tables.coverage.sum(axis=0)
    maximizing = mode == MODE_MAX_PED

    best_plan: Plan | None = None
    best_score: float | None = None
    best_agent: int | None = None

    for agent in scenario.agents:
        records: list[HeuristicIteration] = []
        trace.per_agent[agent.id] = records
        deleted: set[int] = set()
        agent_best: tuple[float, Plan] | None = None
        stagnation = 0
        for iteration in range(1, scenario.mesh.n + 1):
            path = _bfs_path(scenario, agent.start, deleted)
            if path is None or len(path) - 1 > scenario.horizon:
                break
            kind, slots, max_actions = _enumerate_slots(scenario, tables, agent, path)
            record = HeuristicIteration(
                iteration=iteration, path=path, deleted_vertex=None, combos_tried=0,
                best_objective=None,
            )
            records.append(record)
            found: Plan | None = None
            path_best: tuple[float, Plan] | None = None
            done = False
            for k in range(0, max_actions + 1):
                for combo in combinations(slots, k):
                    if record.combos_tried >= combo_limit:
                        record.truncated = True
                        done = True
                        break
                    record.combos_tried += 1
                    plan = _timed_plan(scenario, agent, path, combo, kind)
                    if plan is None:
                        continue
                    if mode in HARD_MODES:
                        if validate_plan(plan, scenario, tables).ok:
                            found = plan
                            record.best_objective = float(plan.time_to_target)
                            done = True
                            break
                    else:
                        plan.ped = evaluate_ped(plan, scenario, tables)
                        if mode == MODE_MAX_PED:
                            plan.objective_value = plan.ped
                            if path_best is None or plan.ped > path_best[0]:
                                path_best = (plan.ped, plan)
                                record.best_objective = plan.ped
                        elif meets_required_ped(plan.ped, scenario.required_ped):
                            found = plan
                            record.best_objective = float(plan.time_to_target)
                            done = True
                            break
                if done:
                    break

            if found is not None:
                score = float(found.time_to_target)
                if agent_best is None or score < agent_best[0]:
                    agent_best = (score, found)
                break

            if maximizing and path_best is not None:
                if agent_best is None or path_best[0] > agent_best[0] + 1e-15:
                    agent_best = path_best
                    stagnation = 0
                else:
                    stagnation += 1
                if stagnation >= _STAGNATION_LIMIT:
                    break

            interior = path[1:-1]
            if not interior:
                break
            victim = max(
                interior,
                key=lambda v: (counts[v], -float(tables.evade[v]), -v),
            )
            if counts[victim] == 0:
                break
            deleted.add(victim)
            record.deleted_vertex = victim

        if agent_best is not None:
            score, plan = agent_best
            better = (
                best_score is None
                or (maximizing and score > best_score)
                or (not maximizing and score < best_score)
            )
            if better:
                best_plan, best_score, best_agent = plan, score, agent.id

    if best_plan is None:
        raise HeuristicInfeasibleError("heuristic found no feasible plan for any agent")
    report = validate_plan(best_plan, scenario, tables)
    if not report.ok:
        raise PlannerError(
            "heuristic produced an invalid plan: "
            + "; ".join(str(v) for v in report.violations[:3])
        )
    trace.chosen_agent = best_agent
    trace.plan = best_plan
    return best_plan, trace
