"""0-1 integer program construction, LP file bridge, and plan validation.

The model builder emits the full constraint set for the selected mode:
movement and absorption rows, arrival rows, excess-agent rows, the knockout
machinery (action/budget/big-M linking/detection caps), the confusion
machinery (initiation windows, shared-cost budget, product linearisation),
and the required-evasion floor. Variables eliminated by the reduction mask
are substituted out; rows that become vacuous over the binary box are
dropped.

Variable names are normative for the LP bridge: ``x_a_v_t``, ``al_a_v_t``,
``lam_s_t``, ``y_s_a_t``, ``b_a_t``, ``z_t``, ``d_a_v_t``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    InfeasibleByReductionError,
    InvalidSolutionError,
    ScenarioParseError,
)
from .mesh import hop_distances
from .ped import confusion_flags, evaluate_ped, meets_required_ped, REQUIRED_PED_SLACK
from .scenario import (
    HARD_MODES,
    MIN_TIME_FAMILY,
    MODE_FEASIBILITY,
    MODE_MAX_PED,
    MODE_MIN_TIME_REQUIRED_PED,
    PED_MODES,
    DerivedTables,
    Scenario,
    validate_scenario,
)

PLAN_VERSION = 1

# Stand-in for ln(0) in LP objectives; visiting such a vertex zeroes the PED.
LOG_FLOOR = -1e9


@dataclass(frozen=True)
class VarRef:
    kind: str
    idx: tuple[int, ...]

    @property
    def name(self) -> str:
        return "_".join([self.kind, *map(str, self.idx)])


def parse_var_name(name: str) -> VarRef:
    parts = name.split("_")
    return VarRef(parts[0], tuple(int(p) for p in parts[1:]))


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[float, str], ...]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass
class Model:
    mode: str
    horizon: int
    variables: list[str]
    constraints: list[Constraint]
    objective: tuple[tuple[float, str], ...]
    objective_sense: str | None
    big_m: float | None
    scenario: Scenario

    @property
    def variable_set(self) -> set[str]:
        return set(self.variables)


@dataclass
class Plan:
    """A concrete mission plan: one vertex per agent per time step.

    ``trajectory[a][t]`` is agent a's vertex at time t (0 = absorbed).
    Knockouts are (agent, vertex, time) triples; confusions (agent, time).
    """

    trajectory: dict[int, list[int]]
    knockouts: list[tuple[int, int, int]] = field(default_factory=list)
    confusions: list[tuple[int, int]] = field(default_factory=list)
    objective_value: float | None = None
    ped: float | None = None
    time_to_target: int | None = None
    mode: str | None = None


def plan_to_dict(plan: Plan) -> dict:
    return {
        "version": PLAN_VERSION,
        "trajectory": {str(a): list(tr) for a, tr in sorted(plan.trajectory.items())},
        "knockouts": [list(k) for k in plan.knockouts],
        "confusions": [list(c) for c in plan.confusions],
        "objective_value": plan.objective_value,
        "ped": plan.ped,
        "time_to_target": plan.time_to_target,
        "mode": plan.mode,
    }


def plan_from_dict(data: Mapping) -> Plan:
    if data.get("version") != PLAN_VERSION:
        raise ScenarioParseError(f"unsupported plan version {data.get('version')!r}", field="version")
    return Plan(
        trajectory={int(a): [int(v) for v in tr] for a, tr in data["trajectory"].items()},
        knockouts=[tuple(int(x) for x in k) for k in data.get("knockouts", [])],
        confusions=[tuple(int(x) for x in c) for c in data.get("confusions", [])],
        objective_value=data.get("objective_value"),
        ped=data.get("ped"),
        time_to_target=data.get("time_to_target"),
        mode=data.get("mode"),
    )


@dataclass
class ReductionMask:
    """Which x variables stay active after shortest-path reductions.

    ``x_active[a, v, t]`` is indexed by agent id, vertex id (0 = sink), and
    time. ``z_linked`` holds vertices that may only be visited while
    confusion is active (required-PED mode).
    """

    x_active: np.ndarray
    z_linked: frozenset[int]
    excluded_fraction: float
    horizon: int

    @property
    def exclusion_percentage(self) -> float:
        return 100.0 * self.excluded_fraction


def _confusion_available(scenario: Scenario) -> bool:
    if scenario.mode not in PED_MODES or scenario.budget <= 0:
        return False
    return any(a.confusion_cost <= scenario.budget + 1e-9 for a in scenario.agents)


def _knockout_available(scenario: Scenario, tables: DerivedTables) -> bool:
    if scenario.mode not in HARD_MODES or scenario.budget <= 0:
        return False
    if not tables.knockout.any():
        return False
    return any(a.knockout_cost <= scenario.budget + 1e-9 for a in scenario.agents)


def reduce_variables(
    scenario: Scenario, tables: DerivedTables, horizon: int | None = None
) -> ReductionMask:
    """Mark the x variables that can matter, per the shortest-path bounds.

    x(a, v, t) is eliminated when the agent cannot reach v within t steps,
    or when going via v at time t leaves too little time to reach the target
    (routing through the exit waypoint when one is set). In required-PED
    mode, vertices whose confused evasion probability already falls below
    the floor are eliminated outright, and vertices below the floor only
    when unconfused are linked to the confusion indicator.
    """
    mesh = scenario.mesh
    T = horizon if horizon is not None else scenario.horizon
    n = mesh.n
    agents = scenario.agents
    n_agents = len(agents)
    active = np.zeros((n_agents + 1, n + 1, T + 1), dtype=bool)

    to_target = tables.distances_to_target
    # The exit-waypoint refinement is sound only when the visiting agent and
    # the arriving agent coincide, i.e. with a single agent. A visit to
    # (v, t) may fall before the waypoint (then t + D[v,xi] + D[xi,N] <= T)
    # or after it (then t >= D[start,xi] + D[xi,v] and t + D[v,N] <= T);
    # the variable dies only when both windows are empty.
    via = None
    if scenario.exit_target is not None and len(agents) == 1:
        via = hop_distances(mesh, scenario.exit_target).dist
        exit_leg = via[mesh.target]

    def mark(a: int, v: int, lo: float, hi: float) -> None:
        if math.isinf(lo) or lo > T:
            return
        lo = max(1, int(lo))
        hi = T if math.isinf(hi) or hi > T else int(hi)
        if hi >= lo:
            active[a, v, lo : hi + 1] = True

    reachable = False
    for agent in agents:
        a = agent.id
        active[a, 0, 1:] = True
        active[a, agent.start, 0] = True
        from_start = tables.distances_from_starts[a]
        if from_start[mesh.target] <= T:
            reachable = True
        for v in range(1, n + 1):
            dg = from_start[v]
            if math.isinf(dg):
                continue
            if via is not None:
                mark(a, v, dg, T - (via[v] + exit_leg))
                mark(a, v, from_start[scenario.exit_target] + via[v], T - to_target[v])
            else:
                mark(a, v, dg, T - to_target[v])
    if not reachable:
        raise InfeasibleByReductionError(
            f"no agent can reach the target within the horizon T={T}"
        )

    z_linked: frozenset[int] = frozenset()
    if scenario.mode == MODE_MIN_TIME_REQUIRED_PED:
        floor = scenario.required_ped - REQUIRED_PED_SLACK
        confusion = _confusion_available(scenario)
        linked = set()
        for v in range(1, n):
            if tables.evade_confused[v] < floor:
                active[:, v, 1:] = False
            elif tables.evade[v] < floor:
                if confusion:
                    linked.add(v)
                else:
                    active[:, v, 1:] = False
        z_linked = frozenset(linked)

    total = n_agents * n * T
    kept = int(active[1:, 1:, 1:].sum())
    return ReductionMask(
        x_active=active,
        z_linked=z_linked,
        excluded_fraction=(total - kept) / total if total else 0.0,
        horizon=T,
    )


def _full_mask(scenario: Scenario, horizon: int) -> ReductionMask:
    n = scenario.mesh.n
    n_agents = len(scenario.agents)
    active = np.zeros((n_agents + 1, n + 1, horizon + 1), dtype=bool)
    for agent in scenario.agents:
        active[agent.id, :, 1:] = True
        active[agent.id, agent.start, 0] = True
    return ReductionMask(x_active=active, z_linked=frozenset(), excluded_fraction=0.0, horizon=horizon)


class _Builder:
    def __init__(self, scenario: Scenario, tables: DerivedTables, mask: ReductionMask | None):
        self.scenario = scenario
        self.tables = tables
        self.T = scenario.horizon
        if mask is not None and mask.horizon != scenario.horizon:
            raise ConfigError(
                f"mask horizon {mask.horizon} does not match scenario horizon {scenario.horizon}"
            )
        self.mask = mask if mask is not None else _full_mask(scenario, scenario.horizon)
        self.n = scenario.mesh.n
        self.variables: list[str] = []
        self.registered: set[str] = set()
        self.constraints: list[Constraint] = []

    def register(self, name: str) -> str:
        if name not in self.registered:
            self.registered.add(name)
            self.variables.append(name)
        return name

    def xref(self, a: int, v: int, t: int):
        if t == 0:
            start = self.scenario.agent(a).start
            return ("c", 1.0 if v == start else 0.0)
        if self.mask.x_active[a, v, t]:
            return ("v", f"x_{a}_{v}_{t}")
        return ("c", 0.0)

    def emit(self, name: str, terms: Iterable[tuple[float, tuple]], sense: str, rhs: float) -> None:
        coefs: dict[str, float] = {}
        shift = 0.0
        for coef, ref in terms:
            if coef == 0.0:
                continue
            kind, val = ref
            if kind == "c":
                shift += coef * val
            else:
                coefs[val] = coefs.get(val, 0.0) + coef
        rhs = rhs - shift
        coefs = {k: c for k, c in coefs.items() if c != 0.0}
        if not coefs:
            satisfied = {
                "<=": 0.0 <= rhs + 1e-9,
                ">=": 0.0 >= rhs - 1e-9,
                "=": abs(rhs) <= 1e-9,
            }[sense]
            if not satisfied:
                raise InfeasibleByReductionError(
                    f"constraint {name} became unsatisfiable after variable elimination"
                )
            return
        if sense == "<=" and sum(c for c in coefs.values() if c > 0) <= rhs + 1e-12:
            return
        if sense == ">=" and sum(c for c in coefs.values() if c < 0) >= rhs - 1e-12:
            return
        for var in coefs:
            if var not in self.registered:
                raise ConfigError(f"constraint {name} references unregistered variable {var}")
        self.constraints.append(
            Constraint(name, tuple((c, v) for v, c in coefs.items()), sense, rhs)
        )


def build_model(
    scenario: Scenario,
    tables: DerivedTables,
    mask: ReductionMask | None = None,
    single_agent_selection: bool = False,
) -> Model:
    """Assemble the 0-1 program for the scenario's mode.

    ``mask=None`` builds the unreduced model. ``single_agent_selection``
    adds the row forcing all but one agent straight to the sink, for
    scenarios whose agents model alternative start positions.
    """
    validate_scenario(scenario)
    b = _Builder(scenario, tables, mask)
    scn, T, n = scenario, b.T, b.n
    mesh = scn.mesh
    agents = scn.agents
    target = mesh.target
    knockout_on = _knockout_available(scn, tables)
    confusion_on = _confusion_available(scn)

    # --- variable registration (canonical order) ---
    for agent in agents:
        a = agent.id
        for t in range(1, T + 1):
            b.register(f"x_{a}_0_{t}")
        for v in range(1, n + 1):
            for t in range(1, T + 1):
                if b.mask.x_active[a, v, t]:
                    b.register(f"x_{a}_{v}_{t}")

    ksets = {
        v: tuple(s for s in range(len(scn.sensors)) if tables.knockout[s, v])
        for v in range(1, n + 1)
    }
    alpha_exists: set[tuple[int, int, int]] = set()
    if knockout_on:
        for agent in agents:
            a = agent.id
            for v in range(1, n + 1):
                if not ksets[v]:
                    continue
                for t in range(1, T + 1):
                    if b.mask.x_active[a, v, t]:
                        b.register(f"al_{a}_{v}_{t}")
                        alpha_exists.add((a, v, t))

    lam_exists: set[tuple[int, int]] = set()
    if knockout_on:
        for s in range(len(scn.sensors)):
            capable = [v for v in range(1, n + 1) if tables.knockout[s, v]]
            for t in range(1, T + 1):
                hit = False
                for agent in agents:
                    lo = max(1, t - agent.knockout_duration)
                    if any(
                        (agent.id, v, tau) in alpha_exists
                        for v in capable
                        for tau in range(lo, t + 1)
                    ):
                        hit = True
                        break
                if hit:
                    b.register(f"lam_{s + 1}_{t}")
                    lam_exists.add((s + 1, t))

    multi = sorted(tables.multi_covered)
    y_exists: set[tuple[int, int, int]] = set()
    if scn.mode in HARD_MODES:
        for s in range(len(scn.sensors)):
            for agent in agents:
                a = agent.id
                for t in range(1, T + 1):
                    if any(
                        tables.coverage[s, v] and b.mask.x_active[a, v, t] for v in multi
                    ):
                        b.register(f"y_{s + 1}_{a}_{t}")
                        y_exists.add((s + 1, a, t))

    if confusion_on:
        for agent in agents:
            for t in range(1, T + 1):
                b.register(f"b_{agent.id}_{t}")
        for t in range(1, T + 1):
            b.register(f"z_{t}")
        for agent in agents:
            a = agent.id
            for v in range(1, n):
                for t in range(1, T + 1):
                    if b.mask.x_active[a, v, t]:
                        b.register(f"d_{a}_{v}_{t}")

    # --- movement ---
    for agent in agents:
        a = agent.id
        for t in range(1, T + 1):
            terms = [(1.0, b.xref(a, v, t)) for v in range(0, n + 1)]
            b.emit(f"one_{a}_{t}", terms, "=", 1.0)
        for v in range(1, n + 1):
            near = mesh.adjacency[v]
            for t0 in range(0, T):
                # reach: at t0+1 an agent is at v only if it was at v or a neighbour
                terms = [(1.0, b.xref(a, v, t0 + 1)), (-1.0, b.xref(a, v, t0))]
                terms += [(-1.0, b.xref(a, k, t0)) for k in sorted(near)]
                b.emit(f"reach_{a}_{v}_{t0 + 1}", terms, "<=", 0.0)
        for v in range(1, n + 1):
            near = mesh.adjacency[v]
            for t0 in range(0, T):
                # leave: from v an agent may stay, move to a neighbour, or drop to the sink
                terms = [(1.0, b.xref(a, v, t0))]
                terms += [(-1.0, b.xref(a, v, t0 + 1)), (-1.0, b.xref(a, 0, t0 + 1))]
                terms += [(-1.0, b.xref(a, k, t0 + 1)) for k in sorted(near)]
                b.emit(f"leave_{a}_{v}_{t0}", terms, "<=", 0.0)
        for t in range(1, T):
            b.emit(
                f"stay0_{a}_{t}",
                [(1.0, b.xref(a, 0, t)), (-1.0, b.xref(a, 0, t + 1))],
                "<=",
                0.0,
            )

    # --- arrival ---
    if scn.mode == MODE_FEASIBILITY:
        b.emit(
            "arriveT",
            [(1.0, b.xref(agent.id, target, T)) for agent in agents],
            ">=",
            1.0,
        )
    elif scn.mode in MIN_TIME_FAMILY:
        b.emit(
            "arrive",
            [
                (1.0, b.xref(agent.id, target, t))
                for agent in agents
                for t in range(1, T + 1)
            ],
            ">=",
            1.0,
        )
        for agent in agents:
            a = agent.id
            for t in range(1, T):
                b.emit(
                    f"exitN_{a}_{t}",
                    [(1.0, b.xref(a, 0, t + 1)), (-1.0, b.xref(a, target, t))],
                    ">=",
                    0.0,
                )
    elif scn.mode == MODE_MAX_PED:
        b.emit(
            "arriveT",
            [(1.0, b.xref(agent.id, target, T)) for agent in agents],
            ">=",
            1.0,
        )

    if scn.exit_target is not None:
        b.emit(
            "visitexit",
            [
                (1.0, b.xref(agent.id, scn.exit_target, t))
                for agent in agents
                for t in range(1, T + 1)
            ],
            ">=",
            1.0,
        )

    # --- excess agents ---
    for agent in agents:
        a = agent.id
        terms = [(-1.0, b.xref(a, 0, 1))]
        terms += [(-1.0, b.xref(a, target, t)) for t in range(1, T + 1)]
        if knockout_on:
            terms += [
                (-1.0, ("v", f"al_{a}_{v}_{t}"))
                for v in range(1, n + 1)
                for t in range(1, T + 1)
                if (a, v, t) in alpha_exists
            ]
        if confusion_on:
            terms += [(-1.0, ("v", f"b_{a}_{t}")) for t in range(1, T + 1)]
        b.emit(f"excess_{a}", terms, "<=", -1.0)
    if single_agent_selection:
        b.emit(
            "pickone",
            [(1.0, b.xref(agent.id, 0, 1)) for agent in agents],
            "=",
            float(len(agents) - 1),
        )

    # --- knockout machinery ---
    big_m: float | None = None
    if knockout_on:
        positive = [a.knockout_cost for a in agents if a.knockout_cost > 0]
        big_m = scn.budget / min(positive) if positive else float(len(agents) * n * T)
        for a, v, t in sorted(alpha_exists):
            b.emit(
                f"kx_{a}_{v}_{t}",
                [(1.0, ("v", f"al_{a}_{v}_{t}")), (-1.0, b.xref(a, v, t))],
                "<=",
                0.0,
            )
        cost_terms = [
            (agents[a - 1].knockout_cost, ("v", f"al_{a}_{v}_{t}"))
            for a, v, t in sorted(alpha_exists)
        ]
        if confusion_on:
            cost_terms += [
                (agent.confusion_cost, ("v", f"b_{agent.id}_{t}"))
                for agent in agents
                for t in range(1, T + 1)
            ]
        b.emit("budget", cost_terms, "<=", scn.budget)

        for s, t in sorted(lam_exists):
            window: list[tuple[float, tuple]] = []
            for agent in agents:
                lo = max(1, t - agent.knockout_duration)
                for v in range(1, n + 1):
                    if not tables.knockout[s - 1, v]:
                        continue
                    for tau in range(lo, t + 1):
                        if (agent.id, v, tau) in alpha_exists:
                            window.append((1.0, ("v", f"al_{agent.id}_{v}_{tau}")))
            b.emit(
                f"lamub_{s}_{t}",
                [(1.0, ("v", f"lam_{s}_{t}"))] + [(-c, r) for c, r in window],
                "<=",
                0.0,
            )
            b.emit(
                f"lamlb_{s}_{t}",
                [(big_m, ("v", f"lam_{s}_{t}"))] + [(-c, r) for c, r in window],
                ">=",
                0.0,
            )

    if scn.mode in HARD_MODES:
        for s in range(1, len(scn.sensors) + 1):
            for agent in agents:
                a = agent.id
                for v in multi:
                    if not tables.coverage[s - 1, v]:
                        continue
                    for t in range(1, T + 1):
                        if not b.mask.x_active[a, v, t]:
                            continue
                        terms = [(1.0, ("v", f"y_{s}_{a}_{t}")), (-1.0, b.xref(a, v, t))]
                        if (s, t) in lam_exists:
                            terms.append((1.0, ("v", f"lam_{s}_{t}")))
                        b.emit(f"det_{s}_{a}_{v}_{t}", terms, ">=", 0.0)
        for agent in agents:
            a = agent.id
            for t in range(1, T + 1):
                ys = [
                    (1.0, ("v", f"y_{s}_{a}_{t}"))
                    for s in range(1, len(scn.sensors) + 1)
                    if (s, a, t) in y_exists
                ]
                if ys:
                    b.emit(f"omega_{a}_{t}", ys, "<=", float(scn.omega - 1))

    if knockout_on:
        for agent in agents:
            a = agent.id
            if agent.knockout_cooldown is not None:
                phi = agent.knockout_cooldown
                for t in range(1, T - phi + 1):
                    terms = [
                        (1.0, ("v", f"al_{a}_{v}_{tau}"))
                        for v in range(1, n + 1)
                        for tau in range(t, t + phi + 1)
                        if (a, v, tau) in alpha_exists
                    ]
                    if terms:
                        b.emit(f"kocd_{a}_{t}", terms, "<=", 1.0)
            if agent.knockout_dwell is not None:
                psi = agent.knockout_dwell
                for a2, v, t in sorted(alpha_exists):
                    if a2 != a:
                        continue
                    for tau in range(t, min(t + psi, T) + 1):
                        b.emit(
                            f"kodw_{a}_{v}_{t}_{tau}",
                            [
                                (1.0, b.xref(a, 0, tau)),
                                (1.0, b.xref(a, v, tau)),
                                (-1.0, ("v", f"al_{a}_{v}_{t}")),
                            ],
                            ">=",
                            0.0,
                        )

    # --- confusion machinery ---
    if confusion_on:
        for t in range(1, T + 1):
            terms: list[tuple[float, tuple]] = [(1.0, ("v", f"z_{t}"))]
            for agent in agents:
                lo = max(1, t - agent.confusion_duration)
                terms += [(-1.0, ("v", f"b_{agent.id}_{tau}")) for tau in range(lo, t + 1)]
            b.emit(f"zdef_{t}", terms, "=", 0.0)
        for agent in agents:
            a = agent.id
            for t in range(1, T + 1):
                b.emit(
                    f"bact_{a}_{t}",
                    [(1.0, ("v", f"b_{a}_{t}")), (1.0, b.xref(a, 0, t))],
                    "<=",
                    1.0,
                )
        if not knockout_on:
            b.emit(
                "budget",
                [
                    (agent.confusion_cost, ("v", f"b_{agent.id}_{t}"))
                    for agent in agents
                    for t in range(1, T + 1)
                ],
                "<=",
                scn.budget,
            )
        for agent in agents:
            a = agent.id
            if agent.confusion_cooldown is not None:
                phi = agent.confusion_cooldown
                for t in range(1, T - phi + 1):
                    b.emit(
                        f"cocd_{a}_{t}",
                        [(1.0, ("v", f"b_{a}_{tau}")) for tau in range(t, t + phi + 1)],
                        "<=",
                        1.0,
                    )
            if agent.confusion_dwell is not None:
                psi = agent.confusion_dwell
                for t in range(1, T + 1):
                    for v in range(1, n + 1):
                        if not b.mask.x_active[a, v, t]:
                            continue
                        for tau in range(t, min(t + psi, T) + 1):
                            b.emit(
                                f"codw_{a}_{v}_{t}_{tau}",
                                [
                                    (1.0, b.xref(a, 0, tau)),
                                    (1.0, b.xref(a, v, tau)),
                                    (-1.0, b.xref(a, v, t)),
                                    (-1.0, ("v", f"b_{a}_{t}")),
                                ],
                                ">=",
                                -1.0,
                            )
        for agent in agents:
            a = agent.id
            for v in range(1, n):
                for t in range(1, T + 1):
                    if not b.mask.x_active[a, v, t]:
                        continue
                    dvar = ("v", f"d_{a}_{v}_{t}")
                    b.emit(
                        f"dlo_{a}_{v}_{t}",
                        [(1.0, dvar), (-1.0, b.xref(a, v, t)), (-1.0, ("v", f"z_{t}"))],
                        ">=",
                        -1.0,
                    )
                    b.emit(f"dup_{a}_{v}_{t}", [(1.0, dvar), (-1.0, b.xref(a, v, t))], "<=", 0.0)
                    b.emit(f"dz_{a}_{v}_{t}", [(1.0, dvar), (-1.0, ("v", f"z_{t}"))], "<=", 0.0)

    # --- required-PED rows ---
    if scn.mode == MODE_MIN_TIME_REQUIRED_PED:
        if confusion_on:
            for v in sorted(b.mask.z_linked):
                for agent in agents:
                    a = agent.id
                    for t in range(1, T + 1):
                        if b.mask.x_active[a, v, t]:
                            b.emit(
                                f"zlink_{a}_{v}_{t}",
                                [(1.0, b.xref(a, v, t)), (-1.0, ("v", f"z_{t}"))],
                                "<=",
                                0.0,
                            )
        floor_terms = _ped_objective_terms(b, confusion_on)
        b.emit("pedfloor", floor_terms, ">=", math.log(scn.required_ped))

    # --- objective ---
    objective: tuple[tuple[float, str], ...] = ()
    sense: str | None = None
    if scn.mode in MIN_TIME_FAMILY:
        sense = "min"
        terms = []
        for agent in agents:
            for t in range(1, T + 1):
                ref = b.xref(agent.id, target, t)
                if ref[0] == "v":
                    terms.append((float(t), ref[1]))
        objective = tuple(terms)
    elif scn.mode == MODE_MAX_PED:
        sense = "max"
        objective = tuple(
            (c, ref[1]) for c, ref in _ped_objective_terms(b, confusion_on) if ref[0] == "v"
        )

    return Model(
        mode=scn.mode,
        horizon=T,
        variables=b.variables,
        constraints=b.constraints,
        objective=objective,
        objective_sense=sense,
        big_m=big_m,
        scenario=scn,
    )


def _ped_objective_terms(b: _Builder, confusion_on: bool) -> list[tuple[float, tuple]]:
    """ln(Q_v) x terms plus ln(Qc_v / Q_v) delta terms."""
    scn, tables, T, n = b.scenario, b.tables, b.T, b.n
    terms: list[tuple[float, tuple]] = []
    for agent in scn.agents:
        a = agent.id
        for v in range(1, n):
            q = float(tables.evade[v])
            lnq = math.log(q) if q > 0 else LOG_FLOOR
            if lnq != 0.0:
                for t in range(1, T + 1):
                    if b.mask.x_active[a, v, t]:
                        terms.append((lnq, ("v", f"x_{a}_{v}_{t}")))
            if confusion_on:
                qc = float(tables.evade_confused[v])
                lnqc = math.log(qc) if qc > 0 else LOG_FLOOR
                gain = lnqc - lnq
                if gain != 0.0:
                    for t in range(1, T + 1):
                        if b.mask.x_active[a, v, t]:
                            terms.append((gain, ("v", f"d_{a}_{v}_{t}")))
    return terms


# ---------------------------------------------------------------------------
# LP text bridge
# ---------------------------------------------------------------------------


def _fmt_coef(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _write_expr(parts: list[str], terms: Sequence[tuple[float, str]]) -> None:
    for i, (coef, var) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if i == 0 and sign == "+":
            lead = ""
        else:
            lead = f"{sign} "
        if mag == 1.0:
            parts.append(f"{lead}{var}")
        else:
            parts.append(f"{lead}{_fmt_coef(mag)} {var}")


def export_lp(model: Model, path: str | Path) -> None:
    """Write the model in LP text format with deterministic ordering."""
    lines: list[str] = []
    lines.append("\\ sentinelplan model")
    lines.append(f"\\ mode={model.mode} horizon={model.horizon}")
    lines.append("Maximize" if model.objective_sense == "max" else "Minimize")
    parts: list[str] = ["obj:"]
    _write_expr(parts, model.objective)
    lines.append(_wrap(parts))
    lines.append("Subject To")
    for con in model.constraints:
        parts = [f"{con.name}:"]
        _write_expr(parts, con.terms)
        parts.append({"<=": "<=", ">=": ">=", "=": "="}[con.sense])
        parts.append(_fmt_coef(con.rhs))
        lines.append(_wrap(parts))
    lines.append("Binaries")
    chunk: list[str] = []
    for name in model.variables:
        chunk.append(name)
        if len(chunk) == 8:
            lines.append(" " + " ".join(chunk))
            chunk = []
    if chunk:
        lines.append(" " + " ".join(chunk))
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


def _wrap(parts: list[str], limit: int = 180) -> str:
    out: list[str] = []
    line = " " + parts[0]
    for p in parts[1:]:
        if len(line) + 1 + len(p) > limit:
            out.append(line)
            line = "   " + p
        else:
            line += " " + p
    out.append(line)
    return "\n".join(out)


@dataclass
class ParsedLP:
    sense: str
    objective: list[tuple[float, str]]
    constraints: list[tuple[str, list[tuple[float, str]], str, float]]
    binaries: list[str]


_TERM_RE = re.compile(r"([+-])|(\d+(?:\.\d+)?(?:e[+-]?\d+)?)|([A-Za-z][A-Za-z0-9_]*)", re.I)


def _parse_terms(text: str) -> list[tuple[float, str]]:
    terms: list[tuple[float, str]] = []
    sign = 1.0
    coef: float | None = None
    for match in _TERM_RE.finditer(text):
        s, num, name = match.groups()
        if s:
            sign = -1.0 if s == "-" else 1.0
        elif num:
            coef = (coef if coef is not None else 1.0) * float(num)
        elif name:
            terms.append((sign * (coef if coef is not None else 1.0), name))
            sign, coef = 1.0, None
    return terms


def parse_lp(path: str | Path) -> ParsedLP:
    """Read back an LP file written by :func:`export_lp`."""
    raw = Path(path).read_text()
    lines = [ln for ln in raw.splitlines() if not ln.lstrip().startswith("\\")]
    text = "\n".join(lines)
    lower = text.lower()

    def section(*keys: str) -> int:
        for key in keys:
            idx = lower.find(key)
            if idx >= 0:
                return idx
        return -1

    obj_at = section("minimize", "maximize")
    st_at = section("subject to")
    bin_at = section("binaries", "binary")
    end_at = section("\nend")
    if min(obj_at, st_at, bin_at, end_at) < 0:
        raise InvalidSolutionError("LP file is missing a required section")
    sense = "max" if lower[obj_at] == "m" and lower[obj_at : obj_at + 8] == "maximize" else "min"
    obj_body = text[obj_at + len("minimize") : st_at]
    obj_body = obj_body.split(":", 1)[1] if ":" in obj_body else obj_body
    objective = _parse_terms(obj_body)

    constraints = []
    body = text[st_at + len("subject to") : bin_at]
    # constraint rows may wrap; a new row starts where a name is followed by ':'
    rows = re.split(r"\n(?=\s*[A-Za-z][A-Za-z0-9_]*\s*:)", body.strip("\n"))
    for row in rows:
        row = " ".join(row.split())
        if not row:
            continue
        name, rest = row.split(":", 1)
        m = re.search(r"(<=|>=|=)", rest)
        if not m:
            raise InvalidSolutionError(f"constraint {name.strip()} has no sense token")
        lhs, rhs = rest[: m.start()], rest[m.end() :]
        constraints.append((name.strip(), _parse_terms(lhs), m.group(1), float(rhs)))

    binaries = text[bin_at:end_at].split()[1:]
    return ParsedLP(sense=sense, objective=objective, constraints=constraints, binaries=binaries)


def import_solution(path: str | Path, model: Model) -> Plan:
    """Read a ``name value`` solution file and assemble a plan.

    Unlisted binaries default to 0. Values must be within 1e-6 of {0, 1}
    after rounding; y/lam/z/d values are ignored and re-derived later, which
    also disposes of the spurious detections the big-M rows permit.
    """
    values: dict[str, float] = {}
    known = model.variable_set
    for ln_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidSolutionError(f"line {ln_no}: expected 'name value', got {line!r}")
        name, raw = parts
        if name not in known:
            raise InvalidSolutionError(f"line {ln_no}: unknown variable {name!r}")
        try:
            val = float(raw)
        except ValueError:
            raise InvalidSolutionError(f"line {ln_no}: bad value {raw!r}") from None
        if not -1e-6 <= val <= 1 + 1e-6:
            raise InvalidSolutionError(
                f"line {ln_no}: value {val} for {name} outside [-1e-6, 1+1e-6]"
            )
        if abs(val - round(val)) > 1e-6:
            raise InvalidSolutionError(f"line {ln_no}: value {val} for {name} is fractional")
        values[name] = round(val)

    scn = model.scenario
    T = model.horizon
    trajectory: dict[int, list[int]] = {}
    for agent in scn.agents:
        a = agent.id
        traj = [agent.start]
        for t in range(1, T + 1):
            here = [
                v
                for v in range(0, scn.mesh.n + 1)
                if values.get(f"x_{a}_{v}_{t}", 0.0) == 1.0
            ]
            if len(here) != 1:
                raise InvalidSolutionError(
                    f"agent {a} occupies {len(here)} vertices at t={t}"
                )
            traj.append(here[0])
        trajectory[a] = traj

    knockouts = sorted(
        parse_var_name(name).idx
        for name, val in values.items()
        if name.startswith("al_") and val == 1.0
    )
    confusions = sorted(
        parse_var_name(name).idx
        for name, val in values.items()
        if name.startswith("b_") and val == 1.0
    )
    plan = Plan(
        trajectory=trajectory,
        knockouts=[(a, v, t) for a, v, t in knockouts],
        confusions=[(a, t) for a, t in confusions],
        mode=scn.mode,
    )
    arrivals = [
        t
        for a in trajectory
        for t in range(1, T + 1)
        if trajectory[a][t] == scn.mesh.target
    ]
    plan.time_to_target = min(arrivals) if arrivals else None
    if scn.mode in MIN_TIME_FAMILY:
        plan.objective_value = float(sum(arrivals))
    return plan


# ---------------------------------------------------------------------------
# Plan validation
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    family: str
    message: str

    def __str__(self) -> str:  # pragma: no cover
        return f"[{self.family}] {self.message}"


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation]
    ped: float | None = None
    loglinear_ped: float | None = None
    max_simultaneous_detections: int | None = None
    time_to_target: int | None = None
    objective_value: float | None = None


def loglinear_objective(plan: Plan, scenario: Scenario, tables: DerivedTables) -> float:
    """Value of the linearised PED objective for a concrete plan."""
    n = scenario.mesh.n
    confused = confusion_flags(plan.confusions, scenario)
    total = 0.0
    for t in range(1, scenario.horizon + 1):
        for agent in scenario.agents:
            v = plan.trajectory[agent.id][t]
            if not 1 <= v <= n - 1:
                continue
            q = float(tables.evade[v])
            total += math.log(q) if q > 0 else -math.inf
            if confused[t]:
                qc = float(tables.evade_confused[v])
                lnqc = math.log(qc) if qc > 0 else -math.inf
                lnq = math.log(q) if q > 0 else -math.inf
                gain = lnqc - lnq
                total += 0.0 if math.isnan(gain) else gain
    return total


def validate_plan(plan: Plan, scenario: Scenario, tables: DerivedTables) -> ValidationReport:
    """Re-check every constraint family against the raw scenario data.

    This checker is independent of both the model builder and the search
    engines: it recomputes knockout windows, confusion windows, detection
    counts, budgets, and PED straight from the plan.
    """
    out: list[Violation] = []
    mesh = scenario.mesh
    n, T = mesh.n, scenario.horizon
    target = mesh.target
    mode = plan.mode or scenario.mode

    def bad(family: str, message: str) -> None:
        out.append(Violation(family, message))

    # shape and movement
    ids = sorted(a.id for a in scenario.agents)
    if sorted(plan.trajectory) != ids:
        bad("shape", f"trajectory agents {sorted(plan.trajectory)} != scenario agents {ids}")
        return ValidationReport(ok=False, violations=out)
    for agent in scenario.agents:
        traj = plan.trajectory[agent.id]
        if len(traj) != T + 1:
            bad("shape", f"agent {agent.id} trajectory has {len(traj)} entries, wanted {T + 1}")
            return ValidationReport(ok=False, violations=out)
        if traj[0] != agent.start:
            bad("initial", f"agent {agent.id} starts at {traj[0]}, declared start {agent.start}")
        for t in range(T):
            u, w = traj[t], traj[t + 1]
            if u == 0:
                if w != 0:
                    bad("absorption", f"agent {agent.id} left the sink at t={t + 1}")
                continue
            if w == u or w == 0 or w in mesh.adjacency.get(u, frozenset()):
                pass
            else:
                bad(
                    "movement",
                    f"agent {agent.id} jumped {u} -> {w} between t={t} and t={t + 1}",
                )
            if mode in MIN_TIME_FAMILY and u == target and 1 <= t <= T - 1 and w != 0:
                bad("absorption", f"agent {agent.id} stayed in play after the target at t={t}")

    # arrival
    arrivals = [
        (agent.id, t)
        for agent in scenario.agents
        for t in range(1, T + 1)
        if plan.trajectory[agent.id][t] == target
    ]
    if mode in (MODE_FEASIBILITY, MODE_MAX_PED):
        if not any(plan.trajectory[a.id][T] == target for a in scenario.agents):
            bad("arrival", f"no agent is at the target at T={T}")
    elif not arrivals:
        bad("arrival", "no agent ever reaches the target")
    if scenario.exit_target is not None:
        if not any(
            plan.trajectory[a.id][t] == scenario.exit_target
            for a in scenario.agents
            for t in range(1, T + 1)
        ):
            bad("arrival", f"exit waypoint {scenario.exit_target} never visited")

    # actions: placement, mode, windows
    kos_by_agent: dict[int, list[tuple[int, int]]] = {a.id: [] for a in scenario.agents}
    if plan.knockouts and mode not in HARD_MODES:
        bad("knockout", f"knockout actions are not available in mode {mode}")
    for a, v, tau in plan.knockouts:
        if a not in plan.trajectory or not 1 <= tau <= T:
            bad("knockout", f"knockout ({a}, {v}, {tau}) out of range")
            continue
        if plan.trajectory[a][tau] != v:
            bad("knockout", f"agent {a} is not at vertex {v} at t={tau}")
        if v < 1 or not tables.knockout[:, v].any():
            bad("knockout", f"vertex {v} cannot knock out any sensor")
        kos_by_agent.setdefault(a, []).append((v, tau))
    for agent in scenario.agents:
        times = sorted(tau for _, tau in kos_by_agent[agent.id])
        if agent.knockout_cooldown is not None:
            for t1, t2 in zip(times, times[1:]):
                if t2 - t1 <= agent.knockout_cooldown:
                    bad(
                        "knockout",
                        f"agent {agent.id} knockouts at t={t1},{t2} violate cooldown {agent.knockout_cooldown}",
                    )
        if agent.knockout_dwell is not None:
            for v, tau in kos_by_agent[agent.id]:
                for t2 in range(tau + 1, min(tau + agent.knockout_dwell, T) + 1):
                    if plan.trajectory[agent.id][t2] not in (v, 0):
                        bad(
                            "knockout",
                            f"agent {agent.id} left knockout vertex {v} at t={t2} during dwell",
                        )

    if plan.confusions and mode not in PED_MODES:
        bad("confusion", f"confusion actions are not available in mode {mode}")
    confs = sorted(plan.confusions, key=lambda c: c[1])
    for a, tau in confs:
        if a not in plan.trajectory or not 1 <= tau <= T:
            bad("confusion", f"confusion ({a}, {tau}) out of range")
            continue
        if plan.trajectory[a][tau] == 0:
            bad("confusion", f"agent {a} initiated confusion from the sink at t={tau}")
    for (a1, t1), (a2, t2) in zip(confs, confs[1:]):
        d1 = scenario.agent(a1).confusion_duration
        if t2 <= t1 + d1:
            bad(
                "confusion",
                f"confusion windows overlap: t={t1} (agent {a1}) still covers t={t2}",
            )
    for agent in scenario.agents:
        times = sorted(t for a, t in confs if a == agent.id)
        if agent.confusion_cooldown is not None:
            for t1, t2 in zip(times, times[1:]):
                if t2 - t1 <= agent.confusion_cooldown:
                    bad(
                        "confusion",
                        f"agent {agent.id} confusions at t={t1},{t2} violate cooldown {agent.confusion_cooldown}",
                    )
        if agent.confusion_dwell is not None:
            for a, tau in confs:
                if a != agent.id:
                    continue
                v = plan.trajectory[a][tau]
                for t2 in range(tau + 1, min(tau + agent.confusion_dwell, T) + 1):
                    if plan.trajectory[a][t2] not in (v, 0):
                        bad(
                            "confusion",
                            f"agent {a} left confusion vertex {v} at t={t2} during dwell",
                        )

    # excess rule
    for agent in scenario.agents:
        reached = any(plan.trajectory[agent.id][t] == target for t in range(1, T + 1))
        acted = any(k[0] == agent.id for k in plan.knockouts) or any(
            c[0] == agent.id for c in plan.confusions
        )
        if not reached and not acted and plan.trajectory[agent.id][1] != 0:
            bad(
                "excess",
                f"agent {agent.id} neither reaches the target nor acts but stays in play",
            )

    # budget
    spend = sum(scenario.agent(a).knockout_cost for a, _, _ in plan.knockouts) + sum(
        scenario.agent(a).confusion_cost for a, _ in plan.confusions
    )
    if spend > scenario.budget + 1e-9:
        bad("budget", f"actions cost {spend}, budget is {scenario.budget}")

    # hard detection rule, with knockout priority
    max_seen: int | None = None
    if mode in HARD_MODES:
        max_seen = 0
        S = len(scenario.sensors)
        for t in range(1, T + 1):
            inactive = set()
            for a, v, tau in plan.knockouts:
                if tau <= t <= tau + scenario.agent(a).knockout_duration:
                    for s in range(S):
                        if tables.knockout[s, v]:
                            inactive.add(s)
            for agent in scenario.agents:
                v = plan.trajectory[agent.id][t]
                if v in (0, target):
                    continue
                count = sum(
                    1 for s in range(S) if tables.coverage[s, v] and s not in inactive
                )
                max_seen = max(max_seen, count)
                if count >= scenario.omega:
                    bad(
                        "detection",
                        f"agent {agent.id} at vertex {v} t={t} seen by {count} sensors (omega={scenario.omega})",
                    )

    # PED bookkeeping
    ped = loglin = None
    if mode in PED_MODES:
        ped = evaluate_ped(plan, scenario, tables)
        loglin = math.exp(loglinear_objective(plan, scenario, tables))
        if abs(ped - loglin) > 1e-6 * max(abs(ped), 1e-12):
            bad("ped", f"product PED {ped} disagrees with exp(linearised) {loglin}")
        if plan.ped is not None and abs(plan.ped - ped) > 1e-9 * max(abs(ped), 1e-12):
            bad("ped", f"plan reports PED {plan.ped}, recomputed {ped}")
        if mode == MODE_MIN_TIME_REQUIRED_PED and scenario.required_ped is not None:
            if not meets_required_ped(ped, scenario.required_ped):
                bad("ped", f"PED {ped} below required floor {scenario.required_ped}")

    arrival_time = min((t for _, t in arrivals), default=None)
    if plan.time_to_target is not None and plan.time_to_target != arrival_time:
        bad(
            "objective",
            f"plan reports time_to_target {plan.time_to_target}, trajectory says {arrival_time}",
        )
    objective = None
    if mode in MIN_TIME_FAMILY:
        objective = float(sum(t for _, t in arrivals))
        if plan.objective_value is not None and abs(plan.objective_value - objective) > 1e-9:
            bad(
                "objective",
                f"plan objective {plan.objective_value} != sum of arrival times {objective}",
            )
    elif mode == MODE_MAX_PED:
        objective = ped
        if (
            plan.objective_value is not None
            and ped is not None
            and abs(plan.objective_value - ped) > 1e-9 * max(ped, 1e-12)
        ):
            bad("objective", f"plan objective {plan.objective_value} != PED {ped}")

    return ValidationReport(
        ok=not out,
        violations=out,
        ped=ped,
        loglinear_ped=loglin,
        max_simultaneous_detections=max_seen,
        time_to_target=arrival_time,
        objective_value=objective,
    )
