"""Exact solver: layered search over the time-expanded joint state space.

States are expanded one time step at a time. Within a layer, states sharing
a signature are reduced: in the hard modes only the cheapest (minimum
budget spent) state per signature survives; in the probability modes a
Pareto frontier over (budget spent, accumulated log evasion probability) is
kept. The reduction mask doubles as a movement filter, so eliminated
variables never appear as positions. Minimal-time answers come from the
first layer containing an accepting state; the required-evasion mode
searches horizons upward from the sensor-free minimum until the optimal
evasion probability clears the floor.
"""

from __future__ import annotations

import math
import time
from itertools import product
from typing import NamedTuple

from ..errors import (
    ConfigError,
    InfeasibleByReductionError,
    InfeasibleError,
    ResourceLimitError,
)
from ..formulation import Plan, ReductionMask, reduce_variables
from ..ped import evaluate_ped, meets_required_ped
from ..scenario import (
    HARD_MODES,
    MIN_TIME_FAMILY,
    MODE_FEASIBILITY,
    MODE_MAX_PED,
    MODE_MIN_TIME,
    MODE_MIN_TIME_REQUIRED_PED,
    PED_MODES,
    DerivedTables,
    Scenario,
    validate_scenario,
)

_EARLY0 = 1
_ACTED = 2
_VIS_TARGET = 4
_VIS_EXIT = 8
_JUSTIFIED = _EARLY0 | _ACTED | _VIS_TARGET


class SearchState(NamedTuple):
    """Signature of a search node; the layer index supplies the time."""

    positions: tuple[int, ...]
    knockout_timeline: tuple[tuple[int, int], ...]
    confusion_expiry: int
    knockout_ready: tuple[int, ...]
    confusion_ready: tuple[int, ...]
    dwell: tuple[tuple[int, int], ...]
    flags: tuple[int, ...]


class _Limits:
    def __init__(self, node_limit: int | None, time_limit: float | None):
        self.node_limit = node_limit
        self.deadline = None if time_limit is None else time.monotonic() + time_limit
        self.nodes = 0

    def charge(self, amount: int) -> None:
        self.nodes += amount
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise ResourceLimitError(f"node limit {self.node_limit} exceeded")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimitError("time limit exceeded")


class _ExactSearch:
    def __init__(
        self,
        scenario: Scenario,
        tables: DerivedTables,
        mask: ReductionMask | None,
        limits: _Limits,
    ):
        self.scn = scenario
        self.tables = tables
        self.mask = mask
        self.limits = limits
        mesh = scenario.mesh
        self.n = mesh.n
        self.target = mesh.target
        self.omega = scenario.omega
        agents = scenario.agents
        self.A = len(agents)
        self.ids = [a.id for a in agents]
        self.starts = tuple(a.start for a in agents)
        self.agents = agents
        self.neighbors = {v.id: tuple(sorted(mesh.adjacency[v.id])) for v in mesh.vertices}
        S = len(scenario.sensors)
        self.covers = {
            v: frozenset(s for s in range(S) if tables.coverage[s, v])
            for v in range(1, self.n + 1)
        }
        self.ksets = {
            v: tuple(s for s in range(S) if tables.knockout[s, v])
            for v in range(1, self.n + 1)
        }
        self.DT = [math.inf] * (self.n + 1)
        for v, d in tables.distances_to_target.items():
            self.DT[v] = d
        self.hard = scenario.mode in HARD_MODES
        self.knockouts_on = (
            self.hard
            and scenario.budget > 0
            and any(self.ksets[v] for v in self.ksets)
        )
        self.confusion_on = (
            scenario.mode in PED_MODES
            and scenario.budget > 0
            and any(a.confusion_cost <= scenario.budget + 1e-9 for a in agents)
        )
        self.lnq = [0.0] * (self.n + 1)
        self.lnqc = [0.0] * (self.n + 1)
        for v in range(1, self.n + 1):
            q = float(tables.evade[v])
            qc = float(tables.evade_confused[v])
            self.lnq[v] = math.log(q) if q > 0 else -math.inf
            self.lnqc[v] = math.log(qc) if qc > 0 else -math.inf
        self.cheapest_action = []
        for a in agents:
            if self.knockouts_on:
                self.cheapest_action.append(a.knockout_cost)
            elif self.confusion_on:
                self.cheapest_action.append(a.confusion_cost)
            else:
                self.cheapest_action.append(math.inf)
        self.exit = scenario.exit_target
        self.z_linked = mask.z_linked if mask is not None else frozenset()
        self._move_cache: dict[tuple[int, int, int], tuple[int, ...]] = {}

    # -- movement -----------------------------------------------------

    def _moves(self, i: int, v: int, t_next: int, minfam: bool) -> tuple[int, ...]:
        if v == 0:
            return (0,)
        if minfam and v == self.target and t_next >= 2:
            return (0,)
        cached = self._move_cache.get((i, v, t_next))
        if cached is not None:
            return cached
        options = (v,) + self.neighbors[v] + (0,)
        if self.mask is not None:
            aid = self.ids[i]
            active = self.mask.x_active
            options = tuple(w for w in options if w == 0 or active[aid, w, t_next])
        self._move_cache[(i, v, t_next)] = options
        return options

    # -- acceptance ----------------------------------------------------

    def _accepts(self, state: SearchState) -> bool:
        if not any(p == self.target for p in state.positions):
            return False
        if not all(f & _JUSTIFIED for f in state.flags):
            return False
        if self.exit is not None and not any(f & _VIS_EXIT for f in state.flags):
            return False
        return True

    # -- expansion -----------------------------------------------------

    def _children(self, state: SearchState, spent: float, t: int, horizon: int, minfam: bool):
        """Yield (child_state, new_spent, logped_increment, decision)."""
        budget_left = self.scn.budget - spent
        t1 = t + 1
        remaining = horizon - t1
        live = tuple((s, e) for s, e in state.knockout_timeline if e >= t1)
        move_lists = [
            self._moves(i, state.positions[i], t1, minfam) for i in range(self.A)
        ]
        for i in range(self.A):
            dv, du = state.dwell[i]
            if du >= t1:
                move_lists[i] = tuple(w for w in move_lists[i] if w == dv or w == 0)
        for newpos in product(*move_lists):
            action_lists = []
            for i in range(self.A):
                v = newpos[i]
                opts = [None]
                if (
                    self.knockouts_on
                    and v >= 1
                    and self.ksets[v]
                    and budget_left >= self.agents[i].knockout_cost - 1e-9
                    and state.knockout_ready[i] <= t1
                ):
                    opts.append("K")
                if (
                    self.confusion_on
                    and v != 0
                    and budget_left >= self.agents[i].confusion_cost - 1e-9
                    and state.confusion_ready[i] <= t1
                    and state.confusion_expiry < t1
                ):
                    opts.append("C")
                action_lists.append(opts)
            for acts in product(*action_lists):
                if sum(1 for a in acts if a == "C") > 1:
                    continue
                spent2 = spent
                timeline = dict(live)
                cexp = state.confusion_expiry
                ko_ready = list(state.knockout_ready)
                co_ready = list(state.confusion_ready)
                dwell = list(state.dwell)
                flags = list(state.flags)
                kos: list[tuple[int, int]] = []
                confs: list[int] = []
                for i in range(self.A):
                    act = acts[i]
                    if act is None:
                        continue
                    v = newpos[i]
                    agent = self.agents[i]
                    if act == "K":
                        spent2 += agent.knockout_cost
                        expiry = min(t1 + agent.knockout_duration, horizon)
                        for s in self.ksets[v]:
                            if timeline.get(s, -1) < expiry:
                                timeline[s] = expiry
                        if agent.knockout_cooldown is not None:
                            ko_ready[i] = t1 + agent.knockout_cooldown + 1
                        if agent.knockout_dwell is not None:
                            dwell[i] = (v, min(t1 + agent.knockout_dwell, horizon))
                        flags[i] |= _ACTED
                        kos.append((i, v))
                    else:
                        spent2 += agent.confusion_cost
                        cexp = min(t1 + agent.confusion_duration, horizon)
                        if agent.confusion_cooldown is not None:
                            co_ready[i] = t1 + agent.confusion_cooldown + 1
                        if agent.confusion_dwell is not None:
                            dwell[i] = (v, min(t1 + agent.confusion_dwell, horizon))
                        flags[i] |= _ACTED
                        confs.append(i)
                if spent2 > self.scn.budget + 1e-9:
                    continue
                z_next = t1 <= cexp
                if self.hard:
                    knocked = timeline.keys()
                    bad = False
                    for i in range(self.A):
                        v = newpos[i]
                        if v == 0 or v == self.target:
                            continue
                        if len(self.covers[v] - knocked) >= self.omega:
                            bad = True
                            break
                    if bad:
                        continue
                elif self.z_linked and not z_next:
                    if any(newpos[i] in self.z_linked for i in range(self.A)):
                        continue
                ok = True
                for i in range(self.A):
                    v = newpos[i]
                    if t1 == 1 and v == 0:
                        flags[i] |= _EARLY0
                    if v == self.target:
                        flags[i] |= _VIS_TARGET
                    if self.exit is not None and v == self.exit:
                        flags[i] |= _VIS_EXIT
                if not any(
                    newpos[i] != 0 and self.DT[newpos[i]] <= remaining
                    for i in range(self.A)
                ):
                    continue
                for i in range(self.A):
                    if flags[i] & _JUSTIFIED:
                        continue
                    if newpos[i] == 0:
                        ok = False
                        break
                    if (
                        self.DT[newpos[i]] > remaining
                        and self.scn.budget - spent2 < self.cheapest_action[i] - 1e-9
                    ):
                        ok = False
                        break
                if not ok:
                    continue
                inc = 0.0
                if not self.hard:
                    row = self.lnqc if z_next else self.lnq
                    for i in range(self.A):
                        v = newpos[i]
                        if 1 <= v <= self.n - 1:
                            inc += row[v]
                for i in range(self.A):
                    if ko_ready[i] <= t1 + 1:
                        ko_ready[i] = 0
                    if co_ready[i] <= t1 + 1:
                        co_ready[i] = 0
                    if dwell[i][1] < t1 + 1:
                        dwell[i] = (0, 0)
                child = SearchState(
                    positions=newpos,
                    knockout_timeline=tuple(sorted(timeline.items())),
                    confusion_expiry=cexp,
                    knockout_ready=tuple(ko_ready),
                    confusion_ready=tuple(co_ready),
                    dwell=tuple(dwell),
                    flags=tuple(flags),
                )
                yield child, spent2, inc, (newpos, tuple(kos), tuple(confs))

    def _initial(self) -> SearchState:
        return SearchState(
            positions=self.starts,
            knockout_timeline=(),
            confusion_expiry=0,
            knockout_ready=(0,) * self.A,
            confusion_ready=(0,) * self.A,
            dwell=((0, 0),) * self.A,
            flags=(0,) * self.A,
        )

    # -- hard modes ----------------------------------------------------

    def solve_hard(self, horizon: int, accept_early: bool):
        minfam = self.scn.mode in MIN_TIME_FAMILY
        layers: list[dict[SearchState, tuple[float, SearchState | None, tuple | None]]] = [
            {self._initial(): (0.0, None, None)}
        ]
        for t in range(horizon):
            nxt: dict[SearchState, tuple[float, SearchState | None, tuple | None]] = {}
            for state, (spent, _, _) in layers[t].items():
                for child, spent2, _, decision in self._children(
                    state, spent, t, horizon, minfam
                ):
                    cur = nxt.get(child)
                    if cur is None or spent2 < cur[0]:
                        nxt[child] = (spent2, state, decision)
            self.limits.charge(len(nxt))
            layers.append(nxt)
            if accept_early or t + 1 == horizon:
                hits = [s for s in nxt if self._accepts(s)]
                if hits:
                    best = min(
                        hits,
                        key=lambda s: sum(1 for p in s.positions if p == self.target),
                    )
                    return t + 1, best, layers
        return None

    def rebuild_hard(self, stop: int, state: SearchState, layers) -> Plan:
        decisions = []
        cur = state
        for t in range(stop, 0, -1):
            _, parent, decision = layers[t][cur]
            decisions.append(decision)
            cur = parent
        decisions.reverse()
        return self._plan_from_decisions(decisions)

    # -- probability modes ----------------------------------------------

    def solve_ped(self, horizon: int, minfam: bool):
        layers: list[dict[SearchState, list[tuple]]] = [
            {self._initial(): [(0.0, 0.0, None, None)]}
        ]
        for t in range(horizon):
            nxt: dict[SearchState, list[tuple]] = {}
            count = 0
            for state, entries in layers[t].items():
                for idx, (spent, logped, _, _) in enumerate(entries):
                    for child, spent2, inc, decision in self._children(
                        state, spent, t, horizon, minfam
                    ):
                        cand = (spent2, logped + inc, (state, idx), decision)
                        bucket = nxt.setdefault(child, [])
                        dominated = False
                        for e in bucket:
                            if e[0] <= cand[0] and e[1] >= cand[1]:
                                dominated = True
                                break
                        if dominated:
                            continue
                        bucket[:] = [
                            e for e in bucket if not (e[0] >= cand[0] and e[1] <= cand[1])
                        ]
                        bucket.append(cand)
            for bucket in nxt.values():
                count += len(bucket)
            self.limits.charge(count)
            layers.append(nxt)
        best: tuple[float, SearchState, int] | None = None
        for state, entries in layers[horizon].items():
            if not self._accepts(state):
                continue
            for idx, (spent, logped, _, _) in enumerate(entries):
                if best is None or logped > best[0]:
                    best = (logped, state, idx)
        if best is None:
            return None
        return best, layers

    def rebuild_ped(self, horizon: int, best, layers) -> Plan:
        _, state, idx = best
        decisions = []
        cur, cur_idx = state, idx
        for t in range(horizon, 0, -1):
            entry = layers[t][cur][cur_idx]
            decisions.append(entry[3])
            cur, cur_idx = entry[2]
        decisions.reverse()
        return self._plan_from_decisions(decisions)

    # -- plan assembly ---------------------------------------------------

    def _plan_from_decisions(self, decisions) -> Plan:
        trajectory = {self.ids[i]: [self.starts[i]] for i in range(self.A)}
        knockouts: list[tuple[int, int, int]] = []
        confusions: list[tuple[int, int]] = []
        for step, (newpos, kos, confs) in enumerate(decisions, start=1):
            for i in range(self.A):
                trajectory[self.ids[i]].append(newpos[i])
            for i, v in kos:
                knockouts.append((self.ids[i], v, step))
            for i in confs:
                confusions.append((self.ids[i], step))
        T = self.scn.horizon
        for aid in trajectory:
            trajectory[aid].extend([0] * (T - (len(trajectory[aid]) - 1)))
        plan = Plan(
            trajectory=trajectory,
            knockouts=sorted(knockouts, key=lambda k: (k[2], k[0])),
            confusions=sorted(confusions, key=lambda c: (c[1], c[0])),
            mode=self.scn.mode,
        )
        arrivals = [
            t
            for aid in trajectory
            for t in range(1, T + 1)
            if trajectory[aid][t] == self.target
        ]
        plan.time_to_target = min(arrivals) if arrivals else None
        if self.scn.mode in MIN_TIME_FAMILY:
            plan.objective_value = float(sum(arrivals))
        if self.scn.mode in PED_MODES:
            plan.ped = evaluate_ped(plan, self.scn, self.tables)
            if self.scn.mode == MODE_MAX_PED:
                plan.objective_value = plan.ped
        return plan


def solve_exact(scenario: Scenario, tables: DerivedTables, config=None) -> Plan:
    """Optimal plan for any mode, at desk scale.

    Practical guidance: meshes up to ~400 vertices, horizons up to ~40,
    two agents, budgets up to ~3. Larger inputs hit the node limit and
    raise :class:`ResourceLimitError`.
    """
    from .config import EngineConfig

    validate_scenario(scenario)
    cfg = config or EngineConfig()
    limits = _Limits(cfg.node_limit, cfg.time_limit)
    mode = scenario.mode

    def make_search(horizon: int) -> _ExactSearch:
        try:
            mask = (
                reduce_variables(scenario, tables, horizon=horizon)
                if cfg.use_reductions
                else None
            )
        except InfeasibleByReductionError as exc:
            raise InfeasibleError(str(exc)) from exc
        return _ExactSearch(scenario, tables, mask, limits)

    if mode == MODE_MIN_TIME:
        hops = [
            tables.distances_from_starts[a.id][scenario.mesh.target]
            for a in scenario.agents
        ]
        finite = [int(d) for d in hops if not math.isinf(d)]
        if not finite or min(finite) > scenario.horizon:
            raise InfeasibleError("target unreachable within the horizon")
        # search horizons upward so the completion bound stays tight
        for t_star in range(max(1, min(finite)), scenario.horizon + 1):
            search = make_search(t_star)
            found = search.solve_hard(t_star, accept_early=True)
            if found:
                return search.rebuild_hard(found[0], found[1], found[2])
        raise InfeasibleError(f"no feasible plan within T={scenario.horizon}")

    if mode == MODE_FEASIBILITY:
        search = make_search(scenario.horizon)
        found = search.solve_hard(scenario.horizon, accept_early=False)
        if not found:
            raise InfeasibleError(
                f"no plan reaches the target at exactly T={scenario.horizon}"
            )
        return search.rebuild_hard(found[0], found[1], found[2])

    if mode == MODE_MAX_PED:
        search = make_search(scenario.horizon)
        result = search.solve_ped(scenario.horizon, minfam=False)
        if result is None:
            raise InfeasibleError(f"no plan reaches the target at T={scenario.horizon}")
        best, layers = result
        return search.rebuild_ped(scenario.horizon, best, layers)

    if mode == MODE_MIN_TIME_REQUIRED_PED:
        hops = [
            tables.distances_from_starts[a.id][scenario.mesh.target]
            for a in scenario.agents
        ]
        finite = [int(d) for d in hops if not math.isinf(d)]
        if not finite or min(finite) > scenario.horizon:
            raise InfeasibleError("target unreachable within the horizon")
        for t_star in range(max(1, min(finite)), scenario.horizon + 1):
            search = make_search(t_star)
            result = search.solve_ped(t_star, minfam=True)
            if result is None:
                continue
            best, layers = result
            plan = search.rebuild_ped(t_star, best, layers)
            if meets_required_ped(plan.ped, scenario.required_ped):
                return plan
        raise InfeasibleError(
            f"no plan meets PED >= {scenario.required_ped} within T={scenario.horizon}"
        )

    raise ConfigError(f"unsupported mode {mode}")
