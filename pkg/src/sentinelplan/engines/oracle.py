"""Exhaustive reference solver used as a testing oracle.

Enumerates the joint decision tree layer by layer: at every time step each
agent picks a move (stay, step to a neighbour, or drop to the sink) and
optionally initiates an action, and every combination is expanded. States
that share an identical signature (positions, live knockout windows,
confusion window, counters, flags, remaining budget) are merged, which
collapses permutations of equivalent prefixes without changing the set of
reachable outcomes. The only states discarded are those that violate a
constraint or provably cannot complete any feasible plan (nobody can still
reach the target; an agent can no longer satisfy the excess-agent rule).
"""

from __future__ import annotations

import math
from itertools import product
from typing import NamedTuple

from ..errors import InfeasibleError, OracleCapError
from ..formulation import Plan
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

#: Refusal limits; pass force=True to run larger instances regardless.
#: The vertex cap admits a full 9x9 mesh.
ORACLE_CAPS = {"agents": 2, "horizon": 12, "vertices": 81, "budget": 2.0}

_EARLY0 = 1
_ACTED = 2
_VIS_TARGET = 4
_VIS_EXIT = 8
_JUSTIFIED = _EARLY0 | _ACTED | _VIS_TARGET


class _Key(NamedTuple):
    positions: tuple[int, ...]
    events: tuple[tuple[int, int], ...]
    confusion_end: int
    ko_ready: tuple[int, ...]
    conf_ready: tuple[int, ...]
    dwell: tuple[tuple[int, int], ...]
    flags: tuple[int, ...]
    budget_left: float


class _Searcher:
    def __init__(self, scenario: Scenario, tables: DerivedTables):
        self.scn = scenario
        self.tables = tables
        mesh = scenario.mesh
        self.n = mesh.n
        self.target = mesh.target
        self.omega = scenario.omega
        agents = scenario.agents
        self.A = len(agents)
        self.ids = [a.id for a in agents]
        self.starts = tuple(a.start for a in agents)
        self.kcost = [a.knockout_cost for a in agents]
        self.kdur = [a.knockout_duration for a in agents]
        self.ccost = [a.confusion_cost for a in agents]
        self.cdur = [a.confusion_duration for a in agents]
        self.kcool = [a.knockout_cooldown for a in agents]
        self.ccool = [a.confusion_cooldown for a in agents]
        self.kdwell = [a.knockout_dwell for a in agents]
        self.cdwell = [a.confusion_dwell for a in agents]
        self.neighbors = {v.id: tuple(sorted(mesh.adjacency[v.id])) for v in mesh.vertices}
        S = len(scenario.sensors)
        self.covers = {
            v: tuple(s for s in range(S) if tables.coverage[s, v]) for v in range(1, self.n + 1)
        }
        self.ksets = {
            v: tuple(s for s in range(S) if tables.knockout[s, v]) for v in range(1, self.n + 1)
        }
        dist = tables.distances_to_target
        self.DT = [math.inf] * (self.n + 1)
        self.DT[0] = math.inf
        for v, d in dist.items():
            self.DT[v] = d
        self.DT[self.target] = 0
        self.hard = scenario.mode in HARD_MODES
        self.knockouts_on = (
            self.hard and scenario.budget > 0 and any(self.ksets[v] for v in self.ksets)
        )
        self.confusion_on = scenario.mode in PED_MODES and scenario.budget > 0 and any(
            c <= scenario.budget + 1e-9 for c in self.ccost
        )
        self.lnq = [0.0] * (self.n + 1)
        self.lnqc = [0.0] * (self.n + 1)
        for v in range(1, self.n + 1):
            q = float(tables.evade[v])
            qc = float(tables.evade_confused[v])
            self.lnq[v] = math.log(q) if q > 0 else -math.inf
            self.lnqc[v] = math.log(qc) if qc > 0 else -math.inf
        self.min_cost = []
        for i in range(self.A):
            if self.knockouts_on:
                self.min_cost.append(self.kcost[i])
            elif self.confusion_on:
                self.min_cost.append(self.ccost[i])
            else:
                self.min_cost.append(math.inf)
        self.exit = scenario.exit_target

    def initial_key(self) -> _Key:
        return _Key(
            positions=self.starts,
            events=(),
            confusion_end=0,
            ko_ready=(0,) * self.A,
            conf_ready=(0,) * self.A,
            dwell=((0, 0),) * self.A,
            flags=(0,) * self.A,
            budget_left=float(self.scn.budget),
        )

    def _accepts(self, key: _Key, at_end: bool) -> bool:
        if not any(p == self.target for p in key.positions):
            return False
        if not all(f & _JUSTIFIED for f in key.flags):
            return False
        if self.exit is not None and not any(f & _VIS_EXIT for f in key.flags):
            return False
        return True

    def expand(self, layer: dict, t: int, horizon: int, minfam: bool, ped: bool) -> dict:
        nxt: dict = {}
        rng = range(self.A)
        remaining = horizon - (t + 1)
        for key, entry in layer.items():
            pos, events, cend, koready, confready, dwell, flags, budget = key
            live = tuple((s, e) for s, e in events if e >= t + 1)
            move_opts = []
            for i in rng:
                p = pos[i]
                if p == 0:
                    move_opts.append((0,))
                    continue
                if minfam and p == self.target and t >= 1:
                    move_opts.append((0,))
                    continue
                opts: tuple[int, ...] = (p,) + self.neighbors[p] + (0,)
                dv, du = dwell[i]
                if du >= t + 1:
                    opts = tuple(w for w in opts if w == dv or w == 0)
                move_opts.append(opts)
            base_logped = entry[0] if ped else 0.0
            for newpos in product(*move_opts):
                choice_lists = []
                for i in rng:
                    v = newpos[i]
                    choices = [""]
                    if (
                        self.knockouts_on
                        and v >= 1
                        and self.ksets[v]
                        and budget >= self.kcost[i] - 1e-9
                        and koready[i] <= t + 1
                    ):
                        choices.append("K")
                    if (
                        self.confusion_on
                        and v != 0
                        and budget >= self.ccost[i] - 1e-9
                        and confready[i] <= t + 1
                        and cend < t + 1
                    ):
                        choices.append("C")
                    choice_lists.append(choices)
                for acts in product(*choice_lists):
                    if sum(1 for c in acts if c == "C") > 1:
                        continue
                    budget2 = budget
                    events2 = dict(live)
                    cend2 = cend
                    ko2 = list(koready)
                    co2 = list(confready)
                    dw2 = list(dwell)
                    fl2 = list(flags)
                    kos: list[tuple[int, int]] = []
                    confs: list[int] = []
                    for i in rng:
                        act = acts[i]
                        v = newpos[i]
                        if act == "K":
                            budget2 -= self.kcost[i]
                            expiry = min(t + 1 + self.kdur[i], horizon)
                            for s in self.ksets[v]:
                                if events2.get(s, -1) < expiry:
                                    events2[s] = expiry
                            if self.kcool[i] is not None:
                                ko2[i] = t + 2 + self.kcool[i]
                            if self.kdwell[i] is not None:
                                # a dwell can only be refreshed from its own
                                # vertex, so replacing extends the window
                                dw2[i] = (v, min(t + 1 + self.kdwell[i], horizon))
                            fl2[i] |= _ACTED
                            kos.append((i, v))
                        elif act == "C":
                            budget2 -= self.ccost[i]
                            cend2 = min(t + 1 + self.cdur[i], horizon)
                            if self.ccool[i] is not None:
                                co2[i] = t + 2 + self.ccool[i]
                            if self.cdwell[i] is not None:
                                dw2[i] = (v, min(t + 1 + self.cdwell[i], horizon))
                            fl2[i] |= _ACTED
                            confs.append(i)
                    if budget2 < -1e-9:
                        continue
                    ok = True
                    if self.hard:
                        knocked = events2.keys()
                        for i in rng:
                            v = newpos[i]
                            if v == 0 or v == self.target:
                                continue
                            count = 0
                            for s in self.covers[v]:
                                if s not in knocked:
                                    count += 1
                                    if count >= self.omega:
                                        ok = False
                                        break
                            if not ok:
                                break
                        if not ok:
                            continue
                    for i in rng:
                        v = newpos[i]
                        if t + 1 == 1 and v == 0:
                            fl2[i] |= _EARLY0
                        if v == self.target:
                            fl2[i] |= _VIS_TARGET
                        if self.exit is not None and v == self.exit:
                            fl2[i] |= _VIS_EXIT
                    if not any(
                        newpos[i] != 0 and self.DT[newpos[i]] <= remaining for i in rng
                    ):
                        continue
                    for i in rng:
                        justified = fl2[i] & _JUSTIFIED
                        if newpos[i] == 0:
                            if not justified:
                                ok = False
                                break
                        elif not justified:
                            if (
                                self.DT[newpos[i]] > remaining
                                and budget2 < self.min_cost[i] - 1e-9
                            ):
                                ok = False
                                break
                    if not ok:
                        continue
                    if ped:
                        row = self.lnqc if t + 1 <= cend2 else self.lnq
                        inc = 0.0
                        for i in rng:
                            v = newpos[i]
                            if 1 <= v <= self.n - 1:
                                inc += row[v]
                        value = base_logped + inc
                    for i in rng:
                        if ko2[i] <= t + 2:
                            ko2[i] = 0
                        if co2[i] <= t + 2:
                            co2[i] = 0
                        if dw2[i][1] < t + 2:
                            dw2[i] = (0, 0)
                    key2 = _Key(
                        newpos,
                        tuple(sorted(events2.items())),
                        cend2,
                        tuple(ko2),
                        tuple(co2),
                        tuple(dw2),
                        tuple(fl2),
                        budget2,
                    )
                    decision = (newpos, tuple(kos), tuple(confs))
                    if ped:
                        cur = nxt.get(key2)
                        if cur is None or value > cur[0]:
                            nxt[key2] = (value, key, decision)
                    else:
                        if key2 not in nxt:
                            nxt[key2] = (key, decision)
        return nxt

    def run_hard(self, horizon: int, accept_before_end: bool):
        layers = [{self.initial_key(): (None, None)}]
        for t in range(horizon):
            layers.append(self.expand(layers[t], t, horizon, minfam=self.scn.mode in MIN_TIME_FAMILY, ped=False))
            if accept_before_end or t + 1 == horizon:
                hits = [k for k in layers[t + 1] if self._accepts(k, at_end=t + 1 == horizon)]
                if hits:
                    best = min(hits, key=lambda k: sum(1 for p in k.positions if p == self.target))
                    return t + 1, best, layers
        return None

    def run_ped(self, horizon: int, minfam: bool):
        layers = [{self.initial_key(): (0.0, None, None)}]
        for t in range(horizon):
            layers.append(self.expand(layers[t], t, horizon, minfam=minfam, ped=True))
        hits = [(layers[horizon][k][0], k) for k in layers[horizon] if self._accepts(k, True)]
        if not hits:
            return None
        best_value = max(v for v, _ in hits)
        best = next(k for v, k in hits if v == best_value)
        return horizon, best, layers

    def rebuild(self, stop: int, key: _Key, layers: list[dict], ped: bool) -> Plan:
        decisions = []
        k = key
        for t in range(stop, 0, -1):
            entry = layers[t][k]
            parent, decision = entry[-2], entry[-1]
            decisions.append(decision)
            k = parent
        decisions.reverse()
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
        for agent_id in trajectory:
            pad = T - (len(trajectory[agent_id]) - 1)
            trajectory[agent_id].extend([0] * pad)
        plan = Plan(
            trajectory=trajectory,
            knockouts=sorted(knockouts, key=lambda k: (k[2], k[0])),
            confusions=sorted(confusions, key=lambda c: (c[1], c[0])),
            mode=self.scn.mode,
        )
        arrivals = [
            t
            for a in trajectory
            for t in range(1, T + 1)
            if trajectory[a][t] == self.target
        ]
        plan.time_to_target = min(arrivals) if arrivals else None
        if self.scn.mode in MIN_TIME_FAMILY:
            plan.objective_value = float(sum(arrivals))
        if self.scn.mode in PED_MODES:
            plan.ped = evaluate_ped(plan, self.scn, self.tables)
            if self.scn.mode == MODE_MAX_PED:
                plan.objective_value = plan.ped
        return plan


def oracle_enumerate(scenario: Scenario, tables: DerivedTables, force: bool = False) -> Plan:
    """True optimum by exhaustive layered enumeration.

    Refuses instances beyond :data:`ORACLE_CAPS` unless ``force`` is set;
    forcing is intended for desk-checked reference scenarios only.
    """
    validate_scenario(scenario)
    if not force:
        over = []
        if len(scenario.agents) > ORACLE_CAPS["agents"]:
            over.append(f"A={len(scenario.agents)}")
        if scenario.horizon > ORACLE_CAPS["horizon"]:
            over.append(f"T={scenario.horizon}")
        if scenario.mesh.n > ORACLE_CAPS["vertices"]:
            over.append(f"N={scenario.mesh.n}")
        if scenario.budget > ORACLE_CAPS["budget"]:
            over.append(f"B={scenario.budget}")
        if over:
            raise OracleCapError(
                f"instance above oracle caps ({', '.join(over)}); pass force=True to override"
            )

    searcher = _Searcher(scenario, tables)
    mode = scenario.mode
    if mode == MODE_MIN_TIME:
        hops = [
            tables.distances_from_starts[a.id][scenario.mesh.target]
            for a in scenario.agents
        ]
        finite = [int(d) for d in hops if not math.isinf(d)]
        if not finite or min(finite) > scenario.horizon:
            raise InfeasibleError("target unreachable within the horizon")
        for t_star in range(max(1, min(finite)), scenario.horizon + 1):
            found = searcher.run_hard(t_star, accept_before_end=True)
            if found:
                return searcher.rebuild(found[0], found[1], found[2], ped=False)
        raise InfeasibleError("no feasible plan within the horizon")
    if mode == MODE_FEASIBILITY:
        found = searcher.run_hard(scenario.horizon, accept_before_end=False)
        if not found:
            raise InfeasibleError(f"no plan reaches the target at exactly T={scenario.horizon}")
        return searcher.rebuild(found[0], found[1], found[2], ped=False)
    if mode == MODE_MAX_PED:
        found = searcher.run_ped(scenario.horizon, minfam=False)
        if not found:
            raise InfeasibleError(f"no plan reaches the target at T={scenario.horizon}")
        return searcher.rebuild(found[0], found[1], found[2], ped=True)
    if mode == MODE_MIN_TIME_REQUIRED_PED:
        for t_star in range(1, scenario.horizon + 1):
            found = searcher.run_ped(t_star, minfam=True)
            if not found:
                continue
            plan = searcher.rebuild(found[0], found[1], found[2], ped=True)
            if meets_required_ped(plan.ped, scenario.required_ped):
                return plan
        raise InfeasibleError(
            f"no plan meets PED >= {scenario.required_ped} within the horizon"
        )
    raise InfeasibleError(f"unsupported mode {mode}")
