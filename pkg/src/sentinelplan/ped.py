"""Probability of evading detection (PED) for a concrete plan.

PED is the product, over every time step and every active agent, of the
per-vertex evasion probability: the confused table applies at times covered
by a confusion window, the normal table otherwise. The target vertex and the
absorbing vertex contribute nothing.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from .formulation import Plan
    from .scenario import DerivedTables, Scenario

#: Slack used when comparing a plan's PED against a required floor, so that
#: two solvers computing the same product in different orders agree.
REQUIRED_PED_SLACK = 1e-12


def confusion_flags(
    confusions: Sequence[tuple[int, int]], scenario: "Scenario"
) -> list[bool]:
    """Per-time confusion indicator over t = 0..T.

    A confusion initiated by agent a at time tau covers tau..tau+duration.
    """
    flags = [False] * (scenario.horizon + 1)
    for agent_id, tau in confusions:
        duration = scenario.agent(agent_id).confusion_duration
        for t in range(tau, min(tau + duration, scenario.horizon) + 1):
            flags[t] = True
    return flags


def evaluate_ped(plan: "Plan", scenario: "Scenario", tables: "DerivedTables") -> float:
    """Exact product-form PED of ``plan``."""
    n = scenario.mesh.n
    confused = confusion_flags(plan.confusions, scenario)
    ped = 1.0
    for t in range(1, scenario.horizon + 1):
        row = tables.evade_confused if confused[t] else tables.evade
        for agent in scenario.agents:
            v = plan.trajectory[agent.id][t]
            if 1 <= v <= n - 1:
                ped *= float(row[v])
    return ped


def meets_required_ped(ped: float, required: float) -> bool:
    return ped >= required - REQUIRED_PED_SLACK
