"""The five benchmark case configurations.

Cases 1 and 2 are hard-detection knockout runs (budgets 1 and 2) with the
knockout range/time restrictions switched on. Case 3 maximises the
probability of evading detection with the horizon pinned to the sensor-free
minimum time to target; case 4 adds two confusion actions; case 5 asks for
the minimal time to target subject to a 95% evasion floor with one
confusion action.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .errors import ConfigError
from .mesh import hop_distances
from .scenario import (
    MODE_MAX_PED,
    MODE_MIN_TIME,
    MODE_MIN_TIME_REQUIRED_PED,
    Scenario,
)

CASES = (1, 2, 3, 4, 5)

CASE_SUMMARIES = {
    1: "minimise time to target, 1 knockout allowed (B=1), omega=2, restricted range and time",
    2: "minimise time to target, 2 knockouts allowed (B=2), omega=2, restricted range and time",
    3: "maximise PED at the sensor-free minimal time, no confusion, omega=2",
    4: "maximise PED at the sensor-free minimal time, 2 confusion actions (B=2), omega=2",
    5: "minimise time to target with PED >= 0.95, 1 confusion action (B=1), omega=2",
}

_DEFAULT_DURATION = 10
_DEFAULT_COOLDOWN = 10


def min_hops_to_target(scenario: Scenario) -> int:
    """Sensor-free minimal time to target over all agents."""
    best = min(
        hop_distances(scenario.mesh, a.start).dist[scenario.mesh.target]
        for a in scenario.agents
    )
    if math.isinf(best):
        raise ConfigError("target unreachable from every agent")
    return int(best)


def apply_case(scenario: Scenario, case: int) -> Scenario:
    """Return a copy of ``scenario`` configured for the given case preset."""
    if case not in CASES:
        raise ConfigError(f"unknown case {case}; expected one of {list(CASES)}")

    def clamp(v: int, horizon: int) -> int | None:
        return max(1, min(v, horizon - 1)) if horizon > 1 else None

    if case in (1, 2):
        horizon = scenario.horizon
        agents = tuple(
            replace(
                a,
                knockout_cost=1.0,
                knockout_duration=_DEFAULT_DURATION,
                knockout_cooldown=clamp(_DEFAULT_COOLDOWN, horizon),
            )
            for a in scenario.agents
        )
        return replace(
            scenario,
            mode=MODE_MIN_TIME,
            budget=float(case),
            omega=2,
            required_ped=None,
            agents=agents,
        )

    if case in (3, 4):
        horizon = min_hops_to_target(scenario)
        budget = 0.0 if case == 3 else 2.0
        agents = tuple(
            replace(
                a,
                confusion_cost=1.0,
                confusion_duration=_DEFAULT_DURATION,
                confusion_cooldown=clamp(_DEFAULT_COOLDOWN, horizon) if case == 4 else a.confusion_cooldown,
            )
            for a in scenario.agents
        )
        return replace(
            scenario,
            mode=MODE_MAX_PED,
            horizon=horizon,
            budget=budget,
            omega=2,
            required_ped=None,
            agents=agents,
        )

    # case 5
    agents = tuple(
        replace(a, confusion_cost=1.0, confusion_duration=_DEFAULT_DURATION)
        for a in scenario.agents
    )
    return replace(
        scenario,
        mode=MODE_MIN_TIME_REQUIRED_PED,
        budget=1.0,
        omega=2,
        required_ped=0.95,
        agents=agents,
    )
