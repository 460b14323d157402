#!/usr/bin/env python3
"""Walk through the bundled four-sensor mission.

Two agents sit on the left edge of a 13x13 triangular mesh; the target is
on the right, behind four overlapping sensor circles. We first plan with no
actions allowed, then grant a single knockout and watch the route shorten.
SVG snapshots land next to this script.
"""

from dataclasses import replace
from pathlib import Path

import sentinelplan as sp
from sentinelplan.render import RenderSpec, render_to_file

OUT = Path(__file__).parent


def main() -> None:
    scenario = sp.reference_scenario()
    tables = sp.derive_tables(scenario)

    print("Mission board: 13x13 mesh,", len(scenario.sensors), "sensors, "
          f"{len(tables.multi_covered)} vertices are covered by 2+ sensors.")
    for agent in scenario.agents:
        hops = tables.distances_from_starts[agent.id][scenario.mesh.target]
        print(f"  agent {agent.id} is {hops:.0f} hops from the target, ignoring sensors")

    # No actions allowed: thread the gap between the circles.
    baseline = sp.solve_b0(scenario, tables)
    report = sp.validate_plan(baseline, scenario, tables)
    print(f"\nNo actions (B=0): {baseline.time_to_target} steps; "
          f"worst simultaneous detections {report.max_simultaneous_detections}")
    render_to_file(scenario, baseline, RenderSpec(OUT / "mission_b0.svg"))

    # One knockout: the planner finds a vertex that silences two sensors.
    armed = replace(scenario, budget=1.0)
    tables_armed = sp.derive_tables(armed)
    strike = sp.solve_exact(armed, tables_armed)
    agent, vertex, when = strike.knockouts[0]
    silenced = int(tables_armed.knockout[:, vertex].sum())
    print(f"\nOne knockout (B=1): {strike.time_to_target} steps; agent {agent} "
          f"knocks out {silenced} sensors at t={when}")
    render_to_file(armed, strike, RenderSpec(OUT / "mission_b1.svg"))
    render_to_file(
        armed, strike,
        RenderSpec(OUT / "mission_b1_after.svg", hide_knocked_out=True),
    )
    print("Wrote mission_b0.svg, mission_b1.svg, mission_b1_after.svg")


if __name__ == "__main__":
    main()
