"""Solver engines: B=0 closed form, exact search, oracle, external bridge."""

import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

import sentinelplan as sp
from sentinelplan.engines import EngineConfig, solve
from sentinelplan.errors import (
    ConfigError,
    ExternalSolverError,
    InfeasibleError,
    OracleCapError,
    ResourceLimitError,
)
from sentinelplan.mesh import ROW_HEIGHT
from sentinelplan.scenario import Agent, Scenario, Sensor

from conftest import CLEAN_TEN_STEP_ROUTE, path_plan

TESTS = Path(__file__).parent


def open_scenario(**kw):
    """Sensor-free 5x6 scenario: start bottom-left, target top-right."""
    mesh = sp.build_triangular_mesh(5, 6)
    mesh = mesh.retargeted(mesh.id_at(4, 5))
    defaults = dict(
        mesh=mesh,
        sensors=(),
        agents=(Agent(id=1, start=mesh.id_at(0, 0)),),
        horizon=10,
        budget=0.0,
        omega=2,
        mode="min-time",
    )
    defaults.update(kw)
    return Scenario(**defaults)


# --- B = 0 ------------------------------------------------------------------


def test_b0_ref_scenario_needs_ten_steps(ref_scenario, ref_tables):
    started = time.monotonic()
    plan = sp.solve_b0(ref_scenario, ref_tables)
    assert time.monotonic() - started < 5.0
    assert plan.time_to_target == 10
    assert sp.validate_plan(plan, ref_scenario, ref_tables).ok


def test_b0_without_sensors_returns_min_hops():
    scn = open_scenario()
    tables = sp.derive_tables(scn)
    plan = sp.solve_b0(scn, tables)
    assert plan.time_to_target == tables.distances_from_starts[1][scn.mesh.target]


def test_b0_infeasible_when_target_is_ringed():
    mesh = sp.build_triangular_mesh(5, 6)
    mesh = mesh.retargeted(mesh.id_at(2, 4))
    tx, ty = mesh.position(mesh.target)
    scn = Scenario(
        mesh=mesh,
        sensors=(Sensor(1, (tx - 0.2, ty), 1.6), Sensor(2, (tx + 0.2, ty), 1.6)),
        agents=(Agent(id=1, start=mesh.id_at(0, 0)),),
        horizon=12,
        budget=0.0,
        omega=2,
        mode="min-time",
    )
    tables = sp.derive_tables(scn)
    # every neighbour of the target is covered by both sensors
    assert all(w in tables.multi_covered for w in mesh.adjacency[mesh.target])
    with pytest.raises(InfeasibleError):
        sp.solve_b0(scn, tables)


def test_b0_rejects_wrong_mode_or_budget(ref_scenario, ref_tables):
    with pytest.raises(ConfigError):
        sp.solve_b0(replace(ref_scenario, budget=1.0), ref_tables)
    with pytest.raises(ConfigError):
        sp.solve_b0(replace(ref_scenario, mode="max-ped"), ref_tables)


# --- exact ------------------------------------------------------------------


def test_exact_reference_knockout_nine_steps(ref_scenario):
    scn = replace(ref_scenario, budget=1.0)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert plan.time_to_target == 9
    assert len(plan.knockouts) == 1
    _, vertex, _ = plan.knockouts[0]
    assert int(tables.knockout[:, vertex].sum()) >= 2
    assert sp.validate_plan(plan, scn, tables).ok


def test_exact_max_ped_ten_steps_is_certain_evasion(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=0.0, horizon=10)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert abs(plan.ped - 1.0) <= 1e-9
    assert sp.validate_plan(plan, scn, tables).ok


def test_exact_max_ped_nine_steps_is_nearly_hopeless(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=0.0, horizon=9)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert plan.ped < 0.01


def test_exact_confusion_lifts_nine_step_ped(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=1.0, horizon=9)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert 0.93 <= plan.ped <= 0.97
    assert len(plan.confusions) == 1
    assert sp.validate_plan(plan, scn, tables).ok


def test_exact_required_ped_trades_time_for_evasion(ref_scenario):
    # nine steps top out near 0.95 but below it; ten steps reach 1.0
    scn = replace(
        ref_scenario,
        mode="min-time-required-ped",
        required_ped=0.95,
        budget=1.0,
        horizon=10,
    )
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert plan.time_to_target == 10
    assert plan.ped >= 0.95 - 1e-12
    assert sp.validate_plan(plan, scn, tables).ok


def test_exact_feasibility_at_exact_horizon(ref_scenario):
    scn = replace(ref_scenario, mode="feasibility-at-T", horizon=10)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    report = sp.validate_plan(plan, scn, tables)
    assert report.ok
    assert any(
        plan.trajectory[a.id][scn.horizon] == scn.mesh.target for a in scn.agents
    )


def test_exact_monotone_in_budget(ref_scenario):
    tables0 = sp.derive_tables(ref_scenario)
    base = sp.solve_exact(ref_scenario, tables0).time_to_target
    scn1 = replace(ref_scenario, budget=1.0)
    better = sp.solve_exact(scn1, sp.derive_tables(scn1)).time_to_target
    assert better <= base
    assert (base, better) == (10, 9)


def test_exact_infeasible_when_horizon_too_short(ref_scenario):
    scn = replace(ref_scenario, horizon=8)
    tables = sp.derive_tables(scn)
    with pytest.raises(InfeasibleError):
        sp.solve_exact(scn, tables)


def test_exact_node_limit(ref_scenario, ref_tables):
    with pytest.raises(ResourceLimitError):
        sp.solve_exact(ref_scenario, ref_tables, EngineConfig(node_limit=5))


def test_exact_handles_exit_waypoint():
    scn = open_scenario(horizon=12)
    waypoint = scn.mesh.id_at(0, 4)
    scn = replace(scn, exit_target=waypoint)
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    report = sp.validate_plan(plan, scn, tables)
    assert report.ok
    assert any(v == waypoint for v in plan.trajectory[1])
    direct = tables.distances_from_starts[1][scn.mesh.target]
    via = (
        sp.hop_distances(scn.mesh, scn.agents[0].start).dist[waypoint]
        + sp.hop_distances(scn.mesh, waypoint).dist[scn.mesh.target]
    )
    assert plan.time_to_target == via >= direct
    agree = sp.oracle_enumerate(scn, tables)
    assert agree.time_to_target == plan.time_to_target


# --- oracle -----------------------------------------------------------------


def test_b0_relaxing_omega_never_slows_the_route(ref_scenario, ref_tables):
    # omega=3 forbids strictly fewer vertices than omega=2
    strict = sp.solve_b0(ref_scenario, ref_tables).time_to_target
    relaxed_scn = replace(ref_scenario, omega=3)
    relaxed = sp.solve_b0(relaxed_scn, sp.derive_tables(relaxed_scn)).time_to_target
    assert relaxed <= strict


def test_oracle_feasibility_agrees_with_exact():
    scn = open_scenario(mode="feasibility-at-T", horizon=9)
    tables = sp.derive_tables(scn)
    mine = sp.solve_exact(scn, tables)
    reference = sp.oracle_enumerate(scn, tables)
    for plan in (mine, reference):
        assert sp.validate_plan(plan, scn, tables).ok
        assert plan.trajectory[1][scn.horizon] == scn.mesh.target


def test_oracle_refuses_above_caps(ref_scenario, ref_tables):
    with pytest.raises(OracleCapError):
        sp.oracle_enumerate(ref_scenario, ref_tables)


def test_oracle_zero_sensor_minimum(ref_scenario):
    scn = open_scenario()
    tables = sp.derive_tables(scn)
    plan = sp.oracle_enumerate(scn, tables)
    assert plan.time_to_target == tables.distances_from_starts[1][scn.mesh.target]


def test_oracle_infeasible_below_min_hops():
    scn = open_scenario(horizon=3)
    tables = sp.derive_tables(scn)
    with pytest.raises(InfeasibleError):
        sp.oracle_enumerate(scn, tables)


def test_oracle_matches_exact_on_spot_instances():
    for seed, case in [(101, 1), (102, 3), (103, 5), (104, 2), (105, 4)]:
        try:
            scn = sp.generate_instance(
                seed, 9, 3, 2, 1.8, {"case": case, "slack": 1}
            )
        except sp.GenerationFailedError:
            continue
        tables = sp.derive_tables(scn)
        try:
            reference = sp.oracle_enumerate(scn, tables)
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                sp.solve_exact(scn, tables)
            continue
        mine = sp.solve_exact(scn, tables)
        if scn.mode == "max-ped":
            assert abs(reference.ped - mine.ped) <= 1e-9
        else:
            assert reference.time_to_target == mine.time_to_target


def test_action_restrictions_cross_check():
    """Short durations, cooldowns, and dwells: exact must match the oracle."""
    mesh = sp.build_triangular_mesh(6, 6)
    mesh = mesh.retargeted(mesh.id_at(3, 5))
    gate1 = Sensor(1, (2.6, 2 * ROW_HEIGHT), 1.7)
    gate2 = Sensor(2, (3.2, 3 * ROW_HEIGHT), 1.7)
    variants = [
        dict(mode="min-time", budget=1.0, agent=dict(knockout_duration=2, knockout_dwell=2)),
        dict(mode="min-time", budget=2.0, agent=dict(knockout_duration=1, knockout_cooldown=2)),
        dict(mode="min-time", budget=2.0, agent=dict(knockout_duration=2, knockout_cooldown=4, knockout_dwell=1)),
        dict(mode="max-ped", budget=2.0, agent=dict(confusion_duration=2, confusion_cooldown=2)),
        dict(mode="max-ped", budget=2.0, agent=dict(confusion_duration=2, confusion_dwell=2)),
        dict(
            mode="min-time-required-ped",
            budget=2.0,
            required_ped=0.9,
            agent=dict(confusion_duration=3),
        ),
    ]
    for variant in variants:
        agents = (
            Agent(id=1, start=mesh.id_at(2, 0), **variant["agent"]),
            Agent(id=2, start=mesh.id_at(4, 0), **variant["agent"]),
        )
        scn = Scenario(
            mesh=mesh,
            sensors=(gate1, gate2),
            agents=agents,
            horizon=8,
            budget=variant["budget"],
            omega=2,
            knockout_radius=2.0,
            required_ped=variant.get("required_ped"),
            mode=variant["mode"],
        )
        tables = sp.derive_tables(scn)
        try:
            reference = sp.oracle_enumerate(scn, tables)
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                sp.solve_exact(scn, tables)
            continue
        mine = sp.solve_exact(scn, tables)
        for plan in (reference, mine):
            report = sp.validate_plan(plan, scn, tables)
            assert report.ok, (variant, [str(v) for v in report.violations])
        if scn.mode == "max-ped":
            assert abs(reference.ped - mine.ped) <= 1e-9, variant
        else:
            assert reference.time_to_target == mine.time_to_target, variant


# --- PED evaluation ---------------------------------------------------------


def test_ped_is_one_outside_all_coverage():
    scn = open_scenario(mode="max-ped")
    tables = sp.derive_tables(scn)
    plan = sp.solve_exact(scn, tables)
    assert plan.ped == 1.0


def test_reference_ped1_path_evaluates_to_one(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", horizon=10)
    tables = sp.derive_tables(scn)
    plan = path_plan(scn, 1, CLEAN_TEN_STEP_ROUTE)
    assert sp.evaluate_ped(plan, scn, tables) == 1.0


def test_ped_bounded_and_monotone_under_truncation(ref_scenario):
    import random
    from dataclasses import replace as dc_replace

    scn = dc_replace(ref_scenario, mode="max-ped", horizon=10)
    tables = sp.derive_tables(scn)
    mesh = scn.mesh
    rng = random.Random(5)
    for _ in range(30):
        agent = scn.agents[0]
        traj = [agent.start]
        for _ in range(scn.horizon):
            cur = traj[-1]
            traj.append(rng.choice([cur] + sorted(mesh.adjacency[cur])))
        trajectory = {1: traj, 2: [scn.agents[1].start] + [0] * scn.horizon}
        plan = sp.Plan(trajectory=trajectory, mode=scn.mode)
        full = sp.evaluate_ped(plan, scn, tables)
        assert 0.0 <= full <= 1.0
        cut = rng.randint(1, scn.horizon)
        # absorbing the agent early removes exposure; PED can only rise
        shorter = sp.Plan(
            trajectory={1: traj[:cut] + [0] * (scn.horizon + 1 - cut), 2: trajectory[2]},
            mode=scn.mode,
        )
        assert sp.evaluate_ped(shorter, scn, tables) >= full - 1e-15


def test_single_exposed_step_multiplies_once(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", horizon=2)
    tables = sp.derive_tables(scn)
    two_covered = sorted(tables.multi_covered)[0]
    q = float(tables.evade[two_covered])
    mesh = scn.mesh
    neighbor = sorted(mesh.adjacency[two_covered])[0]
    agents = (Agent(id=1, start=neighbor), Agent(id=2, start=scn.agents[1].start))
    scn = replace(scn, agents=agents, mode="max-ped")
    plan = sp.Plan(
        trajectory={
            1: [neighbor, two_covered, two_covered],
            2: [agents[1].start, 0, 0],
        },
        mode="max-ped",
    )
    # stepping onto the doubly covered vertex twice squares its factor
    assert sp.evaluate_ped(plan, scn, tables) == pytest.approx(q * q, rel=1e-12)


# --- external bridge --------------------------------------------------------


def brute_cmd():
    return [sys.executable, str(TESTS / "stub_solver.py")]


def test_external_brute_force_matches_exact():
    mesh = sp.build_triangular_mesh(2, 2, blocked={(0, 1), (1, 1)})
    scn = Scenario(
        mesh=mesh,
        sensors=(),
        agents=(Agent(id=1, start=1),),
        horizon=2,
        budget=0.0,
        omega=2,
        mode="min-time",
    )
    tables = sp.derive_tables(scn)
    plan = sp.solve_external(scn, tables, brute_cmd())
    exact = sp.solve_exact(scn, tables)
    assert plan.time_to_target == exact.time_to_target == 1
    assert sp.validate_plan(plan, scn, tables).ok


def test_external_echo_accepts_known_feasible_assignment(tmp_path, monkeypatch):
    mesh = sp.build_triangular_mesh(2, 2, blocked={(0, 1), (1, 1)})
    scn = Scenario(
        mesh=mesh, sensors=(), agents=(Agent(id=1, start=1),),
        horizon=2, budget=0.0, omega=2, mode="min-time",
    )
    tables = sp.derive_tables(scn)
    prepared = tmp_path / "known.txt"
    prepared.write_text("x_1_2_1 1\nx_1_0_2 1\n")
    monkeypatch.setenv("STUB_SOLUTION", str(prepared))
    plan = sp.solve_external(
        scn, tables, [sys.executable, str(TESTS / "echo_solver.py")]
    )
    assert plan.time_to_target == 1


def test_external_rejects_fractional_assignment(tmp_path, monkeypatch):
    mesh = sp.build_triangular_mesh(2, 2, blocked={(0, 1), (1, 1)})
    scn = Scenario(
        mesh=mesh, sensors=(), agents=(Agent(id=1, start=1),),
        horizon=2, budget=0.0, omega=2, mode="min-time",
    )
    tables = sp.derive_tables(scn)
    prepared = tmp_path / "frac.txt"
    prepared.write_text("x_1_2_1 0.4\n")
    monkeypatch.setenv("STUB_SOLUTION", str(prepared))
    with pytest.raises(ExternalSolverError):
        sp.solve_external(scn, tables, [sys.executable, str(TESTS / "echo_solver.py")])


def test_external_rejects_invalid_movement(tmp_path, monkeypatch):
    mesh = sp.build_triangular_mesh(3, 2, blocked={(0, 1), (1, 1), (2, 1)})
    scn = Scenario(
        mesh=mesh, sensors=(), agents=(Agent(id=1, start=1),),
        horizon=2, budget=0.0, omega=2, mode="min-time",
    )
    tables = sp.derive_tables(scn)
    prepared = tmp_path / "teleport.txt"
    # jumps from vertex 1 straight to vertex 3
    prepared.write_text("x_1_3_1 1\nx_1_0_2 1\n")
    monkeypatch.setenv("STUB_SOLUTION", str(prepared))
    with pytest.raises(ExternalSolverError):
        sp.solve_external(
            scn, tables, [sys.executable, str(TESTS / "echo_solver.py")],
            use_reductions=False,
        )


def test_external_propagates_nonzero_exit():
    scn = open_scenario()
    tables = sp.derive_tables(scn)
    with pytest.raises(ExternalSolverError):
        sp.solve_external(scn, tables, [sys.executable, "-c", "import sys; sys.exit(4)"])


def test_external_timeout():
    scn = open_scenario()
    tables = sp.derive_tables(scn)
    with pytest.raises(ExternalSolverError):
        sp.solve_external(
            scn,
            tables,
            [sys.executable, "-c", "import time; time.sleep(5)"],
            timeout=0.5,
        )


# --- dispatcher --------------------------------------------------------------


def test_dispatcher_b0_drops_budget(ref_scenario):
    scn = replace(ref_scenario, budget=1.0)
    plan, extras = solve(scn, config=EngineConfig(engine="b0"))
    assert plan.time_to_target == 10
    assert extras == {}


def test_dispatcher_heuristic_returns_trace(ref_scenario, ref_tables):
    plan, extras = solve(ref_scenario, ref_tables, EngineConfig(engine="heuristic"))
    assert plan.time_to_target == 10
    assert extras["trace"].chosen_agent in (1, 2)
