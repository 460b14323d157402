"""Variable reduction, model construction, LP bridge, and plan validation."""

import math
import random
from dataclasses import replace
from itertools import product

import pytest

import sentinelplan as sp
from sentinelplan.errors import (
    InfeasibleByReductionError,
    InvalidSolutionError,
)
from sentinelplan.formulation import loglinear_objective
from sentinelplan.mesh import ROW_HEIGHT
from sentinelplan.scenario import Agent, Scenario, Sensor

from conftest import NINE_STEP_ROUTE, TEN_STEP_ROUTE, path_plan


def path_mesh(length: int):
    """A path graph 1-2-...-length carved out of a thin lattice."""
    blocked = {(r, 1) for r in range(length)}
    return sp.build_triangular_mesh(length, 2, blocked=blocked)


def tiny_scenario(length=3, horizon=2, mode="feasibility-at-T", sensors=(), budget=0.0, **kw):
    mesh = path_mesh(length)
    return Scenario(
        mesh=mesh,
        sensors=tuple(sensors),
        agents=(Agent(id=1, start=1, **kw),),
        horizon=horizon,
        budget=budget,
        omega=2,
        mode=mode,
    )


def assignments_satisfying(model):
    """Enumerate all binary assignments that satisfy every constraint."""
    names = model.variables
    assert len(names) <= 16, "model too large to enumerate"
    good = []
    for bits in product((0, 1), repeat=len(names)):
        value = dict(zip(names, bits))
        ok = True
        for con in model.constraints:
            total = sum(c * value[v] for c, v in con.terms)
            if con.sense == "<=" and total > con.rhs + 1e-9:
                ok = False
            elif con.sense == ">=" and total < con.rhs - 1e-9:
                ok = False
            elif con.sense == "=" and abs(total - con.rhs) > 1e-9:
                ok = False
            if not ok:
                break
        if ok:
            good.append(value)
    return good


# --- reductions -----------------------------------------------------------


def test_reduction_eliminates_unreachable_times(ref_scenario, ref_tables):
    mask = sp.reduce_variables(ref_scenario, ref_tables)
    start = ref_scenario.agents[0].start
    dist5 = next(
        v for v, d in ref_tables.distances_from_starts[1].items() if d == 5
    )
    assert not mask.x_active[1, dist5, 3]
    assert not mask.x_active[1, dist5, 4]
    # reachable and still in time for the target
    if ref_tables.distances_to_target[dist5] + 5 <= ref_scenario.horizon:
        assert mask.x_active[1, dist5, 5]
    assert mask.x_active[1, start, 0]


def test_reduction_percentage_matches_brute_force(ref_scenario, ref_tables):
    mask = sp.reduce_variables(ref_scenario, ref_tables)
    mesh = ref_scenario.mesh
    T = ref_scenario.horizon
    total = eliminated = 0
    for agent in ref_scenario.agents:
        dg = sp.hop_distances(mesh, agent.start).dist
        dn = sp.hop_distances(mesh, mesh.target).dist
        for v in mesh.adjacency:
            for t in range(1, T + 1):
                total += 1
                if dg[v] > t or t + dn[v] > T:
                    eliminated += 1
    assert total == len(ref_scenario.agents) * mesh.n * T
    assert mask.excluded_fraction == pytest.approx(eliminated / total, abs=0)
    again = sp.reduce_variables(ref_scenario, ref_tables)
    assert again.excluded_fraction == mask.excluded_fraction


def test_required_ped_floor_eliminates_low_probability_vertices(ref_scenario):
    scn = replace(
        ref_scenario, mode="min-time-required-ped", required_ped=0.95, budget=1.0
    )
    tables = sp.derive_tables(scn)
    mask = sp.reduce_variables(scn, tables)
    for v in range(1, scn.mesh.n):
        if tables.evade_confused[v] < 0.95 - 1e-12:
            assert not mask.x_active[:, v, 1:].any()
        elif tables.evade[v] < 0.95 - 1e-12:
            assert v in mask.z_linked


def test_reduction_without_confusion_budget_drops_linked_vertices(ref_scenario):
    scn = replace(
        ref_scenario, mode="min-time-required-ped", required_ped=0.95, budget=0.0
    )
    tables = sp.derive_tables(scn)
    mask = sp.reduce_variables(scn, tables)
    assert mask.z_linked == frozenset()
    for v in range(1, scn.mesh.n):
        if tables.evade[v] < 0.95 - 1e-12:
            assert not mask.x_active[:, v, 1:].any()


def test_reduction_detects_unreachable_target():
    scn = tiny_scenario(length=5, horizon=2, mode="min-time")
    tables = sp.derive_tables(scn)
    with pytest.raises(InfeasibleByReductionError):
        sp.reduce_variables(scn, tables)


# --- model enumeration ----------------------------------------------------


def test_feasibility_model_admits_exactly_the_valid_walks():
    scn = tiny_scenario(length=3, horizon=2, mode="feasibility-at-T")
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, mask=None)
    assert len(model.variables) == 8
    good = assignments_satisfying(model)
    # only walk reaching vertex 3 at t=2 from vertex 1 is 1 -> 2 -> 3
    assert len(good) == 1
    chosen = {name for name, bit in good[0].items() if bit}
    assert chosen == {"x_1_2_1", "x_1_3_2"}


def test_min_time_model_walks_and_objective():
    scn = tiny_scenario(length=3, horizon=3, mode="min-time")
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, mask=None)
    good = assignments_satisfying(model)
    assert good, "model should be feasible"

    def objective(value):
        return sum(c * value[v] for c, v in model.objective)

    best = min(objective(v) for v in good)
    assert best == 2  # the walk 1 -> 2 -> 3 arrives at t=2


def test_single_agent_selection_row():
    # two agents modelling alternative start positions: all but one must
    # drop to the sink immediately
    mesh = path_mesh(3)
    scn = Scenario(
        mesh=mesh,
        sensors=(),
        agents=(Agent(id=1, start=1), Agent(id=2, start=2)),
        horizon=2,
        budget=0.0,
        omega=2,
        mode="min-time",
    )
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, mask=None, single_agent_selection=True)
    picks = [c for c in model.constraints if c.name == "pickone"]
    assert len(picks) == 1
    assert picks[0].sense == "=" and picks[0].rhs == 1.0
    good = assignments_satisfying(model)
    assert good
    for value in good:
        assert value["x_1_0_1"] + value["x_2_0_1"] == 1


def test_b0_model_has_no_knockout_variables(ref_scenario, ref_tables):
    scn = replace(ref_scenario, budget=0.0)
    model = sp.build_model(scn, ref_tables, sp.reduce_variables(scn, ref_tables))
    assert not any(name.startswith(("al_", "lam_")) for name in model.variables)
    assert any(name.startswith("y_") for name in model.variables)


def test_knockout_cooldown_rows_forbid_close_actions():
    mesh = sp.build_triangular_mesh(4, 12)
    mesh = mesh.retargeted(mesh.id_at(2, 11))
    scn = Scenario(
        mesh=mesh,
        sensors=(Sensor(1, (4.0, ROW_HEIGHT), 2.0), Sensor(2, (4.4, ROW_HEIGHT), 2.0)),
        agents=(
            Agent(id=1, start=mesh.id_at(1, 0), knockout_cooldown=9, knockout_duration=2),
        ),
        horizon=11,
        budget=2.0,
        omega=2,
        mode="min-time",
    )
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, sp.reduce_variables(scn, tables))
    cooldown_rows = [c for c in model.constraints if c.name.startswith("kocd_")]
    assert cooldown_rows
    alphas = [n for n in model.variables if n.startswith("al_")]
    t3 = [n for n in alphas if n.endswith("_3")]
    t7 = [n for n in alphas if n.endswith("_7")]
    assert t3 and t7
    # both knockouts on simultaneously violates some cooldown row
    value = {n: 0 for n in model.variables}
    value[t3[0]] = value[t7[0]] = 1
    violated = any(
        sum(c * value.get(v, 0) for c, v in row.terms) > row.rhs + 1e-9
        for row in cooldown_rows
    )
    assert violated


def test_big_m_rows_pin_lambda_to_the_knockout_window():
    mesh = sp.build_triangular_mesh(4, 8)
    mesh = mesh.retargeted(mesh.id_at(2, 7))
    scn = Scenario(
        mesh=mesh,
        sensors=(Sensor(1, (2.0, ROW_HEIGHT), 1.8), Sensor(2, (3.0, ROW_HEIGHT), 1.8)),
        agents=(Agent(id=1, start=mesh.id_at(1, 0), knockout_duration=2),),
        horizon=8,
        budget=2.0,
        omega=2,
        mode="min-time",
    )
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, sp.reduce_variables(scn, tables))
    assert model.big_m == pytest.approx(scn.budget / 1.0)
    alpha = next(n for n in model.variables if n.startswith("al_"))
    _, a, v, tau = alpha.split("_")
    v, tau = int(v), int(tau)
    lam_rows = {
        c.name: c
        for c in model.constraints
        if c.name.startswith(("lamub_", "lamlb_"))
    }
    covered = [s + 1 for s in range(2) if tables.knockout[s, v]]
    assert covered
    for s in covered:
        for t in range(1, scn.horizon + 1):
            ub = lam_rows.get(f"lamub_{s}_{t}")
            lb = lam_rows.get(f"lamlb_{s}_{t}")
            if ub is None or lb is None:
                continue
            in_window = tau <= t <= tau + scn.agents[0].knockout_duration
            for lam_value in (0, 1):
                value = {n: 0 for n in model.variables}
                value[alpha] = 1
                value[f"lam_{s}_{t}"] = lam_value
                ub_ok = sum(c * value.get(n, 0) for c, n in ub.terms) <= ub.rhs + 1e-9
                lb_ok = sum(c * value.get(n, 0) for c, n in lb.terms) >= lb.rhs - 1e-9
                if alpha in {n for _, n in ub.terms}:
                    pass
                if in_window:
                    # the window forces lambda to one
                    assert (ub_ok and lb_ok) == (lam_value == 1)
                else:
                    assert (ub_ok and lb_ok) == (lam_value == 0)


# --- LP bridge -------------------------------------------------------------


def two_vertex_scenario():
    mesh = sp.build_triangular_mesh(2, 2, blocked={(0, 1), (1, 1)})
    return Scenario(
        mesh=mesh,
        sensors=(),
        agents=(Agent(id=1, start=1),),
        horizon=2,
        budget=0.0,
        omega=2,
        mode="min-time",
    )


def test_two_vertex_model_matches_hand_tally():
    scn = two_vertex_scenario()
    tables = sp.derive_tables(scn)
    # Hand tally, unreduced: variables x_1_v_t for v in {0,1,2}, t in {1,2} = 6.
    # Rows: one-vertex-per-step (2), reach for v=1,2 at t=2 (2; the t=1 rows
    # are vacuous against the fixed start), leave for (v=1,t=0) plus both
    # vertices at t=1 (3), sink absorption (1), arrival (1), target exit (1),
    # excess (1) = 11.
    full = sp.build_model(scn, tables, mask=None)
    assert len(full.variables) == 6
    assert len(full.constraints) == 11
    # Reduced: x_1_1_2 dies (1 + hop distance 1 exceeds T=2): 5 variables,
    # and its reach row goes vacuous: 10 rows.
    mask = sp.reduce_variables(scn, tables)
    reduced = sp.build_model(scn, tables, mask)
    assert len(reduced.variables) == 5
    assert len(reduced.constraints) == 10
    assert [c for c, _ in reduced.objective] == [1.0, 2.0]


def test_export_parse_round_trip_counts(tmp_path, ref_scenario, ref_tables):
    scn = replace(ref_scenario, budget=1.0)
    model = sp.build_model(scn, sp.derive_tables(scn), sp.reduce_variables(scn, sp.derive_tables(scn)))
    path = tmp_path / "model.lp"
    sp.export_lp(model, path)
    parsed = sp.parse_lp(path)
    assert len(parsed.binaries) == len(model.variables)
    assert len(parsed.constraints) == len(model.constraints)
    assert parsed.sense == "min"
    assert len(parsed.objective) == len(model.objective)


def test_export_is_deterministic(tmp_path):
    scn = two_vertex_scenario()
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, sp.reduce_variables(scn, tables))
    p1, p2 = tmp_path / "a.lp", tmp_path / "b.lp"
    sp.export_lp(model, p1)
    sp.export_lp(model, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_feasibility_export_has_constant_objective(tmp_path):
    scn = tiny_scenario(length=3, horizon=2, mode="feasibility-at-T")
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, mask=None)
    assert model.objective == ()
    path = tmp_path / "feas.lp"
    sp.export_lp(model, path)
    text = path.read_text()
    head = text.split("Subject To")[0]
    assert "obj:" in head
    assert "x_" not in head.split("obj:")[1]


def test_import_solution_round_trip(tmp_path):
    scn = two_vertex_scenario()
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, sp.reduce_variables(scn, tables))
    sol = tmp_path / "sol.txt"
    sol.write_text("x_1_2_1 1\nx_1_0_2 1\n")
    plan = sp.import_solution(sol, model)
    assert plan.trajectory[1] == [1, 2, 0]
    assert plan.time_to_target == 1
    assert plan.objective_value == 1.0
    assert sp.validate_plan(plan, scn, tables).ok


def test_import_solution_rejects_fractional_values(tmp_path):
    scn = two_vertex_scenario()
    tables = sp.derive_tables(scn)
    model = sp.build_model(scn, tables, None)
    sol = tmp_path / "sol.txt"
    sol.write_text("x_1_2_1 0.4\n")
    with pytest.raises(InvalidSolutionError):
        sp.import_solution(sol, model)
    sol.write_text("x_1_2_1 1.5\n")
    with pytest.raises(InvalidSolutionError):
        sp.import_solution(sol, model)
    sol.write_text("nonsense 1\n")
    with pytest.raises(InvalidSolutionError):
        sp.import_solution(sol, model)
    sol.write_text("x_1_2_1 1\nx_1_1_1 1\nx_1_0_2 1\n")
    with pytest.raises(InvalidSolutionError):
        sp.import_solution(sol, model)


# --- plan validation -------------------------------------------------------


def test_reference_10_step_plan_validates_with_single_detections(ref_scenario, ref_tables):
    plan = path_plan(ref_scenario, 1, TEN_STEP_ROUTE)
    report = sp.validate_plan(plan, ref_scenario, ref_tables)
    assert report.ok, [str(v) for v in report.violations]
    assert report.max_simultaneous_detections == 1
    assert report.time_to_target == 10


def test_reference_9_step_knockout_plan_validates(ref_scenario):
    scn = replace(ref_scenario, budget=1.0)
    tables = sp.derive_tables(scn)
    plan = path_plan(
        scn, 2, NINE_STEP_ROUTE, knockouts=[(2, (2.5, 5), 1)]
    )
    report = sp.validate_plan(plan, scn, tables)
    assert report.ok, [str(v) for v in report.violations]
    assert report.time_to_target == 9


def test_reference_9_step_plan_without_knockout_is_detected(ref_scenario, ref_tables):
    plan = path_plan(ref_scenario, 2, NINE_STEP_ROUTE)
    report = sp.validate_plan(plan, ref_scenario, ref_tables)
    assert not report.ok
    assert any(v.family == "detection" for v in report.violations)


def test_teleporting_plan_is_a_movement_violation(ref_scenario, ref_tables):
    plan = path_plan(ref_scenario, 1, TEN_STEP_ROUTE)
    plan.trajectory[1][2] = ref_scenario.mesh.id_at(10, 10)
    plan.trajectory[1][3] = ref_scenario.mesh.id_at(10, 11)
    report = sp.validate_plan(plan, ref_scenario, ref_tables)
    assert any(v.family == "movement" for v in report.violations)


def test_budget_and_placement_violations(ref_scenario):
    scn = replace(ref_scenario, budget=0.0)
    tables = sp.derive_tables(scn)
    plan = path_plan(scn, 2, NINE_STEP_ROUTE, knockouts=[(2, (2.5, 5), 1)])
    report = sp.validate_plan(plan, scn, tables)
    assert any(v.family == "budget" for v in report.violations)
    scn1 = replace(ref_scenario, budget=1.0)
    tables1 = sp.derive_tables(scn1)
    misplaced = path_plan(scn1, 2, NINE_STEP_ROUTE, knockouts=[(2, (3.5, 5), 1)])
    report = sp.validate_plan(misplaced, scn1, tables1)
    assert any("not at vertex" in v.message for v in report.violations)


def test_excess_agent_rule_violation(ref_scenario, ref_tables):
    plan = path_plan(ref_scenario, 1, TEN_STEP_ROUTE)
    a2 = ref_scenario.agents[1]
    # the idle agent wanders instead of dropping to the sink
    neighbor = sorted(ref_scenario.mesh.adjacency[a2.start])[0]
    plan.trajectory[2] = [a2.start, neighbor] + [0] * (ref_scenario.horizon - 1)
    report = sp.validate_plan(plan, ref_scenario, ref_tables)
    assert any(v.family == "excess" for v in report.violations)


def test_confusion_window_overlap_violation(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=2.0, horizon=10)
    tables = sp.derive_tables(scn)
    plan = path_plan(scn, 1, TEN_STEP_ROUTE, confusions=[(1, 1), (1, 5)])
    report = sp.validate_plan(plan, scn, tables)
    assert any("overlap" in v.message for v in report.violations)


def test_dwell_violation(ref_scenario):
    agents = tuple(replace(a, knockout_dwell=3) for a in ref_scenario.agents)
    scn = replace(ref_scenario, budget=1.0, agents=agents)
    tables = sp.derive_tables(scn)
    plan = path_plan(scn, 2, NINE_STEP_ROUTE, knockouts=[(2, (2.5, 5), 1)])
    report = sp.validate_plan(plan, scn, tables)
    assert any("dwell" in v.message for v in report.violations)


def test_mode_gating_of_actions(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=1.0)
    tables = sp.derive_tables(scn)
    plan = path_plan(scn, 2, NINE_STEP_ROUTE, knockouts=[(2, (2.5, 5), 1)])
    report = sp.validate_plan(plan, scn, tables)
    assert any("not available in mode" in v.message for v in report.violations)


def test_linearization_matches_product_form_on_random_plans(ref_scenario):
    scn = replace(ref_scenario, mode="max-ped", budget=2.0, horizon=10)
    tables = sp.derive_tables(scn)
    mesh = scn.mesh
    rng = random.Random(99)
    checked = 0
    for _ in range(100):
        agent = rng.choice(scn.agents)
        traj = [agent.start]
        for _ in range(scn.horizon):
            cur = traj[-1]
            traj.append(rng.choice([cur] + sorted(mesh.adjacency[cur])))
        trajectory = {agent.id: traj}
        for other in scn.agents:
            if other.id != agent.id:
                trajectory[other.id] = [other.start] + [0] * scn.horizon
        confusions = []
        if rng.random() < 0.7:
            confusions.append((agent.id, rng.randint(1, scn.horizon)))
        plan = sp.Plan(trajectory=trajectory, confusions=confusions, mode=scn.mode)
        product_form = sp.evaluate_ped(plan, scn, tables)
        log_form = math.exp(loglinear_objective(plan, scn, tables))
        assert abs(product_form - log_form) <= 1e-9 * max(product_form, 1e-30)
        checked += 1
    assert checked == 100
