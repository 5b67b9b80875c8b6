import json
import math
from dataclasses import replace

import numpy as np
import pytest

from gpecm.driver import (
    RunResult,
    ScenarioError,
    alternating_optimize,
    emit_reports,
    evaluate_run,
    load_scenario,
    reference_scenario,
    reference_scenario_path,
    parse_scenario,
    read_schedule_csv,
    read_trajectory_csv,
    run_benchmarks,
)
from gpecm.kinematics import Trajectory, check_feasibility
from gpecm.propulsion import trajectory_energy
from gpecm.radio import Schedule


def reference_text():
    with open(reference_scenario_path()) as fh:
        return fh.read()


@pytest.fixture(scope="module")
def small_scenario():
    return replace(reference_scenario(), users=np.array([[150.0, 0.0], [-100.0, 120.0]]), horizon=30.0, num_slots=30)


@pytest.fixture(scope="module")
def small_results(small_scenario):
    return run_benchmarks(small_scenario)


def test_reference_scenario_loads():
    s = reference_scenario()
    assert s.num_users == 4 and s.num_slots == 150
    assert np.array_equal(s.users, [[300, -100], [500, 400], [100, 700], [-300, 400]])
    assert s.altitude == 100 and s.horizon == 150 and s.v_max == 40
    assert s.radio.snr_ref == pytest.approx(100.0)
    assert s.uav.weight == 50.0 and s.epsilon == 1e-4


def test_missing_field():
    text = reference_text().replace("v_max_mps = 40\n", "")
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    assert exc.value.field == "scenario.v_max_mps"
    assert "v_max_mps" in str(exc.value)


def test_horizon_mismatch():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(reference_text().replace("slots = 150", "slots = 140"))
    assert exc.value.field == "slot_length"


def test_bad_values():
    with pytest.raises(ScenarioError):
        parse_scenario(reference_text().replace("weight_n = 50", "weight_n = -50"))
    with pytest.raises(ScenarioError):
        parse_scenario(reference_text().replace("users = 300, -100;", "users = 300;"))
    with pytest.raises(ScenarioError):
        parse_scenario("not a config")
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/file.cfg")


def test_db_suffix():
    s = parse_scenario(reference_text().replace("ref_gain_dbm = -60", "ref_gain_db = -90"))
    assert s.radio.snr_ref == pytest.approx(100.0)


def test_one_round_when_epsilon_infinite(small_scenario):
    res = alternating_optimize(replace(small_scenario, epsilon=math.inf))
    assert res.iterations == 1 and len(res.ao_trace) == 2


def test_ao_trace_and_outputs(small_results, small_scenario):
    for res in small_results:
        assert res.ok, res.error
        assert check_feasibility(res.trajectory, small_scenario.v_max).feasible
        assert res.schedule.binary and np.all(res.schedule.alpha.sum(axis=0) <= 1)
        tr = res.ao_trace
        assert all(b >= a - 1e-9 * abs(a) for a, b in zip(tr, tr[1:]))
        assert res.min_rate <= res.relaxed_min_rate * (1 + 1e-9)


def test_single_user_under_start():
    s = replace(reference_scenario(), users=np.array([[0.0, 0.0]]), horizon=40.0, num_slots=40)
    res = alternating_optimize(s)
    hover = evaluate_run(s, Trajectory(np.zeros((41, 2)), 1.0), Schedule(np.ones((1, 40)), binary=True))
    assert res.ee >= hover.ee * (1 - 1e-6)
    assert np.max(np.linalg.norm(res.trajectory.positions, axis=1)) < 50.0


def test_emit_reports(tmp_path, small_results, small_scenario):
    paths = emit_reports(small_results, tmp_path / "a")
    emit_reports(small_results, tmp_path / "b")
    for p in paths:
        rel = p.split("/a/", 1)[1]
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    N = small_scenario.num_slots
    for scheme in ("gpecm", "kappa1", "heuristic"):
        d = tmp_path / "a" / scheme
        assert len((d / "trajectory.csv").read_text().splitlines()) == N + 1
        assert len((d / "power.csv").read_text().splitlines()) == N + 1
        summary = json.loads((d / "summary.json").read_text())
        traj = read_trajectory_csv(d / "trajectory.csv", small_scenario.slot_length)
        energy, _ = trajectory_energy(traj, small_scenario.uav)
        assert energy == pytest.approx(summary["energy_j"], rel=1e-9)
        sched = read_schedule_csv(d / "schedule.csv", small_scenario.num_users, N)
        again = evaluate_run(small_scenario, traj, sched)
        assert again.ee == pytest.approx(summary["ee"], rel=1e-9)


def test_hover_power_rows_equal(tmp_path):
    s = replace(reference_scenario(), users=np.array([[0.0, 0.0]]), horizon=10.0, num_slots=10)
    res = evaluate_run(s, Trajectory(np.zeros((11, 2)), 1.0), Schedule(np.ones((1, 10)), binary=True), "hover")
    emit_reports([res], tmp_path)
    rows = (tmp_path / "hover" / "power.csv").read_text().splitlines()[1:]
    assert len({r.split(",", 1)[1] for r in rows}) == 1


def test_errors_isolated(small_scenario):
    s = replace(small_scenario, users=np.array([[600.0, 0.0], [-600.0, 0.0]]))
    results = run_benchmarks(s, schemes=("heuristic", "gpecm"))
    assert not results[0].ok and "T =" in results[0].error
    assert results[1].ok


def test_emit_needs_results(tmp_path):
    with pytest.raises(ValueError):
        emit_reports([], tmp_path)
    emit_reports([RunResult("broken", error="boom")], tmp_path)
    assert json.loads((tmp_path / "broken" / "summary.json").read_text())["ok"] is False
