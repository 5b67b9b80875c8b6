import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpecm.kinematics import (
    InfeasibleTourError,
    Trajectory,
    TrajectoryError,
    build_heuristic_trajectory,
    check_feasibility,
    circle_trajectory,
    derive_kinematics,
    tour_order,
)


def naive_profile(q, dt):
    """Loop-based finite differences, kept apart from the vectorized code."""
    n_slots = len(q) - 1
    v, a = [], []
    for n in range(n_slots):
        v.append([(q[n + 1][j] - q[n][j]) / dt for j in range(2)])
    for n in range(n_slots - 1):
        a.append([(q[n + 2][j] + q[n][j] - 2.0 * q[n + 1][j]) / (dt * dt) for j in range(2)])
    a.append(list(a[-1]))
    c = [v[n][0] * a[n][0] + v[n][1] * a[n][1] for n in range(n_slots)]
    return np.array(v), np.array(a), np.array(c)


def test_straight_line():
    d = 3.5
    q = np.column_stack([np.arange(11) * d, np.zeros(11)])
    prof = derive_kinematics(Trajectory(q, 1.0))
    assert np.allclose(prof.velocity, [[d, 0.0]])
    assert np.all(prof.acceleration == 0)
    assert np.all(prof.direction_change == 0)


def test_stationary():
    prof = derive_kinematics(Trajectory(np.full((6, 2), 5.0), 0.5))
    assert np.all(prof.velocity == 0) and np.all(prof.acceleration == 0) and np.all(prof.direction_change == 0)


def test_against_loop_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(3, 40))
        dt = float(rng.uniform(0.1, 3.0))
        q = rng.normal(scale=100.0, size=(n, 2))
        prof = derive_kinematics(Trajectory(q, dt))
        v, a, c = naive_profile(q.tolist(), dt)
        assert np.array_equal(prof.velocity, v)
        assert np.array_equal(prof.acceleration, a)
        assert np.allclose(prof.direction_change, c, rtol=1e-14, atol=0)


def test_last_slot_repeats_acceleration():
    q = np.array([[0, 0], [1, 0], [3, 0], [6, 1]], dtype=float)
    prof = derive_kinematics(Trajectory(q, 1.0))
    assert np.array_equal(prof.acceleration[-1], prof.acceleration[-2])


@pytest.mark.parametrize("q", [np.zeros((2, 2)), np.zeros((3, 3)), np.array([[0, 0], [np.nan, 0], [0, 0]])])
def test_structural_errors(q):
    with pytest.raises(TrajectoryError):
        Trajectory(q, 1.0)


def test_bad_slot_length():
    with pytest.raises(TrajectoryError):
        Trajectory(np.zeros((4, 2)), 0.0)


def test_feasibility_flags_long_step():
    omega = 40.0
    q = np.array([[0, 0], [omega + 1, 0], [omega + 1, 0], [0, 0]], dtype=float)
    rep = check_feasibility(Trajectory(q, 1.0), 40.0)
    assert 0 in rep.violated_slots and 2 in rep.violated_slots
    assert rep.closed and not rep.feasible


def test_feasibility_boundary_square():
    s = 40.0
    q = np.array([[0, 0], [s, 0], [s, s], [0, s], [0, 0]])
    rep = check_feasibility(Trajectory(q, 1.0), 40.0)
    assert rep.feasible and rep.max_step == pytest.approx(s)


def test_open_path():
    q = np.array([[0, 0], [1, 0], [2, 0]], dtype=float)
    rep = check_feasibility(Trajectory(q, 1.0), 10.0)
    assert not rep.closed and not rep.feasible


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=30),
       st.floats(0.1, 5.0))
def test_closed_loop_velocity_telescopes(pts, dt):
    q = np.array(pts + [pts[0]], dtype=float)
    prof = derive_kinematics(Trajectory(q, dt))
    assert np.allclose(prof.velocity.sum(axis=0) * dt, 0.0, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 20), st.integers(0, 2**31 - 1))
def test_profile_is_linear(n, seed):
    rng = np.random.default_rng(seed)
    q1, q2 = rng.normal(size=(2, n, 2)) * 50
    t1, t2 = Trajectory(q1, 1.3), Trajectory(q2, 1.3)
    p1, p2, p12 = derive_kinematics(t1), derive_kinematics(t2), derive_kinematics(t1 + t2)
    assert np.allclose(p12.velocity, p1.velocity + p2.velocity, atol=1e-9)
    assert np.allclose(p12.acceleration, p1.acceleration + p2.acceleration, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-2e3, 2e3), st.floats(-2e3, 2e3)), min_size=1, max_size=6),
       st.floats(5.0, 60.0), st.integers(3, 200), st.sampled_from(["given", "nearest"]))
def test_heuristic_always_feasible(pts, v_max, N, method):
    users = np.array(pts)
    start = np.zeros(2)
    order = tour_order(users, start, method)
    wp = [start] + [users[k] for k in order] + [start]
    length = sum(np.linalg.norm(wp[i + 1] - wp[i]) for i in range(len(wp) - 1))
    T = max(length / v_max * 1.5, 1.0)
    traj = build_heuristic_trajectory(users, order, v_max, T, N, start)
    assert check_feasibility(traj, v_max).feasible


def test_heuristic_single_user():
    v_max, T, N = 10.0, 40.0, 40
    user = np.array([[v_max * T / 4, 0.0]])
    traj = build_heuristic_trajectory(user, [0], v_max, T, N, [0, 0])
    q = traj.positions
    assert np.allclose(q[:11, 0], np.arange(11) * v_max)
    assert np.allclose(q[10:31], user)
    assert np.allclose(q[30:, 0], 100.0 - np.arange(11) * v_max)


def test_heuristic_no_users():
    traj = build_heuristic_trajectory(np.zeros((0, 2)), [], 10.0, 10.0, 10, [2, 3])
    assert np.all(traj.positions == [2, 3])


def test_heuristic_four_user_layout(users):
    traj = build_heuristic_trajectory(users, [0, 1, 2, 3], 40.0, 150.0, 150, [0, 0])
    assert check_feasibility(traj, 40.0).feasible
    wp = np.vstack([[0, 0], users, [0, 0]])
    perimeter = np.sum(np.linalg.norm(np.diff(wp, axis=0), axis=1))
    assert np.sum(np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)) == pytest.approx(perimeter, rel=1e-12)


def test_heuristic_infeasible(users):
    with pytest.raises(InfeasibleTourError) as exc:
        build_heuristic_trajectory(users, [0, 1, 2, 3], 40.0, 30.0, 30, [0, 0])
    assert exc.value.required_T > 30.0


def test_nearest_order():
    users = np.array([[10, 0], [1, 0], [5, 0]], dtype=float)
    assert tour_order(users, [0, 0], "nearest") == [1, 2, 0]
    assert tour_order(users, [0, 0]) == [0, 1, 2]


def test_circle_start_is_feasible(users):
    traj = circle_trajectory(users, [0, 0], 40.0, 150.0, 150)
    rep = check_feasibility(traj, 40.0)
    assert rep.feasible
    assert np.array_equal(traj.positions[0], [0, 0])
    ring = traj.positions[:-1]
    r = np.linalg.norm(ring - ring.mean(axis=0), axis=1)
    assert np.ptp(r) < 1e-9
    assert math.isclose(np.linalg.norm(traj.positions[1] - traj.positions[0]),
                        np.linalg.norm(traj.positions[80] - traj.positions[79]), rel_tol=1e-9)
