import numpy as np
import pytest
from scipy.optimize import linprog

from gpecm.radio import Schedule
from gpecm.scheduling import (
    SchedulingInstance,
    brute_force_schedule,
    min_rate,
    round_schedule,
    solve_lp_relaxation,
)


def highs_value(rates):
    """Independent LP solve of the same relaxation."""
    K, N = rates.shape
    nv = K * N + 1
    c = np.zeros(nv)
    c[-1] = -1.0
    A, b = [], []
    for n in range(N):
        row = np.zeros(nv)
        row[[k * N + n for k in range(K)]] = 1.0
        A.append(row)
        b.append(1.0)
    for k in range(K):
        row = np.zeros(nv)
        row[k * N:(k + 1) * N] = -rates[k]
        row[-1] = 1.0
        A.append(row)
        b.append(0.0)
    res = linprog(c, A_ub=np.array(A), b_ub=b, bounds=[(0, 1)] * (K * N) + [(None, None)], method="highs")
    return -res.fun


def test_single_user():
    r = np.array([[0.5, 1.0, 2.0, 0.1]])
    sched, val = solve_lp_relaxation(SchedulingInstance(r))
    assert np.allclose(sched.alpha, 1.0, atol=1e-7)
    assert val == pytest.approx(r.sum(), rel=1e-7)


def test_symmetric_pair():
    r = np.full((2, 6), 0.7)
    sched, val = solve_lp_relaxation(SchedulingInstance(r))
    assert val == pytest.approx(0.5 * 6 * 0.7, rel=1e-7)
    per = (sched.alpha * r).sum(axis=1)
    assert per[0] == pytest.approx(per[1], rel=1e-6)


def test_matches_independent_lp():
    rng = np.random.default_rng(17)
    for _ in range(30):
        r = rng.uniform(0, 3, size=(3, 6))
        sched, val = solve_lp_relaxation(SchedulingInstance(r))
        assert val == pytest.approx(highs_value(r), abs=1e-6)
        assert np.all(sched.alpha.sum(axis=0) <= 1 + 1e-9)


def test_rounding_rules():
    relaxed = Schedule(np.array([[0.9, 0.5, 0.0], [0.1, 0.5, 0.0]]))
    out = round_schedule(relaxed)
    assert out.binary
    assert np.array_equal(out.alpha, [[1, 1, 0], [0, 0, 0]])


def test_brute_force_small():
    sched, val = brute_force_schedule(SchedulingInstance(np.array([[1.0, 2.0, 3.0]])))
    assert np.array_equal(sched.alpha, np.ones((1, 3))) and val == 6.0
    sched, val = brute_force_schedule(SchedulingInstance(np.array([[1.0, 0.0], [0.0, 1.0]])))
    assert np.array_equal(sched.alpha, np.eye(2)) and val == 1.0


def test_brute_force_guard():
    with pytest.raises(ValueError):
        brute_force_schedule(SchedulingInstance(np.ones((3, 10))))


def test_rate_scaling():
    rng = np.random.default_rng(4)
    r = rng.uniform(0, 2, size=(3, 5))
    _, v1 = solve_lp_relaxation(SchedulingInstance(r))
    _, v2 = solve_lp_relaxation(SchedulingInstance(r * 7.5))
    assert v2 == pytest.approx(7.5 * v1, rel=1e-7)
    _, b1 = brute_force_schedule(SchedulingInstance(r))
    _, b2 = brute_force_schedule(SchedulingInstance(r * 7.5))
    assert b2 == pytest.approx(7.5 * b1, rel=1e-12)


def test_instance_validation():
    with pytest.raises(ValueError):
        SchedulingInstance(np.array([[-1.0]]))
    with pytest.raises(ValueError):
        SchedulingInstance(np.zeros((0, 3)))


def test_min_rate():
    r = np.array([[1.0, 2.0], [3.0, 1.0]])
    assert min_rate(np.eye(2), SchedulingInstance(r)) == 1.0
