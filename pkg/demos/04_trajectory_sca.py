"""
Trajectory design for a fixed schedule
======================================

With the schedule frozen, the energy-efficiency ratio is still non-convex in
the positions. Slack variables plus first-order bounds give a convex
subproblem that is tight at the current path; Dinkelbach's method solves
the ratio, and the bounds are re-centred until the objective stops moving.
"""

import logging
from dataclasses import replace

import numpy as np

from gpecm import (
    SchedulingInstance,
    check_feasibility,
    circle_trajectory,
    rate_matrix,
    reference_scenario,
    solve_lp_relaxation,
)
from gpecm.trajectory import true_objective, solve_trajectory

logging.basicConfig(level=logging.WARNING)

# %%
# Two users and a short 40 s horizon keep this quick
users = np.array([[250.0, 0.0], [-150.0, 200.0]])
s = replace(reference_scenario().with_horizon(40.0), users=users)
prob = s.problem()
q0 = circle_trajectory(users, s.start, s.v_max, s.horizon, s.num_slots)
sched, _ = solve_lp_relaxation(SchedulingInstance(rate_matrix(q0, users, s.radio)))

# %%
# Each SCA step reports the Dinkelbach ratio and the exact-model ratio
q, rep = solve_trajectory(q0, sched, prob, callback=lambda r: print(
    f"SCA {r['iteration']:2d}  surrogate ratio {r['anchor']:.6e}  exact ratio {r['true_ee']:.6e}"))
print(f"status {rep.status}, {rep.iterations} iterations, feasible={check_feasibility(q, s.v_max).feasible}")
print("Dinkelbach steps per SCA iteration:", [len(l) for l in rep.dinkelbach_lambdas])
print(f"exact ratio: start {true_objective(q0, sched, prob):.6e} -> end {true_objective(q, sched, prob):.6e}")

# %%
# The optimized path bends towards the users and slows down near them
speed = np.linalg.norm(np.diff(q.positions, axis=0), axis=1) / s.slot_length
d = np.min(np.linalg.norm(q.positions[1:, None, :] - users[None], axis=2), axis=1)
for n in range(0, s.num_slots, 5):
    print(f"slot {n:2d}  speed {speed[n]:5.1f} m/s  nearest user {d[n]:6.1f} m")
