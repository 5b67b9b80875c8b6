"""
Max-min TDMA scheduling on a fixed path
=======================================

For a given flight path the spectral efficiency of every (user, slot) pair is
known. Picking who is served in each slot so that the worst-off user gets the
most is an integer program; relaxing the 0/1 weights to [0, 1] turns it into
an LP, which is what the optimizer solves.
"""

import numpy as np

from gpecm import (
    SchedulingInstance,
    Trajectory,
    brute_force_schedule,
    circle_trajectory,
    rate_matrix,
    reference_scenario,
    round_schedule,
    solve_lp_relaxation,
)

# %%
# A toy instance small enough to enumerate: 3 users, 6 slots
rng = np.random.default_rng(0)
inst = SchedulingInstance(rng.uniform(0, 2, size=(3, 6)))
relaxed, lp_value = solve_lp_relaxation(inst)
best, brute_value = brute_force_schedule(inst)
rounded = round_schedule(relaxed, inst)
print("relaxed weights\n", np.round(relaxed.alpha, 3))
print(f"LP value {lp_value:.4f} >= best binary {brute_value:.4f}")
print("argmax rounding\n", rounded.alpha.astype(int))

# %%
# The same LP on the four-user scenario, along the circular start path
s = reference_scenario()
path = circle_trajectory(s.users, s.start, s.v_max, s.horizon, s.num_slots)
inst = SchedulingInstance(rate_matrix(path, s.users, s.radio))
relaxed, value = solve_lp_relaxation(inst)
per_user = (relaxed.alpha * inst.rate_matrix).sum(axis=1)
print("per-user rate sums (bits/s/Hz):", np.round(per_user, 4))
print(f"min rate {s.radio.bandwidth * value / 1e6:.4f} Mbit/s-slots")

# %%
# Rounding loses a little: the LP equalises users with fractional slots
binary = round_schedule(relaxed, inst)
print("after rounding:", np.round((binary.alpha * inst.rate_matrix).sum(axis=1), 4))
