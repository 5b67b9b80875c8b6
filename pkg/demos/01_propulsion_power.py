"""
Propulsion power with a direction-aware thrust-to-weight ratio
==============================================================

A rotary-wing UAV tilts its rotor to produce horizontal thrust. That thrust
has to cover both the fuselage drag and whatever acceleration the vehicle is
doing, so the total rotor thrust (and with it the induced power) depends on
the angle between acceleration and velocity, not just on speed.
"""

import numpy as np

from gpecm import GENERALIZED, UNIT_TWR, UPPER_BOUND, instantaneous_power, reference_scenario, twr

uav = reference_scenario().uav

# %%
# Hovering: every power model collapses to P0 + Pi
for mode in (GENERALIZED, UNIT_TWR, UPPER_BOUND):
    print(f"{mode:12s} hover power {float(instantaneous_power([0, 0], [0, 0], uav, mode).total):.4f} W")
print("P0 + Pi            ", uav.blade_profile_power + uav.induced_power)

# %%
# Same speed, same acceleration magnitude, different direction.
# Braking (a opposite v) lets drag do part of the work; speeding up costs extra.
v = np.array([15.0, 0.0])
for deg in (0, 45, 90, 135, 180):
    th = np.radians(deg)
    a = 3.0 * np.array([np.cos(th), np.sin(th)])
    pb = instantaneous_power(a, v, uav)
    print(f"angle {deg:3d} deg  kappa={float(pb.twr):.4f}  induced={float(pb.induced):7.3f} W  total={float(pb.total):7.3f} W")

# %%
# Speed sweep in steady level flight (a = 0).  The kappa = 1 model misses the
# extra thrust needed against drag; the gap grows with speed.
speeds = np.linspace(0, 40, 9)
vel = np.column_stack([speeds, np.zeros_like(speeds)])
acc = np.zeros_like(vel)
gen = instantaneous_power(acc, vel, uav, GENERALIZED)
one = instantaneous_power(acc, vel, uav, UNIT_TWR)
for s, k, pg, p1 in zip(speeds, gen.twr, gen.total, one.total):
    print(f"v={s:5.1f} m/s  kappa={k:.4f}  P={pg:7.2f} W  (kappa=1: {p1:7.2f} W)")

# %%
# Where does level flight cost least?
fine = np.linspace(0, 40, 4001)
p = instantaneous_power(np.zeros((fine.size, 2)), np.column_stack([fine, 0 * fine]), uav).total
print(f"minimum-power speed {fine[np.argmin(p)]:.2f} m/s, {p.min():.2f} W")
print(f"kappa in level flight at 40 m/s: {float(twr([0, 0], [40, 0], uav)):.4f}")
