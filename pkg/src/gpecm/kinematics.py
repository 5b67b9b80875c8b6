"""Discretized planar flight geometry.

Positions are an ``(N+1, 2)`` array ``q[0..N]`` sampled every ``slot_length``
seconds. Per-slot velocity and acceleration come from forward differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CLOSURE_TOL = 1e-6


class TrajectoryError(ValueError):
    """Structurally invalid trajectory (too short, bad slot length, non-finite)."""


class InfeasibleTourError(ValueError):
    def __init__(self, required_T, T):
        super().__init__(f"tour needs at least T = {required_T:.6g} s at maximum speed, got T = {T:.6g} s")
        self.required_T = required_T


@dataclass(frozen=True, eq=False)
class Trajectory:
    positions: np.ndarray
    slot_length: float

    def __post_init__(self):
        q = np.array(self.positions, dtype=float)
        if q.ndim != 2 or q.shape[1] != 2:
            raise TrajectoryError(f"positions must have shape (N+1, 2), got {q.shape}")
        if q.shape[0] < 3:
            raise TrajectoryError("a trajectory needs at least 3 positions")
        if not np.all(np.isfinite(q)):
            raise TrajectoryError("positions must be finite")
        if not (self.slot_length > 0 and math.isfinite(self.slot_length)):
            raise TrajectoryError("slot_length must be positive")
        q.setflags(write=False)
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "slot_length", float(self.slot_length))

    @property
    def num_slots(self):
        return self.positions.shape[0] - 1

    @property
    def horizon(self):
        return self.num_slots * self.slot_length

    def __add__(self, other):
        if not isinstance(other, Trajectory) or other.slot_length != self.slot_length:
            return NotImplemented
        return Trajectory(self.positions + other.positions, self.slot_length)


@dataclass(frozen=True, eq=False)
class KinematicsProfile:
    velocity: np.ndarray
    acceleration: np.ndarray
    direction_change: np.ndarray

    @property
    def speed(self):
        return np.linalg.norm(self.velocity, axis=1)

    @property
    def accel_norm(self):
        return np.linalg.norm(self.acceleration, axis=1)


def derive_kinematics(traj: Trajectory) -> KinematicsProfile:
    """Velocity, acceleration and direction change ``c = a.v`` per slot.

    The last slot has no three-point stencil, so it repeats the
    acceleration of slot ``N-2``.
    """
    q = traj.positions
    dt = traj.slot_length
    v = (q[1:] - q[:-1]) / dt
    a = (q[2:] + q[:-2] - 2.0 * q[1:-1]) / dt**2
    a = np.vstack([a, a[-1:]])
    c = np.einsum("ij,ij->i", a, v)
    return KinematicsProfile(v, a, c)


@dataclass
class FeasibilityReport:
    violated_slots: list = field(default_factory=list)
    closed: bool = True
    max_step: float = 0.0

    @property
    def feasible(self):
        return not self.violated_slots and self.closed


def check_feasibility(traj: Trajectory, v_max, closure_tol=CLOSURE_TOL) -> FeasibilityReport:
    """Per-slot speed limit ``||q[n+1] - q[n]|| <= v_max dt`` and closure ``q[0] = q[N]``.

    Steps are compared squared against ``(v_max dt)^2`` with a relative
    allowance of a few ulps so that exact-boundary steps pass.
    """
    q = traj.positions
    omega2 = (v_max * traj.slot_length) ** 2
    step2 = np.sum(np.diff(q, axis=0) ** 2, axis=1)
    bad = np.nonzero(step2 > omega2 * (1.0 + 1e-12))[0]
    closed = bool(np.linalg.norm(q[0] - q[-1]) <= closure_tol)
    return FeasibilityReport([int(n) for n in bad], closed, float(np.sqrt(step2.max())))


def tour_order(users, start, method="given"):
    """Visit order for the heuristic tour: ``"given"`` or ``"nearest"`` neighbor."""
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    if method == "given":
        return list(range(len(users)))
    if method != "nearest":
        raise ValueError(f"unknown order method {method!r}")
    left = list(range(len(users)))
    here = np.asarray(start, dtype=float)
    order = []
    while left:
        d = [np.linalg.norm(users[k] - here) for k in left]
        k = left.pop(int(np.argmin(d)))
        order.append(k)
        here = users[k]
    return order


def build_heuristic_trajectory(users, order, v_max, T, N, start) -> Trajectory:
    """Fly at ``v_max`` from ``start`` through ``users[order]`` and back, hovering above each user.

    Leftover time is split into equal whole-slot dwells; the remainder goes to
    the last dwell. Positions are the continuous-time path sampled at slot
    boundaries.
    """
    dt = T / N
    start = np.asarray(start, dtype=float)
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    if order is None:
        order = range(len(users))
    order = list(order)
    if sorted(order) != sorted(set(order)) or any(k < 0 or k >= len(users) for k in order):
        raise ValueError("order must be a permutation of user indices")
    if not order:
        return Trajectory(np.tile(start, (N + 1, 1)), dt)

    waypoints = [start] + [users[k] for k in order] + [start]
    legs = [np.linalg.norm(waypoints[i + 1] - waypoints[i]) for i in range(len(waypoints) - 1)]
    fly = sum(legs) / v_max
    if fly > T * (1.0 + 1e-12):
        raise InfeasibleTourError(fly, T)
    leftover = max(T - fly, 0.0)
    K = len(order)
    per = math.floor(leftover / (K * dt) + 1e-9) * dt
    dwells = [per] * (K - 1) + [leftover - per * (K - 1)]

    # (time, position) knots of the piecewise-linear continuous path
    knots_t, knots_q = [0.0], [start]
    t = 0.0
    for i, leg in enumerate(legs):
        t += leg / v_max
        knots_t.append(t)
        knots_q.append(waypoints[i + 1])
        if i < K:
            t += dwells[i]
            knots_t.append(t)
            knots_q.append(waypoints[i + 1])
    knots_t = np.array(knots_t)
    knots_t[-1] = T
    knots_q = np.array(knots_q)
    ts = np.arange(N + 1) * dt
    ts[-1] = T
    q = np.column_stack([np.interp(ts, knots_t, knots_q[:, j]) for j in range(2)])
    q[0] = start
    q[-1] = start
    return Trajectory(q, dt)


def circle_trajectory(users, start, v_max, T, N) -> Trajectory:
    """Closed circular start path around the users' centroid.

    The radius is ``min(v_max T / 2pi, mean user-to-centroid distance)``; the
    circle starts at the point facing ``start`` and is translated so that
    ``q[0] = q[N] = start``.
    """
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    start = np.asarray(start, dtype=float)
    dt = T / N
    centre = users.mean(axis=0)
    spread = float(np.mean(np.linalg.norm(users - centre, axis=1)))
    r = min(v_max * T / (2.0 * math.pi), spread)
    heading = start - centre
    phase = math.atan2(heading[1], heading[0]) if np.linalg.norm(heading) > 0 else 0.0
    ang = phase + 2.0 * math.pi * np.arange(N + 1) / N
    q = centre + r * np.column_stack([np.cos(ang), np.sin(ang)])
    q += start - q[0]
    q[-1] = q[0]
    return Trajectory(q, dt)
