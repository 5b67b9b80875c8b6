"""Line-of-sight downlink: SNR, TDMA rates and energy-efficiency metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import Trajectory


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class RadioParams:
    """Radio constants, all linear scale.

    ``ref_gain`` is the channel power gain at 1 m; ``tx_power`` and
    ``noise_power`` are in watts, ``bandwidth`` in Hz, ``altitude`` in m.
    """

    altitude: float
    tx_power: float
    ref_gain: float
    noise_power: float
    bandwidth: float

    def __post_init__(self):
        for name in ("altitude", "tx_power", "ref_gain", "noise_power", "bandwidth"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"RadioParams.{name} must be positive and finite, got {val!r}")

    @property
    def snr_ref(self):
        """``gamma0 = P_tx rho0 / sigma^2``."""
        return self.tx_power * self.ref_gain / self.noise_power


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Schedule:
    """User-by-slot scheduling weights ``alpha[k, n]``."""

    alpha: np.ndarray
    binary: bool = False

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 2:
            raise ScheduleError(f"alpha must be K x N, got shape {a.shape}")
        tol = 1e-9
        if np.any(a < -tol) or np.any(a > 1 + tol):
            raise ScheduleError("alpha entries must lie in [0, 1]")
        if np.any(a.sum(axis=0) > 1 + tol):
            raise ScheduleError("at most one user may be served per slot")
        if self.binary and np.any((a != 0) & (a != 1)):
            raise ScheduleError("binary schedule has fractional entries")
        a = np.clip(a, 0.0, 1.0)
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def num_users(self):
        return self.alpha.shape[0]

    @property
    def num_slots(self):
        return self.alpha.shape[1]


def snr(q, g, r: RadioParams):
    """``gamma0 / (H^2 + |q - g|^2)``; broadcasts over leading axes."""
    q = np.asarray(q, dtype=float)
    g = np.asarray(g, dtype=float)
    d2 = np.sum((q - g) ** 2, axis=-1)
    return r.snr_ref / (r.altitude**2 + d2)


def slot_rate(alpha, gamma):
    """Spectral efficiency ``alpha log2(1 + gamma)`` in bits/s/Hz."""
    return np.asarray(alpha, dtype=float) * np.log2(1.0 + np.asarray(gamma, dtype=float))


def serving_positions(traj: Trajectory):
    """Positions used for the rate of slots ``1..N``, i.e. ``q[1..N]``."""
    return traj.positions[1:]


def rate_matrix(traj: Trajectory, users, r: RadioParams):
    """``log2(1 + gamma_k[n])`` for every user ``k`` and slot ``n``; shape ``(K, N)``."""
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    q = serving_positions(traj)
    gamma = snr(q[None, :, :], users[:, None, :], r)
    return np.log2(1.0 + gamma)


def rate_summary(traj: Trajectory, sched: Schedule, users, r: RadioParams):
    """Per-user rate sums (bits/s/Hz summed over slots) and ``B * min_k`` of them."""
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    if sched.num_users != len(users) or sched.num_slots != traj.num_slots:
        raise ScheduleError(
            f"schedule is {sched.num_users}x{sched.num_slots}, expected {len(users)}x{traj.num_slots}"
        )
    per_user = np.sum(sched.alpha * rate_matrix(traj, users, r), axis=1)
    return per_user, float(r.bandwidth * per_user.min())


def energy_efficiency(min_rate, energy, slot_length, sum_rate=None):
    """Objective ``R_min / sum_n P[n]`` and delivered bits per joule.

    ``min_rate`` is ``B min_k sum_n R_k[n]`` and ``sum_rate`` is
    ``B sum_k sum_n R_k[n]`` (both bits/s summed over slots); ``energy`` is
    ``slot_length * sum_n P[n]`` in joules. The bits-per-joule figure counts
    the traffic of all users (``sum_rate``, defaulting to ``min_rate``).
    """
    if not (energy > 0):
        raise ValueError(f"energy must be positive, got {energy!r}")
    power_sum = energy / slot_length
    if sum_rate is None:
        sum_rate = min_rate
    return min_rate / power_sum, sum_rate * slot_length / energy
