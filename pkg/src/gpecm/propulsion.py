"""Rotary-wing propulsion power with a flight-state dependent thrust-to-weight ratio.

The thrust-to-weight ratio (TWR) follows from the horizontal force balance:
the horizontal thrust has to supply ``m a`` on top of cancelling the fuselage
drag ``-(1/2) rho S_FP |v|^2 e_v``, so

    |t_h|^2 = m^2 |a|^2 + (1/4) rho^2 S_FP^2 |v|^4 + m rho S_FP (a.v) |v|
    kappa   = sqrt(1 + |t_h|^2 / W^2)

and the induced-power term of the classic hover/forward-flight model is
scaled by ``kappa``. Note the ``m^2`` on the acceleration term; the
dimensionally consistent form is the one used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .kinematics import Trajectory, derive_kinematics

GENERALIZED = "generalized"
UNIT_TWR = "unit_twr"
UPPER_BOUND = "upper_bound"
MODES = (GENERALIZED, UNIT_TWR, UPPER_BOUND)


class DomainError(ValueError):
    """Input outside the model's domain (non-finite, negative magnitude, ...)."""


@dataclass(frozen=True)
class UavParams:
    """Airframe and rotor constants (SI units).

    Attributes
    ----------
    mass : kg
    gravity : m/s^2
    weight : N, must equal ``mass * gravity``
    air_density : kg/m^3
    flat_plate_area : m^2, fuselage equivalent flat plate area ``S_FP``
    blade_profile_power : W, blade profile power in hover ``P0``
    induced_power : W, induced power in hover ``Pi``
    tip_speed : m/s, rotor blade tip speed ``U_tip``
    induced_velocity : m/s, mean rotor induced velocity in hover ``v0``
    drag_ratio : fuselage drag ratio ``d0``
    rotor_solidity : ``s``
    disc_area : m^2, rotor disc area ``A``
    """

    mass: float
    gravity: float
    weight: float
    air_density: float
    flat_plate_area: float
    blade_profile_power: float
    induced_power: float
    tip_speed: float
    induced_velocity: float
    drag_ratio: float
    rotor_solidity: float
    disc_area: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"UavParams.{f.name} must be positive and finite, got {val!r}")
        if abs(self.weight - self.mass * self.gravity) / self.weight > 1e-6:
            raise DomainError(
                f"weight {self.weight} N is inconsistent with mass*gravity = {self.mass * self.gravity} N"
            )

    @classmethod
    def from_weight(cls, weight, gravity=9.8, **kw):
        return cls(mass=weight / gravity, gravity=gravity, weight=weight, **kw)

    @property
    def parasite_coeff(self):
        """``(1/2) d0 rho s A``, the factor multiplying ``|v|^3``."""
        return 0.5 * self.drag_ratio * self.air_density * self.rotor_solidity * self.disc_area


@dataclass(frozen=True, eq=False)
class PowerBreakdown:
    blade_profile: np.ndarray
    induced: np.ndarray
    parasite: np.ndarray
    total: np.ndarray
    twr: np.ndarray

    def __getitem__(self, key):
        return PowerBreakdown(*(np.asarray(getattr(self, f.name))[key] for f in fields(self)))

    def __len__(self):
        return np.size(self.total)


def _vec(x, name):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise DomainError(f"{name} must have a trailing dimension of 2")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite")
    return x


def twr(a, v, p: UavParams):
    """Thrust-to-weight ratio ``kappa(a, v)``; broadcasts over leading axes."""
    a = _vec(a, "a")
    v = _vec(v, "v")
    m, rho_s, W = p.mass, p.air_density * p.flat_plate_area, p.weight
    a2 = np.sum(a * a, axis=-1)
    v2 = np.sum(v * v, axis=-1)
    c = np.sum(a * v, axis=-1)
    num = 4.0 * m * m * a2 + rho_s**2 * v2 * v2 + 4.0 * m * rho_s * c * np.sqrt(v2)
    # num >= -4W^2 holds identically: 1 + num/(4W^2) = 1 + |t_h|^2/W^2
    return np.sqrt(np.maximum(1.0 + num / (4.0 * W * W), 1.0))


def twr_upper(a_norm, v_norm, p: UavParams):
    """Upper bound ``kappa_hat`` obtained by replacing ``a.v`` with ``|a||v|``."""
    a_norm = np.asarray(a_norm, dtype=float)
    v_norm = np.asarray(v_norm, dtype=float)
    if not (np.all(np.isfinite(a_norm)) and np.all(np.isfinite(v_norm))):
        raise DomainError("magnitudes must be finite")
    if np.any(a_norm < 0) or np.any(v_norm < 0):
        raise DomainError("magnitudes must be nonnegative")
    mu = a_norm / p.gravity + p.air_density * p.flat_plate_area * v_norm**2 / (2.0 * p.mass * p.gravity)
    return np.sqrt(1.0 + mu * mu)


def induced_factor(kappa, v_norm, v0):
    """``kappa * sqrt(sqrt(kappa^2 + x^2) - x)`` with ``x = |v|^2 / (2 v0^2)``.

    The inner difference is evaluated as ``kappa^2 / (sqrt(kappa^2 + x^2) + x)``,
    which is exact algebra and free of cancellation at high speed.
    """
    kappa = np.asarray(kappa, dtype=float)
    x = np.asarray(v_norm, dtype=float) ** 2 / (2.0 * v0 * v0)
    inner = kappa * kappa / (np.sqrt(kappa * kappa + x * x) + x)
    return kappa * np.sqrt(inner)


def instantaneous_power(a, v, p: UavParams, mode=GENERALIZED) -> PowerBreakdown:
    """Blade profile, induced and parasite power for flight state ``(a, v)``.

    ``mode`` selects the TWR: ``"generalized"`` (direction-aware), ``"unit_twr"``
    (``kappa = 1``) or ``"upper_bound"`` (``kappa_hat``).
    """
    a = _vec(a, "a")
    v = _vec(v, "v")
    speed = np.linalg.norm(v, axis=-1)
    if mode == GENERALIZED:
        kappa = twr(a, v, p)
    elif mode == UNIT_TWR:
        kappa = np.ones_like(speed)
    elif mode == UPPER_BOUND:
        kappa = twr_upper(np.linalg.norm(a, axis=-1), speed, p)
    else:
        raise ValueError(f"unknown power mode {mode!r}")
    blade = p.blade_profile_power * (1.0 + 3.0 * speed**2 / p.tip_speed**2)
    induced = p.induced_power * induced_factor(kappa, speed, p.induced_velocity)
    parasite = p.parasite_coeff * speed**3
    return PowerBreakdown(blade, induced, parasite, blade + induced + parasite, kappa)


def trajectory_power(traj: Trajectory, p: UavParams, mode=GENERALIZED) -> PowerBreakdown:
    prof = derive_kinematics(traj)
    return instantaneous_power(prof.acceleration, prof.velocity, p, mode)


def trajectory_energy(traj: Trajectory, p: UavParams, mode=GENERALIZED):
    """Propulsion energy in joules and the per-slot power breakdown."""
    per_slot = trajectory_power(traj, p, mode)
    return float(traj.slot_length * np.sum(per_slot.total)), per_slot
