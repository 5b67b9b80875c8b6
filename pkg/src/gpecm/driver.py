"""Scenario configuration, the alternating-optimization pipeline, benchmarks and reports.

A run alternates between the scheduling LP at a fixed trajectory and the
trajectory SCA at a fixed (relaxed) schedule, starting from a circle around
the users. After the loop the schedule is re-solved at the final trajectory,
rounded to a binary TDMA assignment and the run is scored with the exact
direction-aware power model.
"""

from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .kinematics import (
    Trajectory,
    build_heuristic_trajectory,
    check_feasibility,
    circle_trajectory,
    derive_kinematics,
    tour_order,
)
from .propulsion import GENERALIZED, UNIT_TWR, UPPER_BOUND, UavParams, trajectory_energy, trajectory_power
from .radio import RadioParams, Schedule, db_to_linear, dbm_to_watts, energy_efficiency, rate_matrix, rate_summary
from .scheduling import SchedulingInstance, round_schedule, solve_lp_relaxation
from .trajectory import (
    MAX_DINKELBACH,
    MAX_SCA,
    TOL_DINKELBACH,
    TOL_SCA,
    TrajectoryOptError,
    TrajectoryProblem,
    solve_trajectory,
    surrogate_power,
)

log = logging.getLogger(__name__)

SCHEMES = ("gpecm", "kappa1", "heuristic")
MAX_AO = 50
REFERENCE_SCENARIO = "paper_sec5.cfg"


class ScenarioError(ValueError):
    """Invalid or incomplete scenario; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class AlternatingOptError(RuntimeError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete problem instance.

    ``epsilon`` is the outer AO tolerance (``math.inf`` runs exactly one
    round). ``order`` selects the heuristic tour order, ``"given"`` or
    ``"nearest"``.
    """

    users: np.ndarray
    start: np.ndarray
    horizon: float
    num_slots: int
    slot_length: float
    v_max: float
    radio: RadioParams
    uav: UavParams
    epsilon: float = 1e-4
    tol_sca: float = TOL_SCA
    tol_dink: float = TOL_DINKELBACH
    max_ao: int = MAX_AO
    scheme: str = "gpecm"
    order: str = "given"
    backend: str = "auto"

    def __post_init__(self):
        users = np.array(self.users, dtype=float)
        if users.ndim != 2 or users.shape[1] != 2 or users.shape[0] < 1:
            raise ScenarioError("at least one user with (x, y) coordinates is required", "users")
        start = np.array(self.start, dtype=float).reshape(-1)
        if start.shape != (2,):
            raise ScenarioError("start must be a single (x, y) point", "start")
        if not (np.all(np.isfinite(users)) and np.all(np.isfinite(start))):
            raise ScenarioError("coordinates must be finite", "users")
        if int(self.num_slots) != self.num_slots or self.num_slots < 3:
            raise ScenarioError(f"slots must be an integer >= 3, got {self.num_slots}", "slots")
        for name in ("horizon", "slot_length", "v_max"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ScenarioError(f"{name} must be positive, got {val!r}", name)
        if abs(self.num_slots * self.slot_length - self.horizon) > 1e-9 * self.horizon:
            raise ScenarioError(
                f"slots * slot_length = {self.num_slots * self.slot_length:g} s does not equal horizon {self.horizon:g} s",
                "slot_length",
            )
        if not self.epsilon > 0:
            raise ScenarioError("epsilon must be positive (inf allowed)", "epsilon")
        for name in ("tol_sca", "tol_dink"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive", name)
        if self.max_ao < 1:
            raise ScenarioError("max_ao must be at least 1", "max_ao")
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}", "scheme")
        if self.order not in ("given", "nearest"):
            raise ScenarioError(f"order must be 'given' or 'nearest', got {self.order!r}", "order")
        users.setflags(write=False)
        start.setflags(write=False)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "num_slots", int(self.num_slots))

    @property
    def num_users(self):
        return self.users.shape[0]

    @property
    def altitude(self):
        return self.radio.altitude

    def with_horizon(self, horizon):
        """Same scenario over ``horizon`` seconds at the current slot length."""
        n = int(round(horizon / self.slot_length))
        return replace(self, horizon=float(horizon), num_slots=n)

    def problem(self, mode=GENERALIZED):
        return TrajectoryProblem(
            self.users, self.start, self.radio, self.uav, self.v_max, self.slot_length, self.num_slots,
            mode=mode, backend=self.backend,
        )


# ---------------------------------------------------------------- config files

_UAV_KEYS = {
    "air_density": "air_density",
    "flat_plate_area_m2": "flat_plate_area",
    "blade_profile_power_w": "blade_profile_power",
    "induced_power_w": "induced_power",
    "tip_speed_mps": "tip_speed",
    "induced_velocity_mps": "induced_velocity",
    "drag_ratio": "drag_ratio",
    "rotor_solidity": "rotor_solidity",
    "disc_area_m2": "disc_area",
}


def _points(text, key):
    pts = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ScenarioError(f"{key}: expected 'x, y' pairs separated by ';', got {chunk!r}", key)
        try:
            pts.append([float(parts[0]), float(parts[1])])
        except ValueError:
            raise ScenarioError(f"{key}: non-numeric coordinate in {chunk!r}", key) from None
    return np.array(pts, dtype=float).reshape(-1, 2)


class _Reader:
    def __init__(self, cp):
        self.cp = cp

    def raw(self, section, key, default=None):
        if not self.cp.has_section(section):
            if default is not None:
                return default
            raise ScenarioError(f"missing section [{section}]", f"{section}.{key}")
        if not self.cp.has_option(section, key):
            if default is not None:
                return default
            raise ScenarioError(f"missing field {section}.{key}", f"{section}.{key}")
        return self.cp.get(section, key)

    def num(self, section, key, default=None):
        val = self.raw(section, key, default)
        if not isinstance(val, str):
            return float(val)
        try:
            return float(val)
        except ValueError:
            raise ScenarioError(f"{section}.{key} is not a number: {val!r}", f"{section}.{key}") from None

    def level(self, section, key):
        """Read ``key_dbm`` (watts), ``key_db`` (linear) or plain ``key``."""
        for suffix, conv in (("_dbm", dbm_to_watts), ("_db", db_to_linear), ("", float)):
            name = key + suffix
            if self.cp.has_option(section, name):
                return float(conv(self.num(section, name)))
        raise ScenarioError(f"missing field {section}.{key}_dbm (or _db / linear)", f"{section}.{key}")


def parse_scenario(text, **overrides) -> Scenario:
    """Build a :class:`Scenario` from configuration text.

    Keyword ``overrides`` replace scenario fields after parsing
    (e.g. ``epsilon=1e-3``).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ScenarioError(f"cannot parse scenario: {err}") from None
    r = _Reader(cp)
    try:
        radio = RadioParams(
            altitude=r.num("radio", "altitude_m"),
            tx_power=r.level("radio", "tx_power"),
            ref_gain=r.level("radio", "ref_gain"),
            noise_power=r.level("radio", "noise_power"),
            bandwidth=r.num("radio", "bandwidth_hz"),
        )
    except ValueError as err:
        if isinstance(err, ScenarioError):
            raise
        raise ScenarioError(str(err), "radio") from None
    try:
        uav = UavParams.from_weight(
            r.num("uav", "weight_n"),
            gravity=r.num("uav", "gravity_mps2", 9.8),
            **{attr: r.num("uav", key) for key, attr in _UAV_KEYS.items()},
        )
    except ValueError as err:
        if isinstance(err, ScenarioError):
            raise
        raise ScenarioError(str(err), "uav") from None
    kw = dict(
        users=_points(r.raw("scenario", "users"), "scenario.users"),
        start=_points(r.raw("scenario", "start"), "scenario.start"),
        horizon=r.num("scenario", "horizon_s"),
        num_slots=r.num("scenario", "slots"),
        slot_length=r.num("scenario", "slot_length_s"),
        v_max=r.num("scenario", "v_max_mps"),
        radio=radio,
        uav=uav,
        epsilon=r.num("algo", "epsilon", 1e-4),
        tol_sca=r.num("algo", "tol_sca", TOL_SCA),
        tol_dink=r.num("algo", "tol_dink", TOL_DINKELBACH),
        max_ao=int(r.num("algo", "max_ao", MAX_AO)),
        scheme=r.raw("scenario", "scheme", "gpecm").strip(),
        order=r.raw("scenario", "order", "given").strip(),
        backend=r.raw("algo", "backend", "auto").strip(),
    )
    if kw["num_slots"] != int(kw["num_slots"]):
        raise ScenarioError("scenario.slots must be an integer", "scenario.slots")
    kw.update(overrides)
    return Scenario(**kw)


def load_scenario(path, **overrides) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario {path}: {err.strerror}") from None
    return parse_scenario(text, **overrides)


def reference_scenario_path():
    return str(resources.files("gpecm") / "scenarios" / REFERENCE_SCENARIO)


def reference_scenario(**overrides) -> Scenario:
    """The shipped four-user scenario."""
    return load_scenario(reference_scenario_path(), **overrides)


# ---------------------------------------------------------------- pipeline

@dataclass(eq=False)
class RunResult:
    """Outcome of one scheme.

    ``ee`` is the objective ``B min_k sum_n R_k[n] / sum_n P[n]`` and
    ``ee_bits_per_joule`` counts all delivered bits per joule; both use the
    exact direction-aware power model. ``ee_raw`` is the objective under the
    power model the scheme optimized (differs only for ``kappa1``).
    ``relaxed_min_rate`` is the LP value before rounding, so the rounding
    loss is ``relaxed_min_rate - min_rate``. ``ao_trace`` interleaves the scheduling and trajectory objectives of every
    outer round (surrogate power, no bandwidth factor).
    """

    scheme: str
    trajectory: Trajectory = None
    schedule: Schedule = None
    power: object = None
    ee: float = math.nan
    ee_bits_per_joule: float = math.nan
    ee_raw: float = math.nan
    min_rate: float = math.nan
    sum_rate: float = math.nan
    energy: float = math.nan
    per_user_rate: np.ndarray = None
    relaxed_min_rate: float = math.nan
    ao_trace: list = field(default_factory=list)
    iterations: int = 0
    sca_reports: list = field(default_factory=list)
    error: str = None

    @property
    def ok(self):
        return self.error is None


def _score(result: RunResult, scenario: Scenario, raw_mode=GENERALIZED):
    traj, sched = result.trajectory, result.schedule
    per_user, min_rate = rate_summary(traj, sched, scenario.users, scenario.radio)
    sum_rate = float(scenario.radio.bandwidth * per_user.sum())
    energy, power = trajectory_energy(traj, scenario.uav, GENERALIZED)
    ee, bpj = energy_efficiency(min_rate, energy, traj.slot_length, sum_rate)
    raw_energy, _ = trajectory_energy(traj, scenario.uav, raw_mode)
    result.power = power
    result.per_user_rate = per_user
    result.min_rate = min_rate
    result.sum_rate = sum_rate
    result.energy = energy
    result.ee = ee
    result.ee_bits_per_joule = bpj
    result.ee_raw = energy_efficiency(min_rate, raw_energy, traj.slot_length)[0]
    return result


def _final_schedule(traj, scenario):
    inst = SchedulingInstance(rate_matrix(traj, scenario.users, scenario.radio))
    relaxed, lp_rate = solve_lp_relaxation(inst, backend=scenario.backend)
    return round_schedule(relaxed, inst), float(scenario.radio.bandwidth * lp_rate)


def alternating_optimize(scenario: Scenario, mode=GENERALIZED, callback=None, scheme=None) -> RunResult:
    """Alternate the scheduling LP and the trajectory SCA until the two agree.

    The loop stops once ``(obj_traj - obj_sched) / obj_traj < epsilon``,
    where both objectives are the min rate over the optimizer's power model
    (``kappa_hat`` for ``mode="generalized"``, ``kappa = 1`` otherwise).
    """
    problem = scenario.problem(mode)
    traj = circle_trajectory(scenario.users, scenario.start, scenario.v_max, scenario.horizon, scenario.num_slots)
    scheme = scheme or ("gpecm" if mode == GENERALIZED else "kappa1")
    result = RunResult(scheme)
    for r in range(1, scenario.max_ao + 1):
        inst = SchedulingInstance(rate_matrix(traj, scenario.users, scenario.radio))
        sched, lp_rate = solve_lp_relaxation(inst, backend=scenario.backend)
        obj_sched = lp_rate / float(np.sum(surrogate_power(traj, problem)))
        try:
            traj, rep = solve_trajectory(traj, sched, problem, tol_sca=scenario.tol_sca, tol_dink=scenario.tol_dink)
        except TrajectoryOptError as err:
            raise AlternatingOptError(f"AO round {r}, SCA iteration {err.iteration}: {err}", r) from err
        obj_traj = rep.objective_trace[-1]
        result.ao_trace += [obj_sched, obj_traj]
        result.sca_reports.append(rep)
        result.iterations = r
        rec = {"round": r, "schedule_objective": obj_sched, "trajectory_objective": obj_traj,
               "sca_iterations": rep.iterations, "sca_status": rep.status}
        log.info("AO %d: sched=%.9g traj=%.9g (%d SCA, %s)", r, obj_sched, obj_traj, rep.iterations, rep.status)
        if callback is not None:
            callback(rec)
        if (obj_traj - obj_sched) / obj_traj < scenario.epsilon:
            break
    else:
        raise AlternatingOptError(f"AO did not converge within {scenario.max_ao} rounds", scenario.max_ao)
    result.trajectory = traj
    result.schedule, result.relaxed_min_rate = _final_schedule(traj, scenario)
    return _score(result, scenario, raw_mode=GENERALIZED if mode == GENERALIZED else UNIT_TWR)


def heuristic_benchmark(scenario: Scenario) -> RunResult:
    """Maximum-speed tour with hover dwells, scheduled by the max-min LP."""
    order = tour_order(scenario.users, scenario.start, scenario.order)
    traj = build_heuristic_trajectory(
        scenario.users, order, scenario.v_max, scenario.horizon, scenario.num_slots, scenario.start
    )
    result = RunResult("heuristic", trajectory=traj, iterations=0)
    result.schedule, result.relaxed_min_rate = _final_schedule(traj, scenario)
    return _score(result, scenario)


def run_scheme(scenario: Scenario, scheme=None, callback=None) -> RunResult:
    scheme = scheme or scenario.scheme
    if scheme == "gpecm":
        return alternating_optimize(scenario, GENERALIZED, callback)
    if scheme == "kappa1":
        return alternating_optimize(scenario, UNIT_TWR, callback)
    if scheme == "heuristic":
        return heuristic_benchmark(scenario)
    raise ScenarioError(f"unknown scheme {scheme!r}", "scheme")


def run_benchmarks(scenario: Scenario, schemes=SCHEMES, callback=None):
    """Run every scheme; a failing scheme is reported in its ``error`` field."""
    out = []
    for scheme in schemes:
        try:
            out.append(run_scheme(scenario, scheme, callback))
        except (AlternatingOptError, TrajectoryOptError, RuntimeError, ValueError) as err:
            log.error("scheme %s failed: %s", scheme, err)
            out.append(RunResult(scheme, error=f"{type(err).__name__}: {err}"))
    return out


def evaluate_run(scenario: Scenario, traj: Trajectory, sched: Schedule, scheme="evaluate") -> RunResult:
    """Score a given trajectory and schedule with the exact model."""
    if traj.num_slots != scenario.num_slots or abs(traj.slot_length - scenario.slot_length) > 1e-12:
        raise ScenarioError(
            f"trajectory has {traj.num_slots} slots of {traj.slot_length} s, scenario expects "
            f"{scenario.num_slots} of {scenario.slot_length} s", "trajectory"
        )
    return _score(RunResult(scheme, trajectory=traj, schedule=sched), scenario)


# ---------------------------------------------------------------- reports

def _g(x):
    return format(float(x), ".12g")


def _num(x):
    """JSON-safe number rounded to 12 significant digits."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(_g(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(v) if isinstance(v, (int, np.integer)) else _g(v) for v in row])


def summary_dict(res: RunResult):
    d = {"scheme": res.scheme, "ok": res.ok}
    if not res.ok:
        d["error"] = res.error
        return d
    d.update(
        ee=_num(res.ee),
        ee_bits_per_joule=_num(res.ee_bits_per_joule),
        ee_raw=_num(res.ee_raw),
        min_rate_bps=_num(res.min_rate),
        sum_rate_bps=_num(res.sum_rate),
        relaxed_min_rate_bps=_num(res.relaxed_min_rate),
        energy_j=_num(res.energy),
        per_user_rate_bps=[_num(v * 1.0) for v in np.asarray(res.per_user_rate) * 1.0],
        iterations=int(res.iterations),
        sca_iterations=[int(r.iterations) for r in res.sca_reports],
        convergence_trace=[_num(v) for v in res.ao_trace],
        num_slots=int(res.trajectory.num_slots),
        slot_length_s=_num(res.trajectory.slot_length),
        max_accel_mps2=_num(derive_kinematics(res.trajectory).accel_norm.max()),
    )
    return d


def emit_reports(results, out_dir):
    """Write ``<out_dir>/<scheme>/{trajectory,power,schedule}.csv`` and ``summary.json``.

    Returns the list of written paths. Output is byte-identical for identical
    results.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to report")
    written = []
    for res in results:
        d = os.path.join(out_dir, res.scheme)
        os.makedirs(d, exist_ok=True)
        if res.ok:
            traj = res.trajectory
            prof = derive_kinematics(traj)
            pw = res.power
            N = traj.num_slots
            q = traj.positions
            path = os.path.join(d, "trajectory.csv")
            _write_csv(path, ["n", "x", "y", "vx", "vy", "ax", "ay", "kappa"], (
                (n, q[n, 0], q[n, 1], *prof.velocity[n], *prof.acceleration[n], pw.twr[n]) for n in range(N)
            ))
            written.append(path)
            path = os.path.join(d, "power.csv")
            _write_csv(path, ["n", "blade", "induced", "parasite", "total"], (
                (n, pw.blade_profile[n], pw.induced[n], pw.parasite[n], pw.total[n]) for n in range(N)
            ))
            written.append(path)
            path = os.path.join(d, "schedule.csv")
            _write_csv(path, ["n", "user"], ((n, schedule_users(res.schedule)[n]) for n in range(N)))
            written.append(path)
        path = os.path.join(d, "summary.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary_dict(res), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def schedule_users(sched: Schedule):
    """Served user per slot for a binary schedule, ``-1`` when idle."""
    a = sched.alpha
    users = np.argmax(a, axis=0)
    users[a.max(axis=0) <= 0] = -1
    return [int(u) for u in users]


def read_trajectory_csv(path, slot_length):
    """Rebuild a closed trajectory from ``trajectory.csv`` (rows ``q[0..N-1]``)."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as err:
        raise ScenarioError(f"cannot read trajectory {path}: {err}", "trajectory") from None
    if data.shape[1] < 3:
        raise ScenarioError(f"{path}: expected columns n, x, y", "trajectory")
    q = data[:, 1:3]
    return Trajectory(np.vstack([q, q[:1]]), slot_length)


def read_schedule_csv(path, num_users, num_slots):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.int64)
    except (OSError, ValueError) as err:
        raise ScenarioError(f"cannot read schedule {path}: {err}", "schedule") from None
    if data.shape != (num_slots, 2):
        raise ScenarioError(f"{path}: expected {num_slots} rows of n, user", "schedule")
    alpha = np.zeros((num_users, num_slots))
    for n, k in data:
        if k >= num_users or k < -1:
            raise ScenarioError(f"{path}: slot {n} names unknown user {k}", "schedule")
        if k >= 0:
            alpha[k, n] = 1.0
    return Schedule(alpha, binary=True)
