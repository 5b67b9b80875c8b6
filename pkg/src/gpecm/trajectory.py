"""Energy-efficient trajectory design for a fixed schedule.

The rate and propulsion terms are non-convex in the positions. Slack
variables turn them into epigraph/hypograph constraints:

* ``G[k, n] >= H^2 + |q - g_k|^2`` carries the distance inside the rate,
  which is then bounded below by its tangent in ``G``;
* ``L >= kappa_hat`` (through ``1 + mu^2 <= L^2``), ``M >= sqrt(L^2 + x^2) - x``
  (through ``L^2 / M <= M + |v|^2 / v0^2``) and ``S >= L sqrt(M)`` (through
  ``L^2 <= S^2 / M``) carry the induced-power term, with ``x = |v|^2 / 2 v0^2``.

Each remaining convex right-hand side is replaced by its tangent at the
current point, which gives a convex inner approximation. The fractional
objective is handled by Dinkelbach's method, and successive convex
approximation moves the tangent points until the objective settles.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import conic
from .kinematics import Trajectory, check_feasibility, derive_kinematics
from .modeling import Affine, Model, vstack
from .propulsion import GENERALIZED, UNIT_TWR, UPPER_BOUND, UavParams, induced_factor, instantaneous_power, twr_upper
from .radio import RadioParams, Schedule, rate_matrix

log = logging.getLogger(__name__)

LN2 = math.log(2.0)

TOL_SCA = 1e-4
TOL_DINKELBACH = 1e-6
MAX_SCA = 100
MAX_DINKELBACH = 50
MOBILITY_MARGIN = 1e-7


class TrajectoryOptError(RuntimeError):
    def __init__(self, message, iteration=None, status=None):
        super().__init__(message)
        self.iteration = iteration
        self.status = status


@dataclass(frozen=True, eq=False)
class TrajectoryProblem:
    """Everything the trajectory subproblem needs besides the schedule.

    ``mode`` is ``"generalized"`` (direction-aware TWR, bounded by
    ``kappa_hat`` inside the optimizer) or ``"unit_twr"`` (``kappa = 1``).
    """

    users: np.ndarray
    start: np.ndarray
    radio: RadioParams
    uav: UavParams
    v_max: float
    slot_length: float
    num_slots: int
    mode: str = GENERALIZED
    backend: str = "auto"
    solver_tol: float = 1e-8

    def __post_init__(self):
        if self.mode not in (GENERALIZED, UNIT_TWR):
            raise ValueError(f"trajectory mode must be generalized or unit_twr, got {self.mode!r}")
        object.__setattr__(self, "users", np.asarray(self.users, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(2))

    @property
    def surrogate_mode(self):
        """Power model the optimizer's objective is tight to at its anchor."""
        return UPPER_BOUND if self.mode == GENERALIZED else UNIT_TWR

    @property
    def num_users(self):
        return self.users.shape[0]


@dataclass(frozen=True, eq=False)
class SlackState:
    """Local point of the successive approximation: trajectory plus tight slacks."""

    trajectory: Trajectory
    G: np.ndarray
    S: np.ndarray
    L: np.ndarray
    M: np.ndarray

    @property
    def velocity(self):
        return derive_kinematics(self.trajectory).velocity


def init_slacks(traj: Trajectory, radio: RadioParams, uav: UavParams, users, mode=GENERALIZED, v_max=None):
    """Slack values that make every slack constraint hold with equality at ``traj``."""
    if v_max is not None:
        rep = check_feasibility(traj, v_max)
        if not rep.feasible:
            raise TrajectoryOptError(
                f"initial trajectory infeasible: slots {rep.violated_slots[:5]} exceed the speed limit"
                if rep.violated_slots
                else "initial trajectory is not closed"
            )
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    q = traj.positions[1:]
    G = radio.altitude**2 + np.sum((q[None, :, :] - users[:, None, :]) ** 2, axis=-1)
    prof = derive_kinematics(traj)
    speed = prof.speed
    if mode == GENERALIZED:
        L = twr_upper(prof.accel_norm, speed, uav)
    else:
        L = np.ones_like(speed)
    x = speed**2 / (2.0 * uav.induced_velocity**2)
    M = L * L / (np.sqrt(L * L + x * x) + x)
    S = L * np.sqrt(M)
    return SlackState(traj, G, S, L, M)


def rate_lower_bound_coeffs(G_local, alpha, gamma0):
    """Tangent of ``alpha log2(1 + gamma0 / G)`` at ``G_local``.

    Returns ``(slope, intercept)`` with ``R_lb(G) = slope * G + intercept``;
    by convexity in ``G`` the tangent is a global underestimator.
    """
    G_local = np.asarray(G_local, dtype=float)
    if np.any(G_local <= 0):
        raise ValueError("local distance slack must be positive")
    alpha = np.asarray(alpha, dtype=float)
    slope = -alpha * gamma0 / (LN2 * G_local * (G_local + gamma0))
    intercept = alpha * np.log2(1.0 + gamma0 / G_local) - slope * G_local
    return slope, intercept


@dataclass(frozen=True, eq=False)
class Surrogates:
    """Per-slot tangent data.

    * twr: ``1 + mu^2 <= twr_slope * L + twr_const``
    * induced_m: ``L^2 / M <= M + (2 v_t.v - |v_t|^2) / v0^2``
    * induced_s: ``L^2 <= s_coef * S + m_coef * M``
    """

    twr_slope: np.ndarray
    twr_const: np.ndarray
    v_local: np.ndarray
    v0: float
    s_coef: np.ndarray
    m_coef: np.ndarray

    def twr_rhs(self, L):
        return self.twr_slope * L + self.twr_const

    def induced_m_rhs(self, M, v):
        v = np.asarray(v, dtype=float)
        lin = 2.0 * np.sum(self.v_local * v, axis=-1) - np.sum(self.v_local**2, axis=-1)
        return M + lin / self.v0**2

    def induced_s_rhs(self, S, M):
        return self.s_coef * S + self.m_coef * M


def linearized_constraint_coeffs(state: SlackState, uav: UavParams) -> Surrogates:
    """Tangent (first-order) data of ``L^2``, ``M + |v|^2/v0^2`` and ``S^2/M`` at ``state``."""
    L, M, S = state.L, state.M, state.S
    if np.any(L < 1 - 1e-12) or np.any(M <= 0) or np.any(S <= 0):
        raise ValueError("slack state violates L >= 1, M > 0, S > 0")
    ratio = S / M
    return Surrogates(
        twr_slope=2.0 * L,
        twr_const=-(L**2),
        v_local=state.velocity,
        v0=uav.induced_velocity,
        s_coef=2.0 * ratio,
        m_coef=-(ratio**2),
    )


@dataclass(frozen=True, eq=False)
class SubproblemTemplate:
    """Constraints of one convexified subproblem; the objective depends on lambda.

    ``rate_expr`` and ``energy_expr`` are in physical units (bits/s/Hz summed
    over slots, watts summed over slots); the program objective is divided by
    ``objective_scale`` so the solver sees O(1) coefficients.
    """

    program: conic.ConicProgram
    rate_expr: Affine
    energy_expr: Affine
    positions_expr: Affine
    num_slots: int
    objective_scale: float = 1.0

    def with_lambda(self, lam):
        if lam < 0:
            raise ValueError("Dinkelbach weight must be nonnegative")
        obj = (self.rate_expr - self.energy_expr * lam) / self.objective_scale
        c = np.zeros(self.program.n)
        np.add.at(c, obj.cols, obj.vals)
        return self.program.with_objective(c)

    def positions(self, x):
        return self.positions_expr.evaluate(x).reshape(self.num_slots + 1, 2)


def build_template(state: SlackState, sched: Schedule, problem: TrajectoryProblem) -> SubproblemTemplate:
    """Assemble the convexified constraints and the rate/energy expressions.

    Internally lengths are in units of the altitude ``H``, speeds in units of
    ``v_max`` and accelerations in units of ``g``; every cone is the physical
    one divided by a positive constant. Slack variables also get upper caps
    that no feasible trajectory can reach, so the feasible set is bounded
    even for slots whose slacks do not enter the objective.
    """
    traj = state.trajectory
    N = traj.num_slots
    K = problem.num_users
    if sched.alpha.shape != (K, N) or state.G.shape != (K, N):
        raise ValueError(f"schedule/slack shapes {sched.alpha.shape}, {state.G.shape} do not match K={K}, N={N}")
    uav, radio = problem.uav, problem.radio
    dt = traj.slot_length
    H = radio.altitude
    V = problem.v_max
    g = uav.gravity
    v0 = uav.induced_velocity
    gamma0 = radio.snr_ref
    sur = linearized_constraint_coeffs(state, uav)
    slope, intercept = rate_lower_bound_coeffs(state.G, sched.alpha, gamma0)
    general = problem.mode == GENERALIZED
    # stays inside the speed limit despite solver tolerance
    speed_cap = 1.0 - MOBILITY_MARGIN

    rates_now = np.sum(sched.alpha * rate_matrix(traj, problem.users, radio), axis=1)
    rate_scale = max(float(rates_now.min()), 1e-12)

    m = Model()
    q = m.variable(2 * (N + 1), "q")          # position / H
    G = m.variable(K * N, "G")                # distance slack / H^2
    S = m.variable(N, "S")
    M = m.variable(N, "M")
    L = m.variable(N, "L") if general else None
    r_min = m.variable(1, "r_min")            # min rate / rate_scale
    e2 = m.variable(N, "speed_sq")            # >= |v|^2 / V^2
    e3 = m.variable(N, "speed_cube")          # >= |v|^3 / V^3
    w = m.variable(N, "speed")                # >= |v| / V
    s2 = m.variable(N, "speed_sq_aux")
    if general:
        anorm = m.variable(N, "accel")        # >= |a| / g
        mu = m.variable(N, "mu")

    def pos(n):
        return q[2 * n:2 * n + 2]

    vel = [(pos(n + 1) - pos(n)) * (H / (V * dt)) for n in range(N)]
    acc = [(pos(n + 2) + pos(n) - pos(n + 1) * 2.0) * (H / (g * dt * dt)) for n in range(N - 1)]
    acc.append(acc[-1])

    m.eq(pos(0) - problem.start / H, "start")
    m.eq(pos(N) - pos(0), "closure")
    for n in range(N):
        m.soc(speed_cap, vel[n], "mobility")
    for k in range(K):
        gk = problem.users[k] / H
        for n in range(N):
            m.rsoc(G[k * N + n] - 1.0, 0.5, pos(n + 1) - gk, "rate_slack")
    for k in range(K):
        idx = np.nonzero(sched.alpha[k] > 0)[0]
        bound = 0.0
        if idx.size:
            bound = G[k * N + idx].dot(slope[k, idx] * H * H / rate_scale) + float(np.sum(intercept[k, idx])) / rate_scale
        m.le(r_min - bound, "min_rate")
    for n in range(N):
        m.rsoc(e2[n], 0.5, vel[n], "speed_sq")
        m.soc(w[n], vel[n], "speed")
        m.rsoc(s2[n], 0.5, w[n], "speed_cube")
        m.rsoc(e3[n] * 0.5, w[n], s2[n], "speed_cube")
    one = Affine.constant(1.0)
    drag = uav.air_density * uav.flat_plate_area * V * V / (2.0 * uav.mass * g)
    for n in range(N):
        Ln = L[n] if general else one
        if general:
            m.soc(anorm[n], acc[n], "accel")
            m.le(anorm[n] + e2[n] * drag - mu[n], "twr_mu")
            rhs19 = Ln * sur.twr_slope[n] + sur.twr_const[n]
            m.rsoc(rhs19 * 0.5, 1.0, vstack([one, mu[n]]), "twr")
        vt = sur.v_local[n] / V
        rhs20 = M[n] + (vel[n].dot(2.0 * vt) - float(vt @ vt)) * (V * V / (v0 * v0))
        m.rsoc(M[n] * 0.5, rhs20, Ln, "induced_m")
        rhs21 = S[n] * sur.s_coef[n] + M[n] * sur.m_coef[n]
        m.rsoc(rhs21 * 0.5, 1.0, Ln, "induced_s")

    # caps no feasible point can reach
    reach = V * traj.horizon / 2.0 + np.max(np.linalg.norm(problem.users - problem.start, axis=1))
    a_max = 2.0 * V / (g * dt)
    mu_max = a_max + drag
    L_max = math.sqrt(1.0 + mu_max * mu_max) * (1.0 + 1e-6) if general else 1.0
    M_cap = L_max + 3.0 * V * V / (v0 * v0) + 1.0
    S_cap = (L_max**2 + np.abs(sur.m_coef) * M_cap) / sur.s_coef + 1.0
    m.le(G - (1.0 + (reach / H) ** 2), "cap")
    for var in (e2, e3, w, s2):
        m.le(var - 1.0, "cap")
    m.le(M - M_cap, "cap")
    m.le(S - S_cap, "cap")
    if general:
        m.le(anorm - a_max * (1.0 + 1e-6), "cap")
        m.le(mu - mu_max * (1.0 + 1e-6), "cap")
        m.le(L - L_max, "cap")

    energy = (
        (e2.sum() * (3.0 * V * V / uav.tip_speed**2) + N) * uav.blade_profile_power
        + S.sum() * uav.induced_power
        + e3.sum() * (uav.parasite_coeff * V**3)
    )
    m.maximize(r_min)
    prog = m.build()
    return SubproblemTemplate(prog, r_min * rate_scale, energy, q * H, N, rate_scale)


def assemble_subproblem(state: SlackState, sched: Schedule, lam, problem: TrajectoryProblem) -> conic.ConicProgram:
    """Dinkelbach-parametrized convex subproblem ``max R_min - lam * energy_surrogate``."""
    return build_template(state, sched, problem).with_lambda(lam)


def surrogate_power(traj: Trajectory, problem: TrajectoryProblem):
    """Per-slot power the optimizer is tight to (``kappa_hat`` or ``kappa = 1``)."""
    prof = derive_kinematics(traj)
    return instantaneous_power(prof.acceleration, prof.velocity, problem.uav, problem.surrogate_mode).total


def anchor_objective(traj: Trajectory, sched: Schedule, problem: TrajectoryProblem):
    """``min_k sum_n alpha R`` over the surrogate power sum at a trajectory (no bandwidth factor)."""
    rates = np.sum(sched.alpha * rate_matrix(traj, problem.users, problem.radio), axis=1)
    return float(rates.min()) / float(np.sum(surrogate_power(traj, problem)))


def true_objective(traj: Trajectory, sched: Schedule, problem: TrajectoryProblem):
    """Same ratio as :func:`anchor_objective` under the exact direction-aware power."""
    rates = np.sum(sched.alpha * rate_matrix(traj, problem.users, problem.radio), axis=1)
    prof = derive_kinematics(traj)
    power = instantaneous_power(prof.acceleration, prof.velocity, problem.uav, GENERALIZED).total
    return float(rates.min()) / float(np.sum(power))


@dataclass
class SubproblemSolveReport:
    dinkelbach_lambdas: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    inner_solver_statuses: list = field(default_factory=list)
    iterations: int = 0
    status: str = "converged"
    trace: list = field(default_factory=list)


def dinkelbach(template: SubproblemTemplate, lam0, tol=TOL_DINKELBACH, max_iter=MAX_DINKELBACH, backend="auto", solver_tol=1e-8):
    """Maximize ``rate / energy`` over the template's feasible set.

    Returns ``(x, lambdas, F_values, statuses)`` where ``x`` is the last
    primal solution, whose ratio is the final lambda.
    """
    lam = float(lam0)
    lambdas, fvals, statuses = [lam], [], []
    x = None
    for _ in range(max_iter):
        sol = conic.solve(template.with_lambda(lam), tol=solver_tol, backend=backend)
        statuses.append(sol.status)
        if not sol.optimal:
            raise TrajectoryOptError(f"inner conic solve failed with status {sol.status}", status=sol.status)
        x = sol.primal
        rate = float(template.rate_expr.evaluate(x)[0])
        energy = float(template.energy_expr.evaluate(x)[0])
        F = rate - lam * energy
        fvals.append(F)
        if F <= tol:
            return x, lambdas, fvals, statuses
        lam = max(lam, rate / energy)
        lambdas.append(lam)
    raise TrajectoryOptError(f"Dinkelbach did not converge in {max_iter} iterations")


def _snap(q, problem):
    """Remove solver-tolerance drift from the fixed endpoints."""
    q = np.array(q, dtype=float)
    q[0] = problem.start
    q[-1] = problem.start
    return q


def solve_trajectory(traj0: Trajectory, sched: Schedule, problem: TrajectoryProblem, tol_sca=TOL_SCA,
                     tol_dink=TOL_DINKELBACH, max_sca=MAX_SCA, callback=None):
    """Successive convex approximation with a Dinkelbach solve at every step.

    The anchor objective (exact rate over surrogate power at the current
    trajectory) never decreases: a step that would lower it is rejected and
    the loop stops with status ``"stalled"``.
    """
    state = init_slacks(traj0, problem.radio, problem.uav, problem.users, problem.mode, problem.v_max)
    report = SubproblemSolveReport()
    current = anchor_objective(traj0, sched, problem)
    report.objective_trace.append(current)
    for it in range(1, max_sca + 1):
        template = build_template(state, sched, problem)
        try:
            x, lambdas, fvals, statuses = dinkelbach(
                template, current, tol_dink, backend=problem.backend, solver_tol=problem.solver_tol
            )
        except TrajectoryOptError as err:
            err.iteration = it
            raise
        report.dinkelbach_lambdas.append(lambdas)
        report.inner_solver_statuses.extend(statuses)
        report.iterations = it
        cand = Trajectory(_snap(template.positions(x), problem), traj0.slot_length)
        feas = check_feasibility(cand, problem.v_max)
        value = anchor_objective(cand, sched, problem) if feas.feasible else -math.inf
        rec = {"iteration": it, "lambda": lambdas[-1], "surrogate": lambdas[-1], "anchor": value,
               "true_ee": true_objective(cand, sched, problem) if feas.feasible else math.nan}
        report.trace.append(rec)
        if callback is not None:
            callback(rec)
        log.debug("SCA %d: lambda=%.6g anchor=%.6g", it, lambdas[-1], value)
        if not value >= current:
            report.status = "stalled"
            break
        gain = (value - current) / abs(current) if current else math.inf
        state = init_slacks(cand, problem.radio, problem.uav, problem.users, problem.mode)
        current = value
        report.objective_trace.append(current)
        if gain < tol_sca:
            break
    else:
        report.status = "max_iter"
    return state.trajectory, report
