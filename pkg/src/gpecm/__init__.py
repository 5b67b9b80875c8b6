"""Energy-efficient rotary-wing UAV communication.

Direction-aware propulsion power, TDMA max-min scheduling and trajectory
design by successive convex approximation over second-order cone programs.
"""

from .conic import ConicProgram, ConicSolution, solve, validate_solution
from .driver import (
    RunResult,
    Scenario,
    ScenarioError,
    alternating_optimize,
    emit_reports,
    evaluate_run,
    heuristic_benchmark,
    load_scenario,
    reference_scenario,
    parse_scenario,
    run_benchmarks,
    run_scheme,
)
from .kinematics import (
    Trajectory,
    build_heuristic_trajectory,
    check_feasibility,
    circle_trajectory,
    derive_kinematics,
    tour_order,
)
from .modeling import Affine, Model
from .propulsion import (
    GENERALIZED,
    UNIT_TWR,
    UPPER_BOUND,
    PowerBreakdown,
    UavParams,
    instantaneous_power,
    trajectory_energy,
    trajectory_power,
    twr,
    twr_upper,
)
from .radio import RadioParams, Schedule, energy_efficiency, rate_matrix, rate_summary, slot_rate, snr
from .scheduling import SchedulingInstance, brute_force_schedule, round_schedule, solve_lp_relaxation
from .trajectory import TrajectoryProblem, init_slacks, solve_trajectory

__version__ = "0.1.0"
