"""Secrecy-rate-maximizing UAV trajectory and transmit-power planning.

A rotary-wing UAV serves cooperating ground nodes over line-of-sight
links while colluding eavesdroppers listen.  The library plans the 3D
flight path and the per-slot transmit powers that maximize the mission-
average secrecy rate, by alternating a closed-form power schedule with a
convex-approximation trajectory step, and ships the benchmark schemes,
an experiment harness, and independent validation oracles.
"""

from .harness import (
    EmitFlags,
    ExperimentSpec,
    ScenarioConfig,
    SpecError,
    SweepSpec,
    default_spec_path,
    emit_spec,
    load_spec,
    loads_spec,
    run_experiment,
)
from .oracles import (
    OracleError,
    OracleReport,
    finite_diff_gradient_check,
    power_allocation_audit,
    power_grid_oracle,
    random_feasible_power,
    random_feasible_trajectory,
    surrogate_bound_sampler,
    surrogate_gradient_audit,
)
from .power import (
    PowerSolution,
    active_slot_set,
    solve_power,
    unconstrained_slot_power,
)
from .sca import (
    ReducedSurrogate,
    SurrogatePoint,
    eavesdropper_distance_lb,
    optimize_trajectory,
    project_kinematics,
    sca_step,
    surrogate_rate,
)
from .scenario import (
    FEAS_TOL,
    PowerProfile,
    Scenario,
    ScenarioError,
    SlotGains,
    Trajectory,
    average_secrecy_rate,
    channel_gain,
    secrecy_rate_per_slot,
    slot_gains,
    validate_power,
    validate_trajectory,
)
from .solver import (
    SCHEMES,
    SolveReport,
    SolverConfig,
    fly_hover_fly_init,
    solve_joint,
)

__version__ = "0.1.0"
