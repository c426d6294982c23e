"""Alternating optimization of flight path and transmit powers.

Starting from a fly-hover-fly path, each outer iteration solves the power
schedule in closed form for the current path and then improves the path by
successive convex approximation for the new schedule.  Both steps ascend
the unclamped mission-average rate, so the reported (clamped) objective
trace is monotone up to floating-point noise.

Four schemes share this driver:

    joint3d       alternation over horizontal position, altitude, power
    joint2d       alternation with the altitude frozen (default 200 m)
    fhf_adaptive  fly-hover-fly path, one closed-form power pass
    fhf_constant  fly-hover-fly path, every slot at the average power
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .power import PowerSolution, solve_power
from .sca import PROJ_MAX_SWEEPS, PROJ_TOL, optimize_trajectory
from .scenario import (
    PowerProfile,
    Scenario,
    ScenarioError,
    Trajectory,
    average_secrecy_rate,
    secrecy_rate_per_slot,
    slot_gains,
    validate_power,
    validate_trajectory,
)

SCHEMES = ("joint3d", "joint2d", "fhf_adaptive", "fhf_constant")

# Altitude a frozen-altitude run is pinned to, m.
JOINT2D_ALTITUDE = 200.0


@dataclass
class SolverConfig:
    """Stopping controls of the nested solvers.

    outer_*: alternation loop; sca_*: convex-approximation loop;
    pg_*/proj_*: projected-gradient subproblem and its feasibility
    projection.  The solver path is deterministic; rng_seed only feeds
    randomized validation utilities.
    """

    outer_rel_tol: float = 1e-4
    outer_max_iters: int = 30
    sca_rel_tol: float = 1e-4
    sca_max_iters: int = 50
    pg_tol: float = 1e-6
    pg_max_iters: int = 2000
    proj_tol: float = PROJ_TOL
    proj_max_sweeps: int = PROJ_MAX_SWEEPS
    rng_seed: int = 0


@dataclass
class SolveReport:
    """Outcome of one scheme on one scenario."""

    scheme: str
    objective: float              # clamped average secrecy rate, bps/Hz
    objective_trace: np.ndarray   # per outer iteration, clamped
    trajectory: Trajectory
    power: PowerProfile
    multiplier: float
    outer_iters: int
    converged: bool
    wall_time_s: float
    per_slot: dict                # arrays: rate, a, b, p, h (interior slots)


def fly_hover_fly_init(scenario: Scenario) -> Trajectory:
    """Feasible initial path: max-speed transit, hover, max-speed exit.

    The hover point is the most central serving node (smallest summed
    distance to the others, lowest index on ties).  When mission time is
    too short to pass through it, the path follows the max-speed leg
    toward the hover point as far as the return leg allows and then heads
    straight to the end fix.  Altitude holds the start level and ramps to
    the end level as late as the climb/descent limits permit.
    """
    nodes = scenario.gn_positions
    dists = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=2)
    hover = nodes[int(np.argmin(np.sum(dists, axis=1)))]

    steps = scenario.num_slots + 1
    vstep = scenario.step_horiz
    q0, qf = scenario.q_start, scenario.q_end
    d1 = float(np.linalg.norm(hover - q0))
    d2 = float(np.linalg.norm(qf - hover))
    u1 = (hover - q0) / d1 if d1 > 0.0 else np.zeros(2)
    u2 = (hover - qf) / d2 if d2 > 0.0 else np.zeros(2)
    n1 = int(math.ceil(d1 / vstep - 1e-12)) if d1 > 0.0 else 0
    n2 = int(math.ceil(d2 / vstep - 1e-12)) if d2 > 0.0 else 0

    q = np.empty((steps + 1, 2))
    if n1 + n2 <= steps:
        # hover reachable: out at max speed, dwell, leave just in time
        for i in range(steps + 1):
            if i <= n1:
                q[i] = q0 + min(i * vstep, d1) * u1
            elif i >= steps - n2:
                q[i] = qf + min((steps - i) * vstep, d2) * u2
            else:
                q[i] = hover
    else:
        # not reachable: turn where the straight return is still feasible
        turn = 0
        for m in range(min(n1, steps) + 1):
            x = q0 + min(m * vstep, d1) * u1
            if np.linalg.norm(qf - x) <= (steps - m) * vstep + 1e-9:
                turn = m
            else:
                break
        x_turn = q0 + min(turn * vstep, d1) * u1
        for i in range(turn + 1):
            q[i] = q0 + min(i * vstep, d1) * u1
        frac = (np.arange(steps + 1 - turn)) / (steps - turn)
        q[turn:] = x_turn + frac[:, None] * (qf - x_turn)

    # hold the start altitude; bend toward the end level no earlier than the
    # rate limits require
    idx = np.arange(steps + 1)
    lo = scenario.h_end - (steps - idx) * scenario.step_up
    hi = scenario.h_end + (steps - idx) * scenario.step_down
    h = np.clip(scenario.h_start, lo, hi)

    traj = Trajectory(q, h)
    validate_trajectory(traj, scenario)
    return traj


def _alternate(scenario: Scenario, cfg: SolverConfig):
    """Power/trajectory alternation from the fly-hover-fly start."""
    traj = fly_hover_fly_init(scenario)
    trace = []
    converged = False
    outer = 0
    prev = None
    for _ in range(cfg.outer_max_iters):
        psol = solve_power(slot_gains(traj, scenario), scenario)
        traj, _ = optimize_trajectory(traj, psol.profile, scenario, cfg)
        obj = average_secrecy_rate(traj, psol.profile, scenario)
        trace.append(obj)
        outer += 1
        if prev is not None and obj - prev < cfg.outer_rel_tol * max(abs(prev), 1e-12):
            converged = True
            break
        prev = obj
    # refresh the schedule for the final path so the reported pair is
    # mutually consistent; this can only raise the clamped objective
    psol = solve_power(slot_gains(traj, scenario), scenario)
    trace.append(average_secrecy_rate(traj, psol.profile, scenario))
    return traj, psol, np.asarray(trace), converged, outer


def _freeze_altitude(scenario: Scenario, h_fixed: float) -> Scenario:
    if not (scenario.h_min - 1e-9 <= h_fixed <= scenario.h_max + 1e-9):
        raise ScenarioError(
            f"frozen altitude {h_fixed} m outside the scenario altitude box")
    return replace(scenario, h_min=h_fixed, h_max=h_fixed,
                   h_start=h_fixed, h_end=h_fixed)


def solve_joint(scenario: Scenario, solver_cfg: SolverConfig | None = None,
                scheme: str = "joint3d",
                h_fixed: float = JOINT2D_ALTITUDE) -> SolveReport:
    """Run one scheme on one scenario and report the audited outcome.

    Arguments:
        scenario: problem instance.
        solver_cfg: stopping controls (defaults used when omitted).
        scheme: one of SCHEMES.
        h_fixed: altitude the joint2d scheme pins the whole mission to.

    The returned pair always satisfies the flight and power invariants;
    identical inputs reproduce identical outputs bit for bit.
    """
    cfg = solver_cfg or SolverConfig()
    if scheme not in SCHEMES:
        raise ScenarioError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    t0 = time.perf_counter()

    audit_scenario = scenario
    if scheme == "joint3d":
        traj, psol, trace, converged, outer = _alternate(scenario, cfg)
        power = psol.profile
        mult = psol.multiplier
    elif scheme == "joint2d":
        audit_scenario = _freeze_altitude(scenario, h_fixed)
        traj, psol, trace, converged, outer = _alternate(audit_scenario, cfg)
        power = psol.profile
        mult = psol.multiplier
    elif scheme == "fhf_adaptive":
        traj = fly_hover_fly_init(scenario)
        psol = solve_power(slot_gains(traj, scenario), scenario)
        power = psol.profile
        mult = psol.multiplier
        trace = np.asarray([average_secrecy_rate(traj, power, scenario)])
        converged, outer = True, 1
    else:  # fhf_constant
        traj = fly_hover_fly_init(scenario)
        power = PowerProfile(np.full(scenario.num_slots, scenario.p_ave))
        mult = 0.0
        trace = np.asarray([average_secrecy_rate(traj, power, scenario)])
        converged, outer = True, 1

    wall = time.perf_counter() - t0

    # feasibility audit of everything handed back to the caller
    validate_trajectory(traj, audit_scenario)
    validate_power(power, audit_scenario)

    gains = slot_gains(traj, scenario)
    rate = secrecy_rate_per_slot(gains, power, clamp=True)
    return SolveReport(
        scheme=scheme,
        objective=float(trace[-1]),
        objective_trace=trace,
        trajectory=traj,
        power=power,
        multiplier=mult,
        outer_iters=outer,
        converged=converged,
        wall_time_s=wall,
        per_slot={
            "rate": rate,
            "a": gains.a,
            "b": gains.b,
            "p": power.p,
            "h": traj.h[1:-1].copy(),
        },
    )
