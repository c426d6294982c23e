"""Scheme orchestration: initial paths, alternation, and reports."""

import numpy as np
import pytest

from uavsec import (
    PowerProfile,
    ScenarioError,
    average_secrecy_rate,
    fly_hover_fly_init,
    slot_gains,
    solve_joint,
    solve_power,
    validate_trajectory,
)
from uavsec.solver import SCHEMES

from conftest import small_scenario


# ---------------------------------------------------------------------------
# fly-hover-fly construction
# ---------------------------------------------------------------------------

def test_fhf_dwells_at_most_central_node(ref_scenario):
    traj = fly_hover_fly_init(ref_scenario)
    validate_trajectory(traj, ref_scenario)
    # the middle serving node minimizes the summed distance to the others,
    # and the mission leaves ample time to pass through it
    mid = traj.q[traj.q.shape[0] // 2]
    assert np.allclose(mid, [0.0, 300.0], atol=1e-9)
    dwell = np.sum(np.all(np.abs(traj.q - np.array([0.0, 300.0])) < 1e-9, axis=1))
    assert dwell >= 2


def test_fhf_truncates_leg_when_hover_unreachable():
    scn = small_scenario()
    # detour through the node above (0, 120) needs ~312 m against a 270 m
    # budget, so the path must turn early and head straight for the exit
    traj = fly_hover_fly_init(scn)
    validate_trajectory(traj, scn)
    assert not np.any(np.all(traj.q == np.array([0.0, 120.0]), axis=1))
    assert np.all(traj.q[:, 1] >= -1e-9)


def test_fhf_straight_line_at_exact_minimum_duration():
    # nine steps of exactly 200/9 m cover the 200 m corridor with zero
    # slack; the only feasible path is the straight line
    scn = small_scenario(v_horiz=200.0 / 9.0,
                         gn_positions=[[0.0, 300.0]])
    traj = fly_hover_fly_init(scn)
    validate_trajectory(traj, scn)
    rows = scn.num_slots + 2
    want = np.linspace(scn.q_start, scn.q_end, rows)
    assert np.allclose(traj.q, want, atol=1e-9)


def test_fhf_altitude_ramps_as_late_as_limits_permit():
    scn = small_scenario(h_end=120.0)
    traj = fly_hover_fly_init(scn)
    validate_trajectory(traj, scn)
    want = [100.0] * 6 + [105.0, 110.0, 115.0, 120.0]
    assert np.allclose(traj.h, want, atol=1e-12)


# ---------------------------------------------------------------------------
# scheme behavior
# ---------------------------------------------------------------------------

def test_unknown_scheme_rejected():
    with pytest.raises(ScenarioError):
        solve_joint(small_scenario(), scheme="joint4d")


def test_fhf_constant_reports_uniform_power_objective():
    scn = small_scenario()
    rep = solve_joint(scn, scheme="fhf_constant")
    uniform = PowerProfile(np.full(scn.num_slots, scn.p_ave))
    want = average_secrecy_rate(fly_hover_fly_init(scn), uniform, scn)
    assert rep.objective == pytest.approx(want, rel=1e-12)
    assert rep.multiplier == 0.0
    assert rep.outer_iters == 1 and rep.converged
    assert np.all(rep.power.p == scn.p_ave)


def test_fhf_adaptive_power_never_loses_to_uniform():
    scn = small_scenario()
    const = solve_joint(scn, scheme="fhf_constant")
    adapt = solve_joint(scn, scheme="fhf_adaptive")
    assert adapt.objective >= const.objective - 1e-12
    assert np.array_equal(adapt.trajectory.q, const.trajectory.q)


def test_joint3d_dominates_simpler_schemes():
    scn = small_scenario()
    r3 = solve_joint(scn, scheme="joint3d")
    r2 = solve_joint(scn, scheme="joint2d", h_fixed=100.0)
    ra = solve_joint(scn, scheme="fhf_adaptive")
    rc = solve_joint(scn, scheme="fhf_constant")
    assert r3.objective >= r2.objective - 1e-9
    assert r3.objective >= ra.objective - 1e-9
    assert ra.objective >= rc.objective - 1e-9


def test_joint2d_holds_the_frozen_altitude():
    scn = small_scenario()
    rep = solve_joint(scn, scheme="joint2d", h_fixed=100.0)
    assert np.all(rep.trajectory.h == 100.0)


def test_joint2d_rejects_altitude_outside_box():
    with pytest.raises(ScenarioError):
        solve_joint(small_scenario(), scheme="joint2d", h_fixed=200.0)


def test_joint3d_matches_joint2d_on_degenerate_box():
    scn = small_scenario(h_min=100.0, h_max=100.0)
    r3 = solve_joint(scn, scheme="joint3d")
    r2 = solve_joint(scn, scheme="joint2d", h_fixed=100.0)
    assert r3.objective == pytest.approx(r2.objective, abs=1e-9)


# ---------------------------------------------------------------------------
# report integrity
# ---------------------------------------------------------------------------

def test_report_is_self_consistent():
    scn = small_scenario()
    rep = solve_joint(scn, scheme="joint3d")
    n = scn.num_slots
    for key in ("rate", "a", "b", "p", "h"):
        assert rep.per_slot[key].shape == (n,)
    assert rep.objective == pytest.approx(float(np.mean(rep.per_slot["rate"])),
                                          rel=1e-12)
    assert np.all(np.diff(rep.objective_trace) >= -1e-6)
    assert rep.objective == rep.objective_trace[-1]
    assert rep.wall_time_s > 0.0
    validate_trajectory(rep.trajectory, scn)


def test_final_power_is_optimal_for_final_path():
    scn = small_scenario()
    rep = solve_joint(scn, scheme="joint3d")
    psol = solve_power(slot_gains(rep.trajectory, scn), scn)
    assert rep.objective == pytest.approx(psol.objective, abs=1e-12)


def test_solver_runs_are_bit_reproducible():
    scn = small_scenario()
    a = solve_joint(scn, scheme="joint3d")
    b = solve_joint(scn, scheme="joint3d")
    assert a.objective == b.objective
    assert np.array_equal(a.trajectory.q, b.trajectory.q)
    assert np.array_equal(a.trajectory.h, b.trajectory.h)
    assert np.array_equal(a.power.p, b.power.p)
    assert a.outer_iters == b.outer_iters


def test_scheme_registry_is_complete():
    scn = small_scenario()
    for scheme in SCHEMES:
        rep = solve_joint(scn, scheme=scheme, h_fixed=100.0)
        assert rep.scheme == scheme
        assert np.isfinite(rep.objective)
