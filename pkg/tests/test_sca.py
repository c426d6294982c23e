"""Surrogate construction, feasibility projection, and trajectory ascent."""

import math

import numpy as np
import pytest

from uavsec import (
    PowerProfile,
    ReducedSurrogate,
    ScenarioError,
    SurrogatePoint,
    Trajectory,
    average_secrecy_rate,
    eavesdropper_distance_lb,
    optimize_trajectory,
    project_kinematics,
    random_feasible_trajectory,
    sca_step,
    surrogate_rate,
    validate_trajectory,
)
from uavsec.scenario import LN2
from uavsec.sca import ETA_FLOOR, kinematic_violation

from conftest import small_scenario


def straight_path(scn) -> Trajectory:
    rows = scn.num_slots + 2
    frac = np.linspace(0.0, 1.0, rows)[:, None]
    q = scn.q_start + frac * (scn.q_end - scn.q_start)
    h = np.linspace(scn.h_start, scn.h_end, rows)
    return Trajectory(q, h)


def uniform_power(scn) -> PowerProfile:
    return PowerProfile(np.full(scn.num_slots, scn.p_ave))


def exact_aux_rate(zeta, eta, power, scn) -> float:
    """Mean of the two-log rate evaluated directly in the auxiliaries."""
    c = scn.ref_gain_over_noise * power.p
    serv = np.log1p(np.sum(c / zeta, axis=0)) / LN2
    eave = np.log1p(np.sum(c / eta, axis=0)) / LN2
    return float(np.mean(serv - eave))


# ---------------------------------------------------------------------------
# eavesdropper distance tangent
# ---------------------------------------------------------------------------

def test_distance_lb_exact_at_anchor():
    w = np.array([30.0, -40.0])
    anchor = (np.array([10.0, 5.0]), 90.0)
    for alpha in (2.0, 2.5, 3.0):
        truth = (float(np.sum((anchor[0] - w) ** 2)) + 90.0 ** 2) ** (alpha / 2)
        got = eavesdropper_distance_lb(anchor[0], 90.0, anchor, w, alpha)
        assert got == pytest.approx(truth, rel=1e-12)


def test_distance_lb_hand_example():
    # alpha=2 anchor (0,0) at h=1, eavesdropper at (1,0): the squared
    # distance there is 2 and the tangent slope is 2, so moving to (1,0)
    # at the same altitude gives 2 + 2*(-1) = 0 against a true value of 1
    anchor = (np.array([0.0, 0.0]), 1.0)
    got = eavesdropper_distance_lb(np.array([1.0, 0.0]), 1.0, anchor,
                                   np.array([1.0, 0.0]), 2.0)
    assert got == pytest.approx(0.0, abs=1e-12)


def test_distance_lb_never_exceeds_truth(rng):
    for alpha in (2.0, 2.5, 3.0):
        for _ in range(200):
            w = rng.uniform(-200, 200, 2)
            q_m = rng.uniform(-200, 200, 2)
            h_m = rng.uniform(50, 300)
            q = rng.uniform(-400, 400, 2)
            h = rng.uniform(50, 300)
            truth = (float(np.sum((q - w) ** 2)) + h * h) ** (alpha / 2)
            got = eavesdropper_distance_lb(q, h, (q_m, h_m), w, alpha)
            assert got <= truth + 1e-9


def test_distance_lb_rejects_collocated_anchor():
    w = np.array([5.0, 5.0])
    with pytest.raises(ScenarioError):
        eavesdropper_distance_lb(np.array([0.0, 0.0]), 10.0, (w, 0.0), w, 2.0)


# ---------------------------------------------------------------------------
# surrogate rate
# ---------------------------------------------------------------------------

def test_surrogate_point_caches_link_distances():
    scn = small_scenario()
    point = SurrogatePoint.from_trajectory(straight_path(scn), scn)
    q, h = point.traj_local.interior()
    d2 = np.sum((q[0] - scn.gn_positions[0]) ** 2) + h[0] ** 2
    assert point.zeta_local[0, 0] == pytest.approx(d2, rel=1e-12)
    assert point.zeta_local.shape == (1, scn.num_slots)
    assert point.eta_local.shape == (1, scn.num_slots)
    point.validate(scn)


def test_surrogate_point_validate_detects_stale_cache():
    scn = small_scenario()
    point = SurrogatePoint.from_trajectory(straight_path(scn), scn)
    point.zeta_local = point.zeta_local * 1.01
    with pytest.raises(ScenarioError):
        point.validate(scn)


def test_surrogate_rate_tight_at_expansion():
    scn = small_scenario()
    power = uniform_power(scn)
    point = SurrogatePoint.from_trajectory(straight_path(scn), scn)
    got = surrogate_rate(point.zeta_local, point.eta_local, power, point, scn)
    want = exact_aux_rate(point.zeta_local, point.eta_local, power, scn)
    assert got == pytest.approx(want, rel=1e-12)


def test_surrogate_rate_lower_bound_in_serving_distance(rng):
    scn = small_scenario()
    power = uniform_power(scn)
    point = SurrogatePoint.from_trajectory(straight_path(scn), scn)
    for _ in range(100):
        zeta = point.zeta_local * rng.uniform(0.2, 5.0, point.zeta_local.shape)
        got = surrogate_rate(zeta, point.eta_local, power, point, scn)
        want = exact_aux_rate(zeta, point.eta_local, power, scn)
        assert got <= want + 1e-9


def test_surrogate_rate_zero_power_is_zero():
    scn = small_scenario()
    power = PowerProfile(np.zeros(scn.num_slots))
    point = SurrogatePoint.from_trajectory(straight_path(scn), scn)
    got = surrogate_rate(point.zeta_local, point.eta_local, power, point, scn)
    assert got == 0.0


# ---------------------------------------------------------------------------
# reduced surrogate
# ---------------------------------------------------------------------------

def test_reduced_value_matches_exact_rate_at_expansion():
    scn = small_scenario()
    power = uniform_power(scn)
    traj = straight_path(scn)
    point = SurrogatePoint.from_trajectory(traj, scn)
    model = ReducedSurrogate(point, power, scn)
    got = model.value(*traj.interior())
    want = average_secrecy_rate(traj, power, scn, clamp=False)
    assert got == pytest.approx(want, rel=1e-12)


def test_reduced_gradient_matches_finite_differences():
    scn = small_scenario()
    power = uniform_power(scn)
    traj = straight_path(scn)
    point = SurrogatePoint.from_trajectory(traj, scn)
    model = ReducedSurrogate(point, power, scn)
    q, h = traj.interior()
    gq, gh = model.gradient(q, h)
    step = 1e-4
    worst = 0.0
    for n in range(scn.num_slots):
        for axis in range(3):
            qp, hp = q.copy(), h.copy()
            qm, hm = q.copy(), h.copy()
            if axis < 2:
                qp[n, axis] += step
                qm[n, axis] -= step
                want = gq[n, axis]
            else:
                hp[n] += step
                hm[n] -= step
                want = gh[n]
            fd = (model.value(qp, hp) - model.value(qm, hm)) / (2 * step)
            worst = max(worst, abs(fd - want) / max(abs(fd), 1e-12))
    assert worst <= 1e-6


def test_reduced_value_rejects_points_past_tangent_zero():
    # far enough down-range the affine eavesdropper tangent crosses zero,
    # where the leakage bound is meaningless; value must flag the point
    scn = small_scenario()
    power = uniform_power(scn)
    traj = straight_path(scn)
    model = ReducedSurrogate(SurrogatePoint.from_trajectory(traj, scn), power, scn)
    q, h = traj.interior()
    eve = scn.eve_positions[0]
    q_far = q + 5.0 * (eve - q)
    assert model.value(q_far, h) == -math.inf


def test_reduced_value_ignores_zero_power_slots():
    scn = small_scenario()
    p = np.full(scn.num_slots, scn.p_ave)
    p[3] = 0.0
    power = PowerProfile(p)
    traj = straight_path(scn)
    model = ReducedSurrogate(SurrogatePoint.from_trajectory(traj, scn), power, scn)
    q, h = traj.interior()
    base = model.value(q, h)
    q2, h2 = q.copy(), h.copy()
    q2[3] += np.array([500.0, -700.0])
    h2[3] += 40.0
    assert model.value(q2, h2) == pytest.approx(base, rel=1e-12)


# ---------------------------------------------------------------------------
# kinematic projection
# ---------------------------------------------------------------------------

def test_violation_zero_on_feasible_path():
    scn = small_scenario()
    traj = straight_path(scn)
    assert kinematic_violation(traj.q, traj.h, scn) == 0.0


def test_violation_measures_speed_excess():
    scn = small_scenario()
    traj = straight_path(scn)
    q = traj.q.copy()
    step = scn.step_horiz
    q[4] = q[3] + np.array([step + 7.5, 0.0])
    assert kinematic_violation(q, traj.h, scn) >= 7.5 - 1e-9


def test_project_feasible_point_is_identity():
    scn = small_scenario()
    traj = straight_path(scn)
    q, h, ok, sweeps = project_kinematics(traj.q, traj.h, scn)
    assert ok and sweeps == 0
    assert np.array_equal(q, traj.q) and np.array_equal(h, traj.h)


def test_project_restores_feasibility_and_pins_endpoints(rng):
    scn = small_scenario()
    traj = straight_path(scn)
    q = traj.q.copy()
    h = traj.h.copy()
    q[1:-1] += rng.uniform(-40, 40, q[1:-1].shape)
    h[1:-1] += rng.uniform(-30, 60, h[1:-1].shape)
    qp, hp, ok, sweeps = project_kinematics(q, h, scn)
    assert ok and sweeps >= 1
    assert np.array_equal(qp[0], traj.q[0]) and np.array_equal(qp[-1], traj.q[-1])
    assert hp[0] == traj.h[0] and hp[-1] == traj.h[-1]
    assert kinematic_violation(qp, hp, scn) <= 1e-8
    # projecting again is a no-op
    _, _, ok2, sweeps2 = project_kinematics(qp, hp, scn)
    assert ok2 and sweeps2 == 0


def test_project_reports_failure_on_tiny_sweep_budget():
    scn = small_scenario()
    traj = straight_path(scn)
    q = traj.q.copy()
    q[1:-1, 1] += 500.0
    _, _, ok, sweeps = project_kinematics(q, traj.h, scn, max_sweeps=1)
    assert not ok and sweeps == 1


# ---------------------------------------------------------------------------
# subproblem step and outer ascent
# ---------------------------------------------------------------------------

def test_sca_step_zero_power_returns_expansion_unchanged():
    scn = small_scenario()
    traj = straight_path(scn)
    point = SurrogatePoint.from_trajectory(traj, scn)
    new_traj, f, stalled = sca_step(point, PowerProfile(np.zeros(scn.num_slots)), scn)
    assert stalled
    assert f == 0.0
    assert np.array_equal(new_traj.q, traj.q) and np.array_equal(new_traj.h, traj.h)


def test_sca_step_improves_surrogate_from_random_starts(rng):
    scn = small_scenario()
    power = uniform_power(scn)
    for _ in range(5):
        traj = random_feasible_trajectory(scn, rng)
        point = SurrogatePoint.from_trajectory(traj, scn)
        model = ReducedSurrogate(point, power, scn)
        f0 = model.value(*traj.interior())
        new_traj, f, _ = sca_step(point, power, scn)
        assert f >= f0 - 1e-12
        validate_trajectory(new_traj, scn)


def test_optimize_trace_monotone_and_improving():
    scn = small_scenario()
    traj, trace = optimize_trajectory(straight_path(scn), uniform_power(scn), scn)
    assert len(trace) >= 2
    assert np.all(np.diff(trace) >= -1e-9)
    assert trace[-1] > trace[0] + 1e-3
    validate_trajectory(traj, scn)
    # the path bends toward the ground node, away from the eavesdropper
    assert np.mean(traj.q[1:-1, 1]) > 1.0


def test_optimize_trace_end_equals_returned_objective():
    scn = small_scenario()
    power = uniform_power(scn)
    traj, trace = optimize_trajectory(straight_path(scn), power, scn)
    want = average_secrecy_rate(traj, power, scn, clamp=False)
    assert trace[-1] == pytest.approx(want, rel=1e-12)


def test_optimize_zero_power_stops_immediately():
    scn = small_scenario()
    init = straight_path(scn)
    traj, trace = optimize_trajectory(init, PowerProfile(np.zeros(scn.num_slots)), scn)
    assert len(trace) <= 2 and np.all(trace == 0.0)
    assert np.array_equal(traj.q, init.q)


def test_optimize_rejects_infeasible_start():
    scn = small_scenario()
    traj = straight_path(scn)
    q = traj.q.copy()
    q[4] += np.array([200.0, 0.0])
    with pytest.raises(ScenarioError):
        optimize_trajectory(Trajectory(q, traj.h), uniform_power(scn), scn)


def test_optimize_rejects_power_slot_mismatch():
    scn = small_scenario()
    bad = PowerProfile(np.full(scn.num_slots + 1, 0.1))
    with pytest.raises(ScenarioError):
        optimize_trajectory(straight_path(scn), bad, scn)
