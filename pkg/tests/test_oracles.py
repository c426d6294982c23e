"""The independent reference implementations used to audit the solvers."""

import numpy as np
import pytest

from uavsec import (
    OracleError,
    OracleReport,
    ScenarioError,
    SlotGains,
    finite_diff_gradient_check,
    power_allocation_audit,
    power_grid_oracle,
    random_feasible_power,
    random_feasible_trajectory,
    surrogate_bound_sampler,
    surrogate_gradient_audit,
    validate_power,
    validate_trajectory,
)
from uavsec.oracles import random_power_instance
from uavsec.scenario import LN2

from conftest import small_scenario


def hover_scenario(n: int, p_ave: float = 0.5, p_peak: float = 2.0):
    """Instance whose path is irrelevant; only budgets and slot count matter."""
    return small_scenario(q_start=[0.0, 0.0], q_end=[0.0, 0.0],
                          num_slots=n, p_ave=p_ave, p_peak=p_peak)


# ---------------------------------------------------------------------------
# grid power oracle
# ---------------------------------------------------------------------------

def test_grid_oracle_single_slot_spends_whole_budget():
    scn = hover_scenario(1)
    gains = SlotGains(np.array([2.0]), np.array([1.0]))
    profile, obj = power_grid_oracle(gains, scn, grid_step=1e-4 * scn.p_peak)
    assert profile.p[0] == pytest.approx(0.5, abs=1e-12)
    want = (np.log1p(1.0) - np.log1p(0.5)) / LN2
    assert obj == pytest.approx(want, rel=1e-12)


def test_grid_oracle_splits_symmetric_instance_evenly():
    scn = hover_scenario(2)
    gains = SlotGains(np.array([3.0, 3.0]), np.array([1.0, 1.0]))
    profile, obj = power_grid_oracle(gains, scn)
    assert np.allclose(profile.p, [0.5, 0.5], atol=1e-12)
    want = (np.log1p(1.5) - np.log1p(0.5)) / LN2
    assert obj == pytest.approx(want, rel=1e-12)


def test_grid_oracle_concentrates_on_advantaged_slot():
    scn = hover_scenario(2, p_ave=0.25)
    gains = SlotGains(np.array([5.0, 1.2]), np.array([1.0, 1.0]))
    profile, _ = power_grid_oracle(gains, scn, grid_step=1e-4 * scn.p_peak)
    assert profile.p[0] == pytest.approx(0.5, abs=1e-9)
    assert profile.p[1] == 0.0


def test_grid_oracle_leaves_disadvantaged_slots_silent():
    scn = hover_scenario(2)
    gains = SlotGains(np.array([2.0, 1.0]), np.array([1.0, 2.0]))
    profile, _ = power_grid_oracle(gains, scn)
    assert profile.p[1] == 0.0


def test_grid_oracle_refuses_large_instances():
    scn = hover_scenario(9)
    gains = SlotGains(np.full(9, 2.0), np.full(9, 1.0))
    with pytest.raises(OracleError):
        power_grid_oracle(gains, scn)


def test_grid_oracle_rejects_slot_mismatch():
    scn = hover_scenario(3)
    gains = SlotGains(np.array([2.0, 2.0]), np.array([1.0, 1.0]))
    with pytest.raises(ScenarioError):
        power_grid_oracle(gains, scn)


def test_power_audit_clears_its_tolerance():
    rep = power_allocation_audit(instances=15, seed=1)
    assert rep.passed
    assert rep.cases == 15
    assert rep.max_violation <= rep.tolerance


def test_random_power_instances_are_valid(rng):
    for _ in range(20):
        gains, scn = random_power_instance(rng)
        assert np.all(gains.a > 0.0) and np.all(gains.b > 0.0)
        assert gains.num_slots == scn.num_slots <= 8
        assert 0.0 < scn.p_ave <= scn.p_peak


# ---------------------------------------------------------------------------
# gradient checker
# ---------------------------------------------------------------------------

def test_gradient_check_accepts_a_true_gradient(rng):
    x0 = rng.uniform(-2.0, 2.0, 7)
    rep = finite_diff_gradient_check(lambda x: float(np.sum(np.sin(x))), np.cos, x0)
    assert rep.passed
    assert rep.cases == 7


def test_gradient_check_flags_a_corrupted_gradient(rng):
    x0 = rng.uniform(-2.0, 2.0, 7)
    rep = finite_diff_gradient_check(lambda x: float(np.sum(np.sin(x))),
                                     lambda x: np.cos(x) + 0.01, x0)
    assert not rep.passed
    assert rep.max_violation > rep.tolerance


def test_gradient_check_tolerates_vanishing_gradients():
    rep = finite_diff_gradient_check(lambda x: 7.0, lambda x: np.zeros_like(x),
                                     np.ones(4))
    assert rep.passed


def test_gradient_check_rejects_shape_mismatch():
    with pytest.raises(OracleError):
        finite_diff_gradient_check(lambda x: 0.0, lambda x: np.zeros(3),
                                   np.ones(4))


def test_surrogate_gradient_audit_on_desk_instance():
    scn = small_scenario()
    rep = surrogate_gradient_audit(scn, points=3, seed=0)
    assert rep.passed
    assert rep.cases == 3 * 3 * scn.num_slots


# ---------------------------------------------------------------------------
# bound sampler and feasible samplers
# ---------------------------------------------------------------------------

def test_bound_sampler_on_desk_instance():
    scn = small_scenario()
    rep = surrogate_bound_sampler(scn, samples=50, seed=0)
    assert rep.passed
    assert rep.cases == 50 * (scn.num_eves + 2)


def test_bound_sampler_single_sample_checks_tangency():
    rep = surrogate_bound_sampler(small_scenario(), samples=1, seed=3)
    assert rep.passed
    assert rep.cases == 3


def test_random_trajectories_are_feasible_by_construction(rng):
    for scn in (small_scenario(), small_scenario(h_min=99.0, h_max=101.0),
                small_scenario(v_horiz=200.0 / 9.0 + 1e-6)):
        for _ in range(30):
            traj = random_feasible_trajectory(scn, rng)
            validate_trajectory(traj, scn)
            assert np.array_equal(traj.q[0], scn.q_start)
            assert np.array_equal(traj.q[-1], scn.q_end)


def test_random_power_is_feasible_by_construction(rng):
    scn = small_scenario()
    for _ in range(50):
        validate_power(random_feasible_power(scn, rng), scn)


def test_oracle_report_summary_line():
    rep = OracleReport(name="demo", cases=3, max_violation=0.0,
                       tolerance=1e-6, passed=True)
    line = rep.summary()
    assert line.startswith("PASS demo:")
    assert "3 cases" in line
