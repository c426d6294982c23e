"""Shared fixtures.

The reference experiment ships with the package; solving it is expensive
(minutes across all schemes and mission durations), so every solve the
suite needs is cached in a session-scoped fixture and shared between the
unit tests and the acceptance checks.
"""

import numpy as np
import pytest

from uavsec import Scenario, default_spec_path, load_spec, solve_joint


def small_scenario(**overrides) -> Scenario:
    """Fast desk-scale instance: one GN ahead of the corridor, one
    eavesdropper behind it, eight slots."""
    params = dict(
        gn_positions=[[0.0, 120.0]],
        eve_positions=[[0.0, -150.0]],
        q_start=[-100.0, 0.0],
        q_end=[100.0, 0.0],
        h_start=100.0,
        h_end=100.0,
        h_min=80.0,
        h_max=150.0,
        v_horiz=30.0,
        v_up=5.0,
        v_down=5.0,
        slot_duration=1.0,
        num_slots=8,
        path_loss_exp=2.0,
        ref_gain_over_noise=1e5,
        p_ave=0.5,
        p_peak=2.0,
    )
    params.update(overrides)
    return Scenario(**params)


@pytest.fixture(scope="session")
def ref_spec():
    return load_spec(default_spec_path())


@pytest.fixture(scope="session")
def ref_scenario(ref_spec):
    """The shipped reference scenario at its 60 s mission duration."""
    return ref_spec.scenario.to_scenario()


@pytest.fixture(scope="session")
def t60_reports(ref_scenario):
    """All four schemes solved on the 60 s reference scenario."""
    return {scheme: solve_joint(ref_scenario, scheme=scheme)
            for scheme in ("joint3d", "joint2d", "fhf_adaptive", "fhf_constant")}


@pytest.fixture(scope="session")
def t45_t50_reports(ref_spec):
    out = {}
    for t in (45.0, 50.0):
        scn = ref_spec.scenario.to_scenario(mission_duration_s=t)
        out[t] = solve_joint(scn, scheme="joint3d")
    return out


@pytest.fixture(scope="session")
def t40_reports(ref_spec):
    """Minimal-duration mission (straight-flight time): three schemes."""
    scn = ref_spec.scenario.to_scenario(mission_duration_s=40.0)
    return {scheme: solve_joint(scn, scheme=scheme)
            for scheme in ("joint3d", "joint2d", "fhf_adaptive")}


@pytest.fixture(scope="session")
def degenerate_altitude_reports(ref_spec):
    """Reference scenario with the altitude box collapsed to 200 m."""
    scn = ref_spec.scenario.to_scenario(h_min=200.0, h_max=200.0)
    return {scheme: solve_joint(scn, scheme=scheme)
            for scheme in ("joint3d", "joint2d")}


@pytest.fixture
def rng():
    return np.random.default_rng(0)
