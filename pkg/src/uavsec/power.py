"""Optimal transmit-power schedule for a fixed flight path.

For a fixed trajectory the per-slot secrecy rate depends only on the two
aggregate gains, and the schedule that maximizes the mission average under
an average and a peak power limit has water-filling structure: slots where
the serving nodes out-hear the eavesdroppers ("advantaged" slots) receive

    p(nu) = clip( stationary_power(a, b, nu), 0, p_peak )

where nu >= 0 prices the average-power budget, and every other slot is
silent.  The price is found by bisection on the budget residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import LN2, PowerProfile, Scenario, ScenarioError, SlotGains, _rates

# Bisection controls: residual tolerance is relative to the total budget.
BISECT_MAX_ITERS = 200
BISECT_RESIDUAL_REL = 1e-10


@dataclass
class PowerSolution:
    """Result of solve_power.

    ``active_slots`` holds 1-based slot labels (matching report output);
    every slot outside it transmits nothing.  ``objective`` is the
    mission-average rate of the schedule in bps/Hz.
    """

    profile: PowerProfile
    multiplier: float
    active_slots: frozenset
    objective: float


def active_slot_set(gains: SlotGains) -> frozenset:
    """1-based labels of the advantaged slots, i.e. where a > b strictly."""
    return frozenset(int(i) + 1 for i in np.flatnonzero(gains.a > gains.b))


def unconstrained_slot_power(a_n: float, b_n: float, nu: float) -> float:
    """Stationary power of one advantaged slot at budget price ``nu``.

    Positive root of  a/(1+a*p) - b/(1+b*p) = nu*ln2,  floored at zero.
    Continuous and non-increasing in nu; hits zero at nu = (a-b)/ln2.
    """
    if not a_n > b_n > 0.0:
        raise ScenarioError("stationary power needs a_n > b_n > 0")
    if not nu > 0.0:
        raise ScenarioError("budget price nu must be positive")
    diff = a_n - b_n
    disc = diff * diff + 4.0 * a_n * b_n * diff / (nu * LN2)
    p = (-(a_n + b_n) + math.sqrt(disc)) / (2.0 * a_n * b_n)
    return max(p, 0.0)


def _capped_powers(a: np.ndarray, b: np.ndarray, nu: float, p_peak: float) -> np.ndarray:
    """Vectorized stationary powers on advantaged slots, peak-capped."""
    diff = a - b
    disc = diff * diff + 4.0 * a * b * diff / (nu * LN2)
    p = (-(a + b) + np.sqrt(disc)) / (2.0 * a * b)
    return np.minimum(np.maximum(p, 0.0), p_peak)


def solve_power(gains: SlotGains, scenario: Scenario) -> PowerSolution:
    """Exact schedule maximizing the average secrecy rate for fixed gains.

    Arguments:
        gains: aggregate per-slot gains of the fixed trajectory.
        scenario: supplies p_ave, p_peak, and the slot count.

    Returns a PowerSolution whose profile satisfies both power limits,
    whose multiplier is the budget price (0 when the average constraint is
    slack), and whose objective equals the clamped and unclamped average
    rate alike (silent slots contribute exactly zero).
    """
    n = gains.num_slots
    if n != scenario.num_slots:
        raise ScenarioError("gains cover a different slot count than the scenario")
    a, b = gains.a, gains.b
    act = a > b
    p = np.zeros(n)
    if not np.any(act):
        return PowerSolution(PowerProfile(p), 0.0, frozenset(), 0.0)

    aa, bb = a[act], b[act]
    budget = n * scenario.p_ave

    if np.count_nonzero(act) * scenario.p_peak <= budget:
        # peak caps alone already respect the average budget: price is zero
        nu = 0.0
        p[act] = scenario.p_peak
    else:
        # bracket: residual > 0 as nu -> 0+, and every power is zero at nu_hi
        nu_lo = 0.0
        nu_hi = float(np.max(aa - bb)) / LN2
        nu = nu_hi
        for _ in range(BISECT_MAX_ITERS):
            nu = 0.5 * (nu_lo + nu_hi)
            residual = float(np.sum(_capped_powers(aa, bb, nu, scenario.p_peak))) - budget
            if abs(residual) <= BISECT_RESIDUAL_REL * budget:
                break
            if residual > 0.0:
                nu_lo = nu
            else:
                nu_hi = nu
        p[act] = _capped_powers(aa, bb, nu, scenario.p_peak)

    obj = float(np.mean(_rates(a, b, p, clamp=False)))
    return PowerSolution(PowerProfile(p), nu, active_slot_set(gains), obj)
