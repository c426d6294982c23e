"""Problem instance, line-of-sight channel model, and secrecy-rate evaluation.

A mission lasting ``N * slot_duration`` seconds is discretized into ``N``
slots during which the UAV position is treated as constant.  Flight paths
carry their fixed start/end fixes in-array (length ``N + 2``), so every
kinematic constraint is a check over consecutive pairs with no special
cases.  Per-slot transmit powers and aggregate gains cover the interior
slots only and have length ``N``; slot labels in reports are 1-based.

All functions in this module are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

# Absolute feasibility tolerance (native units) shared by all invariant checks.
FEAS_TOL = 1e-6


class ScenarioError(ValueError):
    """A problem instance or candidate solution violates an invariant."""


def _as_points(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
        raise ScenarioError(f"{name} must be a non-empty (M, 2) array of ground coordinates")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name} contains non-finite coordinates")
    return arr


def _as_xy(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name} must be a finite 2D point")
    return arr


@dataclass
class Scenario:
    """Immutable secrecy-communication problem instance.

    Units are meters, seconds, and watts.  ``ref_gain_over_noise`` is the
    linear channel-power-to-noise ratio measured at the 1 m reference
    distance, so the received SNR of a link of 3D distance ``d`` at power
    ``p`` is ``ref_gain_over_noise * p / d**path_loss_exp``.

    Ground nodes cooperate (their received SNRs add), and eavesdroppers
    collude (theirs add too), which makes the per-slot rate a function of
    the two aggregate gains only.
    """

    gn_positions: np.ndarray   # (K, 2) serving-node ground coordinates
    eve_positions: np.ndarray  # (J, 2) colluding-eavesdropper coordinates
    q_start: np.ndarray        # (2,) horizontal start fix
    q_end: np.ndarray          # (2,) horizontal end fix
    h_start: float
    h_end: float
    h_min: float
    h_max: float
    v_horiz: float             # max horizontal speed, m/s
    v_up: float                # max climb rate, m/s
    v_down: float              # max descent rate, m/s
    slot_duration: float       # s
    num_slots: int
    path_loss_exp: float
    ref_gain_over_noise: float # linear, at 1 m
    p_ave: float               # average transmit-power budget, W
    p_peak: float              # per-slot peak power, W

    def __post_init__(self):
        self.gn_positions = _as_points(self.gn_positions, "gn_positions")
        self.eve_positions = _as_points(self.eve_positions, "eve_positions")
        self.q_start = _as_xy(self.q_start, "q_start")
        self.q_end = _as_xy(self.q_end, "q_end")
        for name in ("h_start", "h_end", "h_min", "h_max", "v_horiz", "v_up",
                     "v_down", "slot_duration", "path_loss_exp",
                     "ref_gain_over_noise", "p_ave", "p_peak"):
            setattr(self, name, float(getattr(self, name)))
        self.num_slots = int(self.num_slots)

        if self.num_slots < 1:
            raise ScenarioError("num_slots must be at least 1")
        if not 0.0 < self.h_min <= self.h_max:
            raise ScenarioError("altitude box violated: need 0 < h_min <= h_max")
        if not (self.h_min - FEAS_TOL <= self.h_start <= self.h_max + FEAS_TOL):
            raise ScenarioError("h_start outside the altitude box [h_min, h_max]")
        if not (self.h_min - FEAS_TOL <= self.h_end <= self.h_max + FEAS_TOL):
            raise ScenarioError("h_end outside the altitude box [h_min, h_max]")
        if not 0.0 < self.p_ave <= self.p_peak:
            raise ScenarioError("power budget violated: need 0 < p_ave <= p_peak")
        if self.path_loss_exp <= 0.0:
            raise ScenarioError("path_loss_exp must be positive")
        if self.ref_gain_over_noise <= 0.0:
            raise ScenarioError("ref_gain_over_noise must be positive")
        if self.slot_duration <= 0.0:
            raise ScenarioError("slot_duration must be positive")
        if min(self.v_horiz, self.v_up, self.v_down) < 0.0:
            raise ScenarioError("speed limits must be non-negative")

        steps = self.num_slots + 1
        if np.linalg.norm(self.q_end - self.q_start) > steps * self.step_horiz + FEAS_TOL:
            raise ScenarioError(
                "kinematic infeasibility: end fix unreachable at max horizontal speed")
        if self.h_end - self.h_start > steps * self.step_up + FEAS_TOL:
            raise ScenarioError(
                "kinematic infeasibility: end altitude unreachable at max climb rate")
        if self.h_start - self.h_end > steps * self.step_down + FEAS_TOL:
            raise ScenarioError(
                "kinematic infeasibility: end altitude unreachable at max descent rate")

        for arr in (self.gn_positions, self.eve_positions, self.q_start, self.q_end):
            arr.setflags(write=False)

    # -- derived quantities ------------------------------------------------

    @property
    def num_gn(self) -> int:
        return self.gn_positions.shape[0]

    @property
    def num_eves(self) -> int:
        return self.eve_positions.shape[0]

    @property
    def step_horiz(self) -> float:
        """Max horizontal displacement per slot, m."""
        return self.v_horiz * self.slot_duration

    @property
    def step_up(self) -> float:
        return self.v_up * self.slot_duration

    @property
    def step_down(self) -> float:
        return self.v_down * self.slot_duration

    @property
    def duration(self) -> float:
        return self.num_slots * self.slot_duration


@dataclass
class Trajectory:
    """Discrete flight path with both fixed endpoints stored in-array.

    ``q`` has shape ``(N + 2, 2)`` and ``h`` shape ``(N + 2,)``; rows 0 and
    ``N + 1`` are the start/end fixes, rows ``1..N`` the slot positions.
    """

    q: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.q = np.array(self.q, dtype=float)
        self.h = np.array(self.h, dtype=float).reshape(-1)
        if self.q.ndim != 2 or self.q.shape[1] != 2 or self.q.shape[0] < 3:
            raise ScenarioError("trajectory q must have shape (N + 2, 2) with N >= 1")
        if self.h.shape[0] != self.q.shape[0]:
            raise ScenarioError("trajectory h length must match q")

    @property
    def num_slots(self) -> int:
        return self.q.shape[0] - 2

    def interior(self) -> tuple[np.ndarray, np.ndarray]:
        """Slot positions without the endpoint fixes: ((N, 2), (N,))."""
        return self.q[1:-1], self.h[1:-1]

    def copy(self) -> "Trajectory":
        return Trajectory(self.q.copy(), self.h.copy())


def validate_trajectory(traj: Trajectory, scenario: Scenario, tol: float = FEAS_TOL) -> None:
    """Raise ScenarioError unless ``traj`` satisfies every flight constraint.

    Checks endpoint pinning, per-slot speed limits (horizontal, climb,
    descent) over all N + 1 consecutive pairs, and the altitude box on the
    interior slots, each to absolute tolerance ``tol``.
    """
    if traj.num_slots != scenario.num_slots:
        raise ScenarioError(
            f"trajectory has {traj.num_slots} slots, scenario expects {scenario.num_slots}")
    if (np.linalg.norm(traj.q[0] - scenario.q_start) > tol
            or abs(traj.h[0] - scenario.h_start) > tol):
        raise ScenarioError("trajectory start fix moved")
    if (np.linalg.norm(traj.q[-1] - scenario.q_end) > tol
            or abs(traj.h[-1] - scenario.h_end) > tol):
        raise ScenarioError("trajectory end fix moved")

    dq = np.linalg.norm(np.diff(traj.q, axis=0), axis=1)
    if np.max(dq) > scenario.step_horiz + tol:
        raise ScenarioError(
            f"horizontal speed limit exceeded: step {np.max(dq):.6f} m "
            f"> {scenario.step_horiz:.6f} m")
    dh = np.diff(traj.h)
    if np.max(dh, initial=0.0) > scenario.step_up + tol:
        raise ScenarioError("climb-rate limit exceeded")
    if np.max(-dh, initial=0.0) > scenario.step_down + tol:
        raise ScenarioError("descent-rate limit exceeded")
    h_int = traj.h[1:-1]
    if np.min(h_int) < scenario.h_min - tol or np.max(h_int) > scenario.h_max + tol:
        raise ScenarioError("altitude box violated on interior slots")


@dataclass
class PowerProfile:
    """Per-slot transmit powers in watts, length N (interior slots only)."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.array(self.p, dtype=float).reshape(-1)
        if self.p.shape[0] < 1:
            raise ScenarioError("power profile must cover at least one slot")


def validate_power(power: PowerProfile, scenario: Scenario, tol: float = FEAS_TOL) -> None:
    """Raise ScenarioError unless the schedule meets both power limits."""
    if power.p.shape[0] != scenario.num_slots:
        raise ScenarioError(
            f"power profile has {power.p.shape[0]} slots, scenario expects "
            f"{scenario.num_slots}")
    if np.min(power.p) < -tol:
        raise ScenarioError("negative transmit power")
    if np.max(power.p) > scenario.p_peak + tol:
        raise ScenarioError("peak power limit exceeded")
    if float(np.mean(power.p)) > scenario.p_ave + tol:
        raise ScenarioError("average power budget exceeded")


@dataclass
class SlotGains:
    """Aggregate channel-power-to-noise ratios per slot (1/W), length N.

    ``a`` sums the serving-node gains (cooperation via ratio combining),
    ``b`` sums the eavesdropper gains (collusion).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.array(self.a, dtype=float).reshape(-1)
        self.b = np.array(self.b, dtype=float).reshape(-1)
        if self.a.shape != self.b.shape or self.a.shape[0] < 1:
            raise ScenarioError("gain arrays must be equal-length and non-empty")
        if np.min(self.a) <= 0.0 or np.min(self.b) <= 0.0:
            raise ScenarioError("aggregate gains must be strictly positive")

    @property
    def num_slots(self) -> int:
        return self.a.shape[0]


# ---------------------------------------------------------------------------
# channel model
# ---------------------------------------------------------------------------

def channel_gain(uav_q, uav_h: float, ground_w, scenario: Scenario) -> float:
    """Line-of-sight channel-power-to-noise ratio of one link, 1/W.

    Arguments:
        uav_q: horizontal UAV position (2,), m.
        uav_h: UAV altitude, m.
        ground_w: ground-node position (2,), m.
        scenario: supplies path_loss_exp and ref_gain_over_noise.

    Returns ``ref_gain_over_noise / d**path_loss_exp`` where ``d`` is the
    3D distance.  Raises ScenarioError at zero distance (singular link).
    """
    uav_q = np.asarray(uav_q, dtype=float)
    ground_w = np.asarray(ground_w, dtype=float)
    d2 = float(np.sum((uav_q - ground_w) ** 2)) + float(uav_h) ** 2
    if d2 <= 0.0:
        raise ScenarioError("singular link: UAV collocated with ground node")
    return scenario.ref_gain_over_noise / d2 ** (scenario.path_loss_exp / 2.0)


def _sq_dists(q: np.ndarray, h: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Squared 3D distances, shape (len(nodes), len(q))."""
    dx = q[None, :, 0] - nodes[:, 0, None]
    dy = q[None, :, 1] - nodes[:, 1, None]
    return dx * dx + dy * dy + h[None, :] ** 2


def _gain_sum(q: np.ndarray, h: np.ndarray, nodes: np.ndarray,
              scenario: Scenario) -> np.ndarray:
    d2 = _sq_dists(q, h, nodes)
    return scenario.ref_gain_over_noise * np.sum(
        d2 ** (-scenario.path_loss_exp / 2.0), axis=0)


def slot_gains(traj: Trajectory, scenario: Scenario) -> SlotGains:
    """Aggregate serving and eavesdropping gains on the interior slots."""
    q, h = traj.interior()
    if np.any(_sq_dists(q, h, scenario.gn_positions) <= 0.0) or np.any(
            _sq_dists(q, h, scenario.eve_positions) <= 0.0):
        raise ScenarioError("singular link: UAV collocated with ground node")
    return SlotGains(
        a=_gain_sum(q, h, scenario.gn_positions, scenario),
        b=_gain_sum(q, h, scenario.eve_positions, scenario),
    )


# ---------------------------------------------------------------------------
# secrecy rate
# ---------------------------------------------------------------------------

def _rates(a: np.ndarray, b: np.ndarray, p: np.ndarray, clamp: bool) -> np.ndarray:
    # natural logs once, one shared 1/ln2 conversion
    r = (np.log1p(a * p) - np.log1p(b * p)) / LN2
    return np.maximum(r, 0.0) if clamp else r


def secrecy_rate_per_slot(gains: SlotGains, power: PowerProfile,
                          clamp: bool = True) -> np.ndarray:
    """Per-slot secrecy rate in bps/Hz.

    With ``clamp`` the disadvantaged slots are floored at zero (the rate a
    real system would achieve); without it the raw difference of the two
    log terms is returned, which is the quantity the solvers ascend.
    """
    if gains.num_slots != power.p.shape[0]:
        raise ScenarioError("gains and power cover different slot counts")
    if np.min(power.p) < -FEAS_TOL:
        raise ScenarioError("negative transmit power")
    return _rates(gains.a, gains.b, np.maximum(power.p, 0.0), clamp)


def average_secrecy_rate(traj: Trajectory, power: PowerProfile,
                         scenario: Scenario, clamp: bool = True) -> float:
    """Mission-average secrecy rate of a (trajectory, power) pair, bps/Hz."""
    gains = slot_gains(traj, scenario)
    return float(np.mean(secrecy_rate_per_slot(gains, power, clamp=clamp)))
