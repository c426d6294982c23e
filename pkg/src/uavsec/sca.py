"""Successive convex approximation of the trajectory subproblem.

For a fixed power schedule the per-slot rate is, in the auxiliary variables
zeta_k[n] (serving-link distance^alpha) and eta_j[n] (eavesdropper-link
distance^alpha),

    log2(1 + sum_k c[n]/zeta_k[n]) - log2(1 + sum_j c[n]/eta_j[n]),

with c[n] = ref_gain_over_noise * p[n].  Both log terms are convex in the
distance powers, so around an expansion trajectory we (i) replace the
serving-link term by its tangent plane in zeta (a global lower bound) and
(ii) replace each eavesdropper distance power by its tangent plane in
(q, h), which under-estimates the distance and therefore over-estimates
the leakage.  The result is a concave-in-(q, h) lower bound that touches
the true objective at the expansion point.

The surrogate is strictly decreasing in every zeta and strictly increasing
in every eta, so at the subproblem optimum the auxiliaries sit on their
bounds.  Substituting them out leaves a smooth concave maximization over
the path alone, which is solved by projected gradient ascent with a
backtracking line search; feasibility is restored after every step by
cyclic projection onto the speed, climb/descent, and altitude-box
constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import (
    LN2,
    PowerProfile,
    Scenario,
    ScenarioError,
    Trajectory,
    _rates,
    _sq_dists,
    slot_gains,
    validate_trajectory,
)

# Eavesdropper-distance tangents can cross zero far from the expansion
# point; candidates are rejected (and the step damped) below this floor.
ETA_FLOOR = 1e-6

# Backtracking line search: sufficient-ascent factor and max step halvings.
ARMIJO_SIGMA = 1e-4
MAX_BACKTRACKS = 60

PROJ_TOL = 1e-8
PROJ_MAX_SWEEPS = 2000


@dataclass
class SurrogatePoint:
    """Expansion point of one convex approximation step.

    ``zeta_local[k, n]`` and ``eta_local[j, n]`` cache distance^alpha of
    every link at the expansion trajectory; they must stay consistent with
    ``traj_local`` to 1e-9 relative.
    """

    traj_local: Trajectory
    zeta_local: np.ndarray
    eta_local: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: Trajectory, scenario: Scenario) -> "SurrogatePoint":
        q, h = traj.interior()
        half = scenario.path_loss_exp / 2.0
        return cls(
            traj_local=traj,
            zeta_local=_sq_dists(q, h, scenario.gn_positions) ** half,
            eta_local=_sq_dists(q, h, scenario.eve_positions) ** half,
        )

    def validate(self, scenario: Scenario, rel_tol: float = 1e-9) -> None:
        fresh = SurrogatePoint.from_trajectory(self.traj_local, scenario)
        for got, want, name in ((self.zeta_local, fresh.zeta_local, "zeta_local"),
                                (self.eta_local, fresh.eta_local, "eta_local")):
            err = np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0))
            if err > rel_tol:
                raise ScenarioError(f"{name} inconsistent with expansion trajectory")


def eavesdropper_distance_lb(q, h: float, expansion, w_e, alpha: float) -> float:
    """Tangent-plane lower bound on the eavesdropper distance power.

    Arguments:
        q, h: evaluation position (horizontal (2,), altitude).
        expansion: (q_m, h_m) pair the tangent is anchored at.
        w_e: eavesdropper ground position (2,).
        alpha: path-loss exponent.

    Returns the first-order expansion of (||q - w_e||^2 + h^2)^(alpha/2)
    around the anchor; never exceeds the true value for alpha >= 1.
    """
    q = np.asarray(q, dtype=float)
    w_e = np.asarray(w_e, dtype=float)
    q_m = np.asarray(expansion[0], dtype=float)
    h_m = float(expansion[1])
    s_m = float(np.sum((q_m - w_e) ** 2)) + h_m * h_m
    if s_m <= 0.0:
        raise ScenarioError("tangent anchor collocated with eavesdropper")
    slope = alpha * s_m ** ((alpha - 2.0) / 2.0)
    lin = h_m * (float(h) - h_m) + float(np.dot(q_m - w_e, q - q_m))
    return s_m ** (alpha / 2.0) + slope * lin


def surrogate_rate(zeta: np.ndarray, eta: np.ndarray, power: PowerProfile,
                   point: SurrogatePoint, scenario: Scenario) -> float:
    """Average surrogate secrecy rate at auxiliaries (zeta, eta), bps/Hz.

    The eavesdropper log term is evaluated exactly in ``eta``; the serving
    log term is linearized in ``zeta`` around ``point.zeta_local``.  At
    zeta == zeta_local the value equals the exact auxiliary-variable rate;
    for any (zeta, eta) it never exceeds it.
    """
    c = scenario.ref_gain_over_noise * power.p  # (N,)
    zm = point.zeta_local
    legit_m = np.sum(c / zm, axis=0)
    u = 1.0 + legit_m
    lead = np.log1p(legit_m) / LN2 - np.log1p(np.sum(c / eta, axis=0)) / LN2
    lin = -np.sum((c / (zm * zm)) * (zeta - zm), axis=0) / (LN2 * u)
    return float(np.mean(lead + lin))


class ReducedSurrogate:
    """Concave surrogate of the average rate with auxiliaries eliminated.

    zeta is pinned to the true serving distance power of the evaluation
    point and eta to the eavesdropper tangent plane, which is where the
    subproblem optimum sits.  ``value``/``gradient`` act on interior slot
    arrays; slots with zero power contribute nothing.  ``value`` returns
    -inf whenever a needed tangent drops below ETA_FLOOR, which the line
    search treats as a rejected (over-long) step.
    """

    def __init__(self, point: SurrogatePoint, power: PowerProfile,
                 scenario: Scenario):
        self.alpha = scenario.path_loss_exp
        self.num_slots = scenario.num_slots
        self.gn = scenario.gn_positions
        self.c = scenario.ref_gain_over_noise * np.maximum(power.p, 0.0)
        self.active = self.c > 0.0

        zm = point.zeta_local
        legit_m = np.sum(self.c / zm, axis=0)
        u = 1.0 + legit_m
        # beta[k, n]: weight of the linearized serving term, natural-log scale
        self.beta = self.c / (zm * zm) / (LN2 * u)
        # per-slot constant of the linearization
        self.const = np.log1p(legit_m) / LN2 + np.sum(self.beta * zm, axis=0)

        # affine eavesdropper tangents: e[j, n] = e0 + gx*qx + gy*qy + gh*h
        q_m, h_m = point.traj_local.interior()
        eves = scenario.eve_positions
        s_m = _sq_dists(q_m, h_m, eves)
        slope = self.alpha * s_m ** ((self.alpha - 2.0) / 2.0)
        self.egx = slope * (q_m[None, :, 0] - eves[:, 0, None])
        self.egy = slope * (q_m[None, :, 1] - eves[:, 1, None])
        self.egh = slope * h_m[None, :]
        self.e0 = (s_m ** (self.alpha / 2.0)
                   - self.egx * q_m[None, :, 0]
                   - self.egy * q_m[None, :, 1]
                   - self.egh * h_m[None, :])

    def _eve_tangents(self, q: np.ndarray, h: np.ndarray) -> np.ndarray:
        return (self.e0 + self.egx * q[None, :, 0] + self.egy * q[None, :, 1]
                + self.egh * h[None, :])

    def value(self, q: np.ndarray, h: np.ndarray) -> float:
        """Average surrogate rate of interior positions (N, 2) and (N,)."""
        e = self._eve_tangents(q, h)
        if np.any(e[:, self.active] <= ETA_FLOOR):
            return -math.inf
        z = _sq_dists(q, h, self.gn) ** (self.alpha / 2.0)
        eve = np.log1p(np.sum(self.c / np.maximum(e, ETA_FLOOR), axis=0)) / LN2
        per_slot = self.const - np.sum(self.beta * z, axis=0) - eve
        return float(np.sum(per_slot)) / self.num_slots

    def gradient(self, q: np.ndarray, h: np.ndarray):
        """Gradient of ``value``: arrays (N, 2) and (N,)."""
        s = _sq_dists(q, h, self.gn)
        w = self.beta * self.alpha * s ** ((self.alpha - 2.0) / 2.0)  # (K, N)
        gx = -np.sum(w * (q[None, :, 0] - self.gn[:, 0, None]), axis=0)
        gy = -np.sum(w * (q[None, :, 1] - self.gn[:, 1, None]), axis=0)
        gh = -np.sum(w * h[None, :], axis=0)

        e = self._eve_tangents(q, h)
        e = np.maximum(e, ETA_FLOOR)
        u_e = 1.0 + np.sum(self.c / e, axis=0)
        v = (self.c / (e * e)) / (LN2 * u_e)  # (J, N)
        gx += np.sum(v * self.egx, axis=0)
        gy += np.sum(v * self.egy, axis=0)
        gh += np.sum(v * self.egh, axis=0)

        n = self.num_slots
        return np.stack([gx, gy], axis=1) / n, gh / n


# ---------------------------------------------------------------------------
# feasible-set projection
# ---------------------------------------------------------------------------

def kinematic_violation(q: np.ndarray, h: np.ndarray, scenario: Scenario) -> float:
    """Largest constraint excess of a full path (endpoints included), m."""
    dq = np.linalg.norm(np.diff(q, axis=0), axis=1)
    dh = np.diff(h)
    h_int = h[1:-1]
    return max(
        float(np.max(dq - scenario.step_horiz, initial=0.0)),
        float(np.max(dh - scenario.step_up, initial=0.0)),
        float(np.max(-dh - scenario.step_down, initial=0.0)),
        float(np.max(scenario.h_min - h_int, initial=0.0)),
        float(np.max(h_int - scenario.h_max, initial=0.0)),
    )


def _feasible(q: np.ndarray, h: np.ndarray, scenario: Scenario,
              tol: float) -> bool:
    """Fast boolean version of kinematic_violation (no square roots)."""
    dq = q[1:] - q[:-1]
    lim = scenario.step_horiz + tol
    if np.max(dq[:, 0] ** 2 + dq[:, 1] ** 2, initial=0.0) > lim * lim:
        return False
    dh = h[1:] - h[:-1]
    if np.max(dh, initial=0.0) > scenario.step_up + tol:
        return False
    if np.max(-dh, initial=0.0) > scenario.step_down + tol:
        return False
    h_int = h[1:-1]
    if h_int.size and (h_int.min() < scenario.h_min - tol
                       or h_int.max() > scenario.h_max + tol):
        return False
    return True


def _pair_weights(m: int, parity: int):
    """Lower-point share of each pair correction for one parity class.

    Interior pairs split the correction evenly; a pair touching a pinned
    endpoint pushes the whole correction onto its free point.
    """
    count = len(range(parity, m, 2))
    w = np.full(count, 0.5)
    if parity == 0:
        w[0] = 0.0
    if parity + 2 * (count - 1) + 1 == m:
        w[-1] = 1.0
    return w


def project_kinematics(q: np.ndarray, h: np.ndarray, scenario: Scenario,
                       tol: float = PROJ_TOL,
                       max_sweeps: int = PROJ_MAX_SWEEPS):
    """Cyclic projection onto the flight-constraint set.

    Alternates relaxed projections onto each per-pair speed ball, each
    per-pair climb/descent slab, and the altitude box until the largest
    violation is at most ``tol``.  Endpoint rows never move.  Plain
    alternating projections propagate slack along the step chain one pair
    per sweep and need O(M^2) sweeps on taut paths; the SOR-style
    over-relaxation factor 2/(1+sin(pi/M)) collapses that to O(M).

    Returns (q, h, converged, sweeps).  The sweep count lets callers
    steer their trial steps toward displacements that project cheaply.
    Callers must treat converged=False as a failed projection, never as
    a usable point.
    """
    if _feasible(q, h, scenario, tol):
        return q.copy(), h.copy(), True, 0
    q = q.copy()
    h = h.copy()
    m = q.shape[0] - 1
    omega = 2.0 / (1.0 + math.sin(math.pi / m))
    up, down = scenario.step_up, scenario.step_down
    vmax = scenario.step_horiz
    vmax2 = vmax * vmax
    # each parity class covers disjoint pairs, so the lower/upper rows form
    # strided views that can be updated in place without index arrays
    views = []
    for parity in (0, 1):
        lo_q, hi_q = q[parity:m:2], q[parity + 1:m + 1:2]
        lo_h, hi_h = h[parity:m:2], h[parity + 1:m + 1:2]
        w_lo = _pair_weights(m, parity)
        views.append((lo_q, hi_q, lo_h, hi_h, w_lo[:, None], w_lo,
                      (1.0 - w_lo)[:, None], 1.0 - w_lo))
    h_int = h[1:-1]
    for sweep in range(max_sweeps):
        for lo_q, hi_q, lo_h, hi_h, wl2, wl, wu2, wu in views:
            d = hi_q - lo_q
            dist2 = np.einsum("ij,ij->i", d, d)
            if np.max(dist2, initial=0.0) > vmax2:
                dist = np.sqrt(dist2)
                fac = np.where(dist2 > vmax2,
                               omega * (dist - vmax) / np.maximum(dist, 1e-300),
                               0.0)[:, None]
                corr = fac * d
                lo_q += corr * wl2
                hi_q -= corr * wu2
            dh = hi_h - lo_h
            excess = np.where(dh > up, dh - up,
                              np.where(dh < -down, dh + down, 0.0))
            if excess.any():
                excess *= omega
                lo_h += excess * wl
                hi_h -= excess * wu
        np.clip(h_int, scenario.h_min, scenario.h_max, out=h_int)
        if _feasible(q, h, scenario, tol):
            return q, h, True, sweep + 1
    return q, h, False, max_sweeps


# ---------------------------------------------------------------------------
# subproblem solver
# ---------------------------------------------------------------------------

@dataclass
class _PgaControls:
    pg_tol: float = 1e-6
    max_iters: int = 2000
    proj_tol: float = PROJ_TOL
    proj_max_sweeps: int = PROJ_MAX_SWEEPS


STALL_WINDOW = 20
STALL_GAIN_FRAC = 1e-4
STALL_ABS_FRAC = 1e-6
STEP_GROWTH = 16.0
PROJ_COSTLY_SWEEPS = 512
PGA_SWEEP_BUDGET_FACTOR = 25


def _maximize_surrogate(model: ReducedSurrogate, traj0: Trajectory,
                        scenario: Scenario, ctl: _PgaControls):
    """Projected gradient ascent on the reduced surrogate from traj0.

    Trial steps use the spectral (Barzilai-Borwein) length from the last
    accepted pair, capped at STEP_GROWTH times the last accepted step and
    backtracked until the Armijo condition holds, so every iterate stays
    feasible and the objective is monotone.  Steps whose projection is
    slow (or fails outright) cap all later trial lengths at half their
    own, which keeps the subproblem responsive when the mission time
    barely covers the trip and the constraint chain is taut.  A budget on
    the total projection sweeps spent per subproblem bounds the cost of
    the regime where every step projects slowly but still gains a little;
    the outer loop re-expands and continues from whatever was reached.
    Objective and projected-gradient norm are measured on the slot-summed
    scale (bits and bits per meter) so the stopping threshold does not
    shrink with the mission length.  Returns (q, h, average value).
    """
    n = model.num_slots
    q, h, proj_ok, sweeps = project_kinematics(traj0.q, traj0.h, scenario,
                                               ctl.proj_tol,
                                               ctl.proj_max_sweeps)
    if not proj_ok:
        raise ScenarioError("projection of the expansion trajectory stalled")
    f = model.value(q[1:-1], h[1:-1]) * n
    if not math.isfinite(f):
        raise ScenarioError("surrogate undefined at its own expansion point")
    f0 = f
    hist = [f]
    gq, gh = model.gradient(q[1:-1], h[1:-1])
    gq, gh = gq * n, gh * n
    prev = None  # (q_int, h_int, gq, gh) at the previous accepted iterate
    t_acc = 0.0
    # smallest trial length whose projection failed or ran past
    # PROJ_COSTLY_SWEEPS; staying below half of it keeps near-tangent
    # (time-critical) missions out of the slow projection regime
    t_bad = math.inf
    sweeps_spent = sweeps
    sweep_budget = PGA_SWEEP_BUDGET_FACTOR * ctl.proj_max_sweeps
    for _ in range(ctl.max_iters):
        if sweeps_spent > sweep_budget:
            break
        gnorm = max(float(np.max(np.abs(gq), initial=0.0)),
                    float(np.max(np.abs(gh), initial=0.0)))
        if gnorm == 0.0:
            break
        t = 0.0
        if prev is not None:
            sq = q[1:-1] - prev[0]
            sh = h[1:-1] - prev[1]
            ss = float(np.sum(sq * sq) + np.sum(sh * sh))
            # curvature s.(g_old - g_new) >= 0 because the surrogate is concave
            sy = float(np.sum(sq * (prev[2] - gq)) + np.sum(sh * (prev[3] - gh)))
            if sy > 0.0 and ss > 0.0:
                t = min(max(ss / sy, 1e-14), 1e14)
        if t == 0.0:
            # no curvature info yet: move the fastest coordinate a quarter slot
            t = 0.25 * max(scenario.step_horiz, scenario.step_up, 1e-12) / gnorm
        if t_acc > 0.0:
            # spectral lengths explode near flat directions; growing from the
            # last accepted step bounds the backtracking projections
            t = min(t, STEP_GROWTH * t_acc)
        t = min(t, 0.5 * t_bad)
        q_try = q.copy()
        h_try = h.copy()
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            q_try[1:-1] = q[1:-1] + t * gq
            h_try[1:-1] = h[1:-1] + t * gh
            qc, hc, proj_ok, sweeps = project_kinematics(q_try, h_try,
                                                         scenario,
                                                         ctl.proj_tol,
                                                         ctl.proj_max_sweeps)
            sweeps_spent += sweeps
            if sweeps > PROJ_COSTLY_SWEEPS:
                t_bad = min(t_bad, t)
            if not proj_ok:
                t *= 0.5
                continue
            d2 = float(np.sum((qc - q) ** 2) + np.sum((hc - h) ** 2))
            if d2 == 0.0:
                break  # stationary: shorter steps project to the same point
            fc = model.value(qc[1:-1], hc[1:-1]) * n
            if fc >= f + ARMIJO_SIGMA * d2 / t:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        pg_norm = math.sqrt(d2) / t
        t_acc = t
        prev = (q[1:-1].copy(), h[1:-1].copy(), gq, gh)
        q, h, f = qc, hc, fc
        gq, gh = model.gradient(q[1:-1], h[1:-1])
        gq, gh = gq * n, gh * n
        hist.append(f)
        if pg_norm <= ctl.pg_tol:
            break
        # diminishing returns: the window contributed a negligible share of
        # the subproblem's gain and sits below the outer loop's materiality
        if len(hist) > STALL_WINDOW:
            recent = f - hist[-STALL_WINDOW - 1]
            if recent <= max(STALL_GAIN_FRAC * (f - f0),
                             STALL_ABS_FRAC * (1.0 + abs(f))):
                break
    return q, h, f / n


def sca_step(point: SurrogatePoint, power: PowerProfile, scenario: Scenario,
             solver_cfg=None):
    """One convex-approximation step around ``point``.

    Returns (trajectory, surrogate_objective, stalled).  The trajectory is
    feasible and its surrogate objective never falls below the surrogate
    value at the expansion point; when the subproblem cannot improve at
    all, the expansion trajectory is returned unchanged with stalled True.
    """
    ctl = _PgaControls()
    if solver_cfg is not None:
        ctl = _PgaControls(pg_tol=solver_cfg.pg_tol,
                           max_iters=solver_cfg.pg_max_iters,
                           proj_tol=solver_cfg.proj_tol,
                           proj_max_sweeps=solver_cfg.proj_max_sweeps)
    model = ReducedSurrogate(point, power, scenario)
    q0, h0 = point.traj_local.interior()
    f0 = model.value(q0, h0)
    q, h, f = _maximize_surrogate(model, point.traj_local, scenario, ctl)
    if f < f0:
        return point.traj_local, f0, True
    moved = (float(np.max(np.abs(q - point.traj_local.q))) > 0.0
             or float(np.max(np.abs(h - point.traj_local.h))) > 0.0)
    return Trajectory(q, h), f, not moved


def optimize_trajectory(traj_init: Trajectory, power: PowerProfile,
                        scenario: Scenario, solver_cfg=None):
    """Ascend the true average rate by repeated convex approximation.

    Arguments:
        traj_init: feasible starting path (validated).
        power: fixed per-slot schedule (validated).
        scenario: problem instance.
        solver_cfg: optional SolverConfig carrying the stopping controls.

    Returns (trajectory, trace) where trace[0] is the unclamped average
    rate of the start and trace[m] the value after step m; the sequence is
    non-decreasing up to floating-point noise.
    """
    from .solver import SolverConfig  # local import to avoid a cycle

    cfg = solver_cfg or SolverConfig()
    validate_trajectory(traj_init, scenario)
    if power.p.shape[0] != scenario.num_slots:
        raise ScenarioError("power profile covers a different slot count")

    def true_obj(traj):
        g = slot_gains(traj, scenario)
        return float(np.mean(_rates(g.a, g.b, np.maximum(power.p, 0.0), clamp=False)))

    traj = traj_init
    trace = [true_obj(traj)]
    for _ in range(cfg.sca_max_iters):
        point = SurrogatePoint.from_trajectory(traj, scenario)
        new_traj, _, stalled = sca_step(point, power, scenario, cfg)
        obj = true_obj(new_traj)
        if obj < trace[-1] - 1e-9:
            break  # numerical stall; keep the previous (better) path
        traj = new_traj
        trace.append(obj)
        if stalled:
            break
        if obj - trace[-2] < cfg.sca_rel_tol * max(abs(trace[-2]), 1e-12):
            break
    return traj, np.asarray(trace)
