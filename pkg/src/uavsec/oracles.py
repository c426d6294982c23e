"""Independent oracles for auditing the solvers.

Every check here re-derives its reference quantity from scratch (direct
formula transcription, grid search, central differences) rather than
calling into the code paths under test, so agreement is evidence and not
tautology.  Reports are plain records; a suite passes when its worst
violation is at most the stated tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import PowerProfile, Scenario, ScenarioError, SlotGains, Trajectory

LN2 = math.log(2.0)

# Desk-scale guard: the grid oracle is exponential-flavored by design.
GRID_ORACLE_MAX_SLOTS = 8
DEFAULT_GRID_STEP_FRAC = 1e-3


class OracleError(ValueError):
    """An oracle was asked to run outside its validity envelope."""


@dataclass
class OracleReport:
    """Outcome of one oracle suite."""

    name: str
    cases: int
    max_violation: float
    tolerance: float
    passed: bool
    worst_case: dict = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.cases} cases, "
                f"max violation {self.max_violation:.3e} "
                f"(tolerance {self.tolerance:.1e})")


# ---------------------------------------------------------------------------
# power schedule oracle
# ---------------------------------------------------------------------------

def power_grid_oracle(gains: SlotGains, scenario: Scenario,
                      grid_step: float | None = None):
    """Grid-exhaustive reference schedule for small instances.

    Discretizes each slot power to multiples of ``grid_step`` (default
    1e-3 * p_peak) and spends the budget one increment at a time on the
    currently most valuable slot.  Because the per-slot rate is concave,
    the increment gains decrease within a slot, so taking the globally
    largest affordable increments is exactly optimal over the grid; the
    continuous optimum exceeds the result by at most the documented
    resolution term (second order in the step plus one budget increment).

    Returns (PowerProfile, average objective).  Refuses instances with
    more than GRID_ORACLE_MAX_SLOTS slots.
    """
    n = gains.num_slots
    if n > GRID_ORACLE_MAX_SLOTS:
        raise OracleError(
            f"grid oracle is desk-scale only (N <= {GRID_ORACLE_MAX_SLOTS})")
    if n != scenario.num_slots:
        raise ScenarioError("gains cover a different slot count than the scenario")
    step = float(grid_step) if grid_step else DEFAULT_GRID_STEP_FRAC * scenario.p_peak
    if step <= 0.0:
        raise OracleError("grid step must be positive")

    m_peak = int(round(scenario.p_peak / step))
    grid = step * np.arange(m_peak + 1)
    # per-slot objective on the grid (bps/Hz, not yet averaged)
    f = (np.log1p(np.outer(gains.a, grid)) - np.log1p(np.outer(gains.b, grid))) / LN2
    inc = np.diff(f, axis=1)  # marginal value of each successive increment

    budget_incs = int(math.floor(n * scenario.p_ave / step + 1e-9))
    flat = inc.ravel()
    order = np.argsort(-flat, kind="stable")[:budget_incs]
    order = order[flat[order] > 0.0]
    counts = np.bincount(order // m_peak, minlength=n)

    p = counts * step
    obj = float(np.sum(f[np.arange(n), counts])) / n
    return PowerProfile(p), obj


def random_power_instance(rng: np.random.Generator, max_slots: int = GRID_ORACLE_MAX_SLOTS):
    """Random desk-scale power-allocation instance.

    Draws a small geometry (1..3 serving nodes and eavesdroppers), random
    hover points for each slot, and random budgets, then evaluates the
    aggregate gains by direct formula.  Advantaged slots arise on natural
    random subsets.  Returns (SlotGains, Scenario).
    """
    k = int(rng.integers(1, 4))
    j = int(rng.integers(1, 4))
    n = int(rng.integers(1, max_slots + 1))
    gn = rng.uniform(-300.0, 300.0, size=(k, 2))
    ev = rng.uniform(-300.0, 300.0, size=(j, 2))
    q = rng.uniform(-300.0, 300.0, size=(n, 2))
    h = rng.uniform(100.0, 300.0, size=n)
    alpha = float(rng.uniform(2.0, 3.0))
    ref = float(rng.uniform(1e4, 1e5))

    a = np.sum(ref * _truth_distance_powers(q, h, gn, alpha) ** -1.0, axis=0)
    b = np.sum(ref * _truth_distance_powers(q, h, ev, alpha) ** -1.0, axis=0)

    p_ave = float(rng.uniform(0.2, 2.0))
    p_peak = p_ave * float(rng.uniform(1.0, 4.0))
    scenario = Scenario(
        gn_positions=gn, eve_positions=ev,
        q_start=(0.0, 0.0), q_end=(0.0, 0.0),
        h_start=200.0, h_end=200.0, h_min=100.0, h_max=300.0,
        v_horiz=50.0, v_up=10.0, v_down=10.0,
        slot_duration=1.0, num_slots=n,
        path_loss_exp=alpha, ref_gain_over_noise=ref,
        p_ave=p_ave, p_peak=p_peak,
    )
    return SlotGains(a, b), scenario


def power_allocation_audit(instances: int = 100, seed: int = 0,
                           grid_step_frac: float = 1e-4,
                           tol: float = 1e-4) -> OracleReport:
    """Closed-form schedule vs grid-search reference on random instances.

    ``max_violation`` is the worst absolute objective gap in bps/Hz.  The
    closed form can only win by floating-point noise (it is exact); the
    grid reference can fall short by at most its resolution term, which at
    ``grid_step_frac`` = 1e-4 sits well inside ``tol``.
    """
    from .power import solve_power

    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_case: dict = {}
    for trial in range(instances):
        gains, scenario = random_power_instance(rng)
        sol = solve_power(gains, scenario)
        _, ref = power_grid_oracle(gains, scenario,
                                   grid_step=grid_step_frac * scenario.p_peak)
        gap = abs(sol.objective - ref)
        if gap > worst:
            worst = gap
            worst_case = {"trial": trial, "num_slots": gains.num_slots,
                          "closed_form": sol.objective, "grid": ref}
    return OracleReport(
        name="power_allocation_audit",
        cases=instances,
        max_violation=worst,
        tolerance=tol,
        passed=bool(worst <= tol),
        worst_case=worst_case,
    )


# ---------------------------------------------------------------------------
# gradient oracle
# ---------------------------------------------------------------------------

def finite_diff_gradient_check(fun, grad, x0: np.ndarray, h_step: float = 1e-5,
                               rel_tol: float = 1e-5) -> OracleReport:
    """Central-difference audit of an analytic gradient.

    Arguments:
        fun: scalar objective of a flat coordinate vector.
        grad: claimed gradient of ``fun``.
        x0: evaluation point (flat).
        h_step: central-difference step in native units.
        rel_tol: per-coordinate relative tolerance.

    Each coordinate error is measured relative to the larger of the two
    gradient magnitudes, with a small absolute floor so coordinates whose
    true derivative vanishes do not divide by noise.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    g = np.asarray(grad(x0), dtype=float).ravel()
    if g.shape != x0.shape:
        raise OracleError("gradient shape does not match the point")

    g_fd = np.empty_like(g)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h_step
        g_fd[i] = (fun(x0 + e) - fun(x0 - e)) / (2.0 * h_step)

    scale = max(1.0, float(np.max(np.abs(g_fd), initial=0.0)),
                float(np.max(np.abs(g), initial=0.0)))
    floor = 1e-10 * scale / rel_tol
    denom = np.maximum(np.maximum(np.abs(g), np.abs(g_fd)), floor)
    err = np.abs(g - g_fd) / denom
    worst = int(np.argmax(err)) if err.size else 0
    violation = float(np.max(err, initial=0.0))
    return OracleReport(
        name="finite_diff_gradient_check",
        cases=int(x0.size),
        max_violation=violation,
        tolerance=rel_tol,
        passed=bool(violation <= rel_tol),
        worst_case={
            "coordinate": worst,
            "analytic": float(g[worst]) if g.size else 0.0,
            "central_diff": float(g_fd[worst]) if g.size else 0.0,
        },
    )


def surrogate_gradient_audit(scenario: Scenario, points: int = 20, seed: int = 0,
                             h_step: float = 1e-5,
                             rel_tol: float = 1e-5) -> OracleReport:
    """Check the reduced-surrogate gradient at random feasible points.

    Each point is a random feasible trajectory/schedule pair; the model is
    expanded there and its analytic gradient compared against central
    differences over every interior coordinate.
    """
    from .sca import ReducedSurrogate, SurrogatePoint

    rng = np.random.default_rng(seed)
    n = scenario.num_slots
    worst = 0.0
    worst_case: dict = {}
    cases = 0
    for trial in range(points):
        traj = random_feasible_trajectory(scenario, rng)
        power = random_feasible_power(scenario, rng)
        point = SurrogatePoint.from_trajectory(traj, scenario)
        model = ReducedSurrogate(point, power, scenario)
        q0, h0 = traj.interior()
        x0 = np.concatenate([q0.ravel(), h0])

        def fun(x):
            return model.value(x[:2 * n].reshape(n, 2), x[2 * n:])

        def grad(x):
            gq, gh = model.gradient(x[:2 * n].reshape(n, 2), x[2 * n:])
            return np.concatenate([gq.ravel(), gh])

        rep = finite_diff_gradient_check(fun, grad, x0, h_step=h_step,
                                         rel_tol=rel_tol)
        cases += rep.cases
        if rep.max_violation > worst:
            worst = rep.max_violation
            worst_case = dict(rep.worst_case, trial=trial)
    return OracleReport(
        name="surrogate_gradient_audit",
        cases=cases,
        max_violation=worst,
        tolerance=rel_tol,
        passed=bool(worst <= rel_tol),
        worst_case=worst_case,
    )


# ---------------------------------------------------------------------------
# surrogate-bound oracle
# ---------------------------------------------------------------------------

def _truth_distance_power(q, h, w, alpha):
    return (float(np.sum((np.asarray(q) - np.asarray(w)) ** 2)) + float(h) ** 2) ** (alpha / 2.0)


def random_feasible_trajectory(scenario: Scenario, rng: np.random.Generator,
                               wobble: float = 0.9) -> Trajectory:
    """Random path satisfying every flight constraint by construction.

    A random-walk detour with endpoint-bridged increments is added to the
    straight constant-speed transit and then scaled so that no per-slot
    displacement or climb/descent limit can be exceeded; the altitude
    detour is additionally scaled into the box.  No projection or solver
    machinery is involved.
    """
    steps = scenario.num_slots + 1
    frac = np.linspace(0.0, 1.0, steps + 1)
    q = scenario.q_start[None, :] + frac[:, None] * (scenario.q_end - scenario.q_start)[None, :]
    h = scenario.h_start + frac * (scenario.h_end - scenario.h_start)

    # horizontal: the straight transit consumes part of the speed budget,
    # the detour may spend the remainder
    straight_step = float(np.linalg.norm(scenario.q_end - scenario.q_start)) / steps
    slack = max(scenario.step_horiz - straight_step, 0.0)
    walk = np.cumsum(rng.normal(size=(steps + 1, 2)), axis=0)
    walk -= frac[:, None] * walk[-1]
    walk[0] = 0.0
    inc = np.linalg.norm(np.diff(walk, axis=0), axis=1)
    biggest = float(np.max(inc, initial=0.0))
    if biggest > 0.0 and slack > 0.0:
        q = q + walk * (wobble * slack / biggest)

    # altitude: bridge a second walk, then scale it into both the rate
    # slack and the box margin
    ramp_step = float(np.max(np.abs(np.diff(h)), initial=0.0))
    slack_h = max(min(scenario.step_up, scenario.step_down) - ramp_step, 0.0)
    walk_h = np.cumsum(rng.normal(size=steps + 1))
    walk_h -= frac * walk_h[-1]
    walk_h[0] = 0.0
    inc_h = float(np.max(np.abs(np.diff(walk_h)), initial=0.0))
    lo_room = float(np.min(h[1:-1] - scenario.h_min, initial=np.inf))
    hi_room = float(np.min(scenario.h_max - h[1:-1], initial=np.inf))
    span = float(np.max(np.abs(walk_h), initial=0.0))
    scale = wobble * min(
        slack_h / inc_h if inc_h > 0.0 else 0.0,
        min(lo_room, hi_room) / span if span > 0.0 else 0.0,
    )
    if np.isfinite(scale) and scale > 0.0:
        h = h + walk_h * scale

    return Trajectory(q, h)


def random_feasible_power(scenario: Scenario, rng: np.random.Generator) -> PowerProfile:
    """Random schedule meeting the peak and average limits."""
    p = rng.uniform(0.0, scenario.p_peak, size=scenario.num_slots)
    mean = float(np.mean(p))
    if mean > scenario.p_ave:
        p *= scenario.p_ave / mean
    return PowerProfile(p)


def _truth_distance_powers(q: np.ndarray, h: np.ndarray, nodes: np.ndarray,
                           alpha: float) -> np.ndarray:
    """distance^alpha of every (node, slot) link, transcribed directly."""
    dx = q[None, :, 0] - nodes[:, 0, None]
    dy = q[None, :, 1] - nodes[:, 1, None]
    return (dx * dx + dy * dy + h[None, :] * h[None, :]) ** (alpha / 2.0)


def surrogate_bound_sampler(scenario: Scenario, samples: int = 1000,
                            seed: int = 0) -> OracleReport:
    """Randomized audit of the two tangent bounds and their tangency.

    Draws random feasible (expansion, evaluation) trajectory pairs plus a
    random feasible schedule and checks, against independently transcribed
    truth formulas, that

      * the eavesdropper tangent never exceeds distance^alpha,
      * the linearized rate never exceeds the exact auxiliary rate,
      * both are exact at the expansion point (1e-9 relative).

    ``max_violation`` is the worst bound excess in native units; tangency
    mismatches are folded in on the same scale after subtracting the
    tolerance they are allowed.
    """
    from .sca import SurrogatePoint, eavesdropper_distance_lb, surrogate_rate

    rng = np.random.default_rng(seed)
    alpha = scenario.path_loss_exp
    tol = 1e-9
    worst = -math.inf
    worst_case: dict = {}
    cases = 0

    def note(value, **ctx):
        nonlocal worst, worst_case
        if value > worst:
            worst = value
            worst_case = dict(ctx, value=float(value))

    for trial in range(samples):
        exp_traj = random_feasible_trajectory(scenario, rng)
        eval_traj = random_feasible_trajectory(scenario, rng)
        power = random_feasible_power(scenario, rng)
        point = SurrogatePoint.from_trajectory(exp_traj, scenario)

        # tangent bound and tangency at one random slot, every eavesdropper
        n = int(rng.integers(1, scenario.num_slots + 1))
        q_e, h_e = eval_traj.q[n], eval_traj.h[n]
        q_m, h_m = exp_traj.q[n], exp_traj.h[n]
        for j in range(scenario.num_eves):
            w = scenario.eve_positions[j]
            lb = eavesdropper_distance_lb(q_e, h_e, (q_m, h_m), w, alpha)
            truth = _truth_distance_power(q_e, h_e, w, alpha)
            note(lb - truth, trial=trial, slot=n, eve=j, kind="distance bound")
            lb_m = eavesdropper_distance_lb(q_m, h_m, (q_m, h_m), w, alpha)
            truth_m = _truth_distance_power(q_m, h_m, w, alpha)
            note(abs(lb_m - truth_m) / max(abs(truth_m), 1.0) - tol,
                 trial=trial, slot=n, eve=j, kind="distance tangency")
            cases += 1

        # linearized rate vs exact auxiliary rate, vectorized over slots
        zq, zh = eval_traj.interior()
        zeta = _truth_distance_powers(zq, zh, scenario.gn_positions, alpha)
        eta = point.eta_local
        c = scenario.ref_gain_over_noise * power.p
        surr = surrogate_rate(zeta, eta, power, point, scenario)
        exact = float(np.mean(np.log2(1.0 + np.sum(c / zeta, axis=0))
                              - np.log2(1.0 + np.sum(c / eta, axis=0))))
        note(surr - exact, trial=trial, kind="rate bound")

        surr_m = surrogate_rate(point.zeta_local, eta, power, point, scenario)
        exact_m = float(np.mean(np.log2(1.0 + np.sum(c / point.zeta_local, axis=0))
                                - np.log2(1.0 + np.sum(c / eta, axis=0))))
        note(abs(surr_m - exact_m) / max(abs(exact_m), 1.0) - tol,
             trial=trial, kind="rate tangency")
        cases += 2

    return OracleReport(
        name="surrogate_bound_sampler",
        cases=cases,
        max_violation=float(worst),
        tolerance=tol,
        passed=bool(worst <= tol),
        worst_case=worst_case,
    )
