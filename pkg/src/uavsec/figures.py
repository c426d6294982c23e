"""Report figures rendered next to the delimited output files."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

_SCHEME_STYLE = {
    "joint3d": ("tab:blue", "-"),
    "joint2d": ("tab:orange", "--"),
    "fhf_adaptive": ("tab:green", "-."),
    "fhf_constant": ("tab:red", ":"),
}


def _style(scheme):
    return _SCHEME_STYLE.get(scheme, ("tab:gray", "-"))


def _scatter_ground(ax, scenario):
    gn = scenario.gn_positions
    ev = scenario.eve_positions
    ax.scatter(gn[:, 0], gn[:, 1], marker="^", c="tab:green", s=60,
               label="ground node", zorder=5)
    ax.scatter(ev[:, 0], ev[:, 1], marker="x", c="tab:red", s=60,
               label="eavesdropper", zorder=5)


def render_report_figures(out_dir, results, parameter: str) -> list:
    """Write the standard report figures for a batch of solved cells.

    Produces a convergence-trace figure for the alternating schemes, a
    horizontal-trajectory map, altitude and power profiles over time, and,
    when more than one sweep value is present, the average secrecy rate
    versus the swept parameter.  Returns the list of written paths.
    """
    out = Path(out_dir)
    written = []

    joint = [r for r in results if r.scheme in ("joint3d", "joint2d")]
    if joint:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for r in joint:
            color, ls = _style(r.scheme)
            trace = r.report.objective_trace
            ax.plot(range(1, len(trace) + 1), trace, color=color, ls=ls,
                    marker="o", ms=3,
                    label=f"{r.scheme}, {parameter}={r.value:g}")
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("average secrecy rate (bps/Hz)")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / "fig_convergence.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    lead = "joint3d" if any(r.scheme == "joint3d" for r in results) else results[0].scheme
    lead_cells = [r for r in results if r.scheme == lead]
    if lead_cells:
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for r in lead_cells:
            q = r.report.trajectory.q
            ax.plot(q[:, 0], q[:, 1], lw=1.5, label=f"{parameter}={r.value:g}")
        _scatter_ground(ax, lead_cells[0].scenario)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_title(f"horizontal trajectory ({lead})")
        ax.axis("equal")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / "fig_trajectory.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

        fig, (ax_h, ax_p) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
        for r in lead_cells:
            n = r.scenario.num_slots
            t = (1 + np.arange(n)) * r.scenario.slot_duration
            ax_h.plot(t, r.report.per_slot["h"], lw=1.5,
                      label=f"{parameter}={r.value:g}")
            ax_p.plot(t, r.report.per_slot["p"], lw=1.5)
        ax_h.set_ylabel("altitude (m)")
        ax_h.grid(alpha=0.3)
        ax_h.legend(fontsize=8)
        ax_p.set_ylabel("transmit power (W)")
        ax_p.set_xlabel("time (s)")
        ax_p.grid(alpha=0.3)
        fig.tight_layout()
        path = out / "fig_altitude_power.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    values = sorted({r.value for r in results})
    if len(values) > 1:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for scheme in dict.fromkeys(r.scheme for r in results):
            pts = sorted((r.value, r.report.objective)
                         for r in results if r.scheme == scheme)
            color, ls = _style(scheme)
            ax.plot([v for v, _ in pts], [o for _, o in pts], color=color,
                    ls=ls, marker="o", ms=4, label=scheme)
        ax.set_xlabel(parameter)
        ax.set_ylabel("average secrecy rate (bps/Hz)")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / f"fig_rate_vs_{parameter}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    return written
