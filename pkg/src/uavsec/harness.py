"""Experiment configuration and batch reporting.

Experiment files are YAML documents (the one canonical encoding used for
both reading and emission): a ``scenario`` mapping in configuration units
(powers in dBm, reference gain in dB), a scheme list, optional ``sweep``
and ``emit`` blocks, and an output directory.  Unknown keys anywhere are
rejected.  ``run_experiment`` solves every (scheme, sweep value) cell,
audits feasibility of every emitted pair, and writes per-slot CSVs, a
combined summary, convergence traces, and report figures.
"""

from __future__ import annotations

import csv
import importlib.resources
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .scenario import Scenario, ScenarioError
from .solver import SCHEMES, SolverConfig, solve_joint

#: Sweepable parameters: CLI/spec name -> scenario-config field.
SWEEP_PARAMETERS = {
    "T": "mission_duration_s",
    "alpha": "path_loss_exp",
    "p_ave_dbm": "p_ave_dbm",
}


class SpecError(ValueError):
    """An experiment document is malformed or violates an invariant."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass
class ScenarioConfig:
    """Scenario block in configuration units (dBm / dB / seconds)."""

    gn_positions: list
    eve_positions: list
    q_start: list
    q_end: list
    h_start: float
    h_end: float
    h_min: float
    h_max: float
    v_horiz: float
    v_up: float
    v_down: float
    slot_duration: float
    mission_duration_s: float
    path_loss_exp: float
    ref_gain_over_noise_db: float
    p_ave_dbm: float
    p_peak_dbm: float

    def num_slots(self) -> int:
        return int(round(self.mission_duration_s / self.slot_duration))

    def to_scenario(self, **overrides) -> Scenario:
        """Convert to solver units, applying sweep overrides first."""
        cfg = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in overrides.items():
            if key not in cfg:
                raise SpecError(f"unknown scenario override {key!r}")
            cfg[key] = value
        n = int(round(cfg["mission_duration_s"] / cfg["slot_duration"]))
        if n < 1:
            raise SpecError("mission_duration_s must cover at least one slot")
        try:
            return Scenario(
                gn_positions=cfg["gn_positions"],
                eve_positions=cfg["eve_positions"],
                q_start=cfg["q_start"],
                q_end=cfg["q_end"],
                h_start=cfg["h_start"],
                h_end=cfg["h_end"],
                h_min=cfg["h_min"],
                h_max=cfg["h_max"],
                v_horiz=cfg["v_horiz"],
                v_up=cfg["v_up"],
                v_down=cfg["v_down"],
                slot_duration=cfg["slot_duration"],
                num_slots=n,
                path_loss_exp=cfg["path_loss_exp"],
                ref_gain_over_noise=db_to_linear(cfg["ref_gain_over_noise_db"]),
                p_ave=dbm_to_watts(cfg["p_ave_dbm"]),
                p_peak=dbm_to_watts(cfg["p_peak_dbm"]),
            )
        except ScenarioError as exc:
            raise SpecError(str(exc)) from exc


@dataclass
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float

    def values(self) -> list:
        if self.step <= 0.0:
            raise SpecError("sweep step must be positive")
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if count < 1:
            raise SpecError("empty sweep range")
        return [self.start + i * self.step for i in range(count)]


@dataclass
class EmitFlags:
    per_slot_csv: bool = True
    summary: bool = True
    trace: bool = True


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    sweep: SweepSpec | None = None
    emit: EmitFlags = field(default_factory=EmitFlags)
    output_dir: str = "results"


def _check_keys(mapping: dict, allowed, where: str) -> None:
    if not isinstance(mapping, dict):
        raise SpecError(f"{where} must be a mapping")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise SpecError(f"unknown key(s) in {where}: {sorted(unknown)}")


def loads_spec(text: str) -> ExperimentSpec:
    """Parse and validate an experiment document from a string."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"unparseable experiment document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("experiment document must be a key-value mapping")
    _check_keys(doc, {"scenario", "schemes", "sweep", "emit", "output_dir"},
                "experiment document")
    if "scenario" not in doc:
        raise SpecError("experiment document lacks the scenario block")

    scn_fields = [f.name for f in fields(ScenarioConfig)]
    _check_keys(doc["scenario"], scn_fields, "scenario")
    missing = set(scn_fields) - set(doc["scenario"])
    if missing:
        raise SpecError(f"scenario block lacks key(s): {sorted(missing)}")
    scenario = ScenarioConfig(**doc["scenario"])

    schemes = doc.get("schemes", list(SCHEMES))
    if not isinstance(schemes, list) or not schemes:
        raise SpecError("schemes must be a non-empty list")
    for s in schemes:
        if s not in SCHEMES:
            raise SpecError(f"unknown scheme {s!r}; expected one of {list(SCHEMES)}")

    sweep = None
    if doc.get("sweep") is not None:
        _check_keys(doc["sweep"], {"parameter", "start", "stop", "step"}, "sweep")
        try:
            sweep = SweepSpec(**{k: doc["sweep"][k]
                                 for k in ("parameter", "start", "stop", "step")})
        except KeyError as exc:
            raise SpecError(f"sweep block lacks key {exc}") from exc
        if sweep.parameter not in SWEEP_PARAMETERS:
            raise SpecError(
                f"unknown sweep parameter {sweep.parameter!r}; "
                f"expected one of {sorted(SWEEP_PARAMETERS)}")
        sweep.values()  # validates the range

    emit = EmitFlags()
    if doc.get("emit") is not None:
        _check_keys(doc["emit"], {"per_slot_csv", "summary", "trace"}, "emit")
        emit = EmitFlags(**{k: bool(v) for k, v in doc["emit"].items()})

    output_dir = doc.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        raise SpecError("output_dir must be a non-empty string")

    spec = ExperimentSpec(scenario=scenario, schemes=list(schemes), sweep=sweep,
                          emit=emit, output_dir=output_dir)
    spec.scenario.to_scenario()  # surface scenario invariant violations now
    return spec


def load_spec(path) -> ExperimentSpec:
    """Load and validate an experiment document from a file."""
    p = Path(path)
    if not p.exists():
        raise SpecError(f"experiment document not found: {p}")
    return loads_spec(p.read_text())


def emit_spec(spec: ExperimentSpec) -> str:
    """Canonical encoding; ``loads_spec(emit_spec(s))`` reproduces ``s``."""
    doc = {
        "scenario": {f.name: getattr(spec.scenario, f.name)
                     for f in fields(ScenarioConfig)},
        "schemes": list(spec.schemes),
        "sweep": None if spec.sweep is None else {
            "parameter": spec.sweep.parameter,
            "start": spec.sweep.start,
            "stop": spec.sweep.stop,
            "step": spec.sweep.step,
        },
        "emit": {
            "per_slot_csv": spec.emit.per_slot_csv,
            "summary": spec.emit.summary,
            "trace": spec.emit.trace,
        },
        "output_dir": spec.output_dir,
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def default_spec_path() -> Path:
    """Path of the experiment document shipped with the package."""
    return Path(importlib.resources.files("uavsec") / "data" / "default_spec.yaml")


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.9g" % float(x)


PER_SLOT_COLUMNS = ("slot", "time_s", "x_m", "y_m", "h_m", "p_w",
                    "a_per_w", "b_per_w", "rate_bpshz")

SUMMARY_COLUMNS = ("scheme", "sweep_parameter", "sweep_value",
                   "avg_secrecy_rate_bpshz", "outer_iters", "converged",
                   "wall_time_s")


def _cell_tag(scheme: str, parameter: str, value: float) -> str:
    return f"{scheme}_{parameter}{_fmt(value)}"


def _write_per_slot(path: Path, report, scenario) -> None:
    q, h = report.trajectory.interior()
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_SLOT_COLUMNS)
        for i in range(scenario.num_slots):
            writer.writerow([
                str(i + 1),
                _fmt((i + 1) * scenario.slot_duration),
                _fmt(q[i, 0]),
                _fmt(q[i, 1]),
                _fmt(h[i]),
                _fmt(report.per_slot["p"][i]),
                _fmt(report.per_slot["a"][i]),
                _fmt(report.per_slot["b"][i]),
                _fmt(report.per_slot["rate"][i]),
            ])


def _write_trace(path: Path, report) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outer_iter", "avg_secrecy_rate_bpshz"])
        for i, v in enumerate(report.objective_trace, start=1):
            writer.writerow([str(i), _fmt(v)])


@dataclass
class CellResult:
    scheme: str
    parameter: str
    value: float
    scenario: Scenario
    report: object


def run_experiment(spec: ExperimentSpec, solver_cfg: SolverConfig | None = None,
                   out_dir=None, figures: bool = True, quiet: bool = False):
    """Solve every (scheme, sweep value) cell and write the report tree.

    Returns (exit_code, cell_results): 0 when every cell solved, 1 when
    any cell failed (failures are listed in ``errors.log`` and the other
    cells still run).  Solver outputs are deterministic, so re-running a
    spec reproduces identical per-slot files.
    """
    out = Path(out_dir) if out_dir is not None else Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if spec.sweep is not None:
        parameter = spec.sweep.parameter
        values = spec.sweep.values()
    else:
        parameter = "T"
        values = [spec.scenario.mission_duration_s]
    override_field = SWEEP_PARAMETERS[parameter]

    results: list[CellResult] = []
    failures: list[tuple[str, float, str]] = []
    summary_rows: list[list[str]] = []

    for value in values:
        for scheme in spec.schemes:
            tag = _cell_tag(scheme, parameter, value)
            try:
                scenario = spec.scenario.to_scenario(**{override_field: value})
                report = solve_joint(scenario, solver_cfg, scheme)
            except Exception as exc:  # noqa: BLE001 - cell isolation by design
                failures.append((scheme, value, f"{type(exc).__name__}: {exc}"))
                if not quiet:
                    print(f"FAIL {tag}: {exc}")
                continue
            results.append(CellResult(scheme, parameter, value, scenario, report))
            summary_rows.append([
                scheme, parameter, _fmt(value), _fmt(report.objective),
                _fmt(report.outer_iters), _fmt(report.converged),
                _fmt(report.wall_time_s),
            ])
            if spec.emit.per_slot_csv:
                _write_per_slot(out / f"slots_{tag}.csv", report, scenario)
            if spec.emit.trace:
                _write_trace(out / f"trace_{tag}.csv", report)
            if not quiet:
                print(f"done {tag}: avg secrecy rate "
                      f"{report.objective:.6f} bps/Hz in {report.outer_iters} "
                      f"outer iters ({report.wall_time_s:.1f} s)")

    if spec.emit.summary:
        with (out / "summary.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            writer.writerows(summary_rows)

    if failures:
        with (out / "errors.log").open("w") as fh:
            for scheme, value, msg in failures:
                fh.write(f"{scheme} {parameter}={_fmt(value)}: {msg}\n")

    if figures and results:
        from .figures import render_report_figures

        render_report_figures(out, results, parameter)

    return (1 if failures else 0), results
