"""Command-line interface: ``uavsec optimize`` and ``uavsec verify``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

import yaml

from .harness import SpecError, SweepSpec, SWEEP_PARAMETERS, load_spec, run_experiment
from .oracles import (
    power_allocation_audit,
    surrogate_bound_sampler,
    surrogate_gradient_audit,
)
from .solver import SCHEMES, SolverConfig

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_SPEC_ERROR = 2


def _parse_sweep(text: str) -> SweepSpec:
    try:
        name, _, rng = text.partition("=")
        start, stop, step = (float(x) for x in rng.split(":"))
    except ValueError as exc:
        raise SpecError(
            f"malformed sweep {text!r}; expected NAME=start:stop:step") from exc
    if name not in SWEEP_PARAMETERS:
        raise SpecError(f"unknown sweep parameter {name!r}; "
                        f"expected one of {sorted(SWEEP_PARAMETERS)}")
    return SweepSpec(parameter=name, start=start, stop=stop, step=step)


def _load_solver_config(path) -> SolverConfig:
    try:
        doc = yaml.safe_load(open(path).read()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise SpecError(f"unreadable solver config {path}: {exc}") from exc
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(doc) - known
    if unknown:
        raise SpecError(f"unknown solver config key(s): {sorted(unknown)}")
    return SolverConfig(**doc)


def _cmd_optimize(args) -> int:
    spec = load_spec(args.spec)
    if args.scheme:
        spec.schemes = list(dict.fromkeys(args.scheme))
    if args.sweep:
        spec.sweep = _parse_sweep(args.sweep)
        spec.sweep.values()
    cfg = _load_solver_config(args.solver_config) if args.solver_config else None
    code, _ = run_experiment(spec, solver_cfg=cfg, out_dir=args.out,
                             figures=not args.no_figures, quiet=args.quiet)
    return code


def _cmd_verify(args) -> int:
    """Run the oracle suites against the document's scenario and print reports."""
    spec = load_spec(args.spec)
    scenario = spec.scenario.to_scenario()
    reports = [
        power_allocation_audit(instances=args.power_instances, seed=args.seed),
        surrogate_bound_sampler(scenario, samples=args.samples, seed=args.seed),
        surrogate_gradient_audit(scenario, points=args.gradient_points,
                                 seed=args.seed),
    ]
    ok = True
    for rep in reports:
        print(rep.summary())
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_PARTIAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uavsec",
        description="Secrecy-rate-maximizing UAV trajectory and power planning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="solve an experiment and write reports")
    p_opt.add_argument("--spec", required=True, help="experiment document (YAML)")
    p_opt.add_argument("--out", required=True, help="output directory")
    p_opt.add_argument("--scheme", action="append", choices=SCHEMES,
                       help="restrict to a scheme (repeatable)")
    p_opt.add_argument("--sweep", help="parameter sweep, e.g. T=40:80:5")
    p_opt.add_argument("--solver-config", help="YAML file with SolverConfig fields")
    p_opt.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p_opt.add_argument("--no-figures", action="store_true",
                       help="skip rendering report figures")
    p_opt.set_defaults(func=_cmd_optimize)

    p_ver = sub.add_parser("verify", help="run the oracle suites on a spec")
    p_ver.add_argument("--spec", required=True, help="experiment document (YAML)")
    p_ver.add_argument("--samples", type=int, default=200,
                       help="surrogate-bound sample count")
    p_ver.add_argument("--power-instances", type=int, default=50,
                       help="power-allocation audit instance count")
    p_ver.add_argument("--gradient-points", type=int, default=5,
                       help="gradient audit point count")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR


if __name__ == "__main__":
    sys.exit(main())
