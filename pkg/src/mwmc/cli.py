"""``mcsweep``: phase-transition sweeps from the command line."""

import argparse
import json
import sys

import numpy as np

from .bounds import bound_report
from .experiments import (ANGLE_PRESETS, METHOD_ALIASES, ScenarioConfig, SweepConfig,
                          aggregate, build_projectors, gen_scenario, method_weights,
                          nonconvergence_rate, phase_transition_point, run_sweep, write_csv)
from .solver import SolverConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


def parse_grid(text):
    """``"a:b:step"`` (inclusive of ``b``) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) != 3:
                raise ConfigError(f"grid {text!r} must be start:stop:step")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ConfigError(f"grid {text!r} is empty")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + k * step, 10) for k in range(count)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse grid {text!r}") from exc
    if not values:
        raise ConfigError("empty p grid")
    return tuple(values)


def parse_angles(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse angles {text!r}") from exc


def parse_methods(text):
    out = []
    for name in text.split(","):
        name = name.strip()
        if name not in METHOD_ALIASES:
            raise ConfigError(f"unknown method {name!r}")
        full = METHOD_ALIASES[name]
        if full not in out:
            out.append(full)
    return tuple(out)


def build_parser():
    ap = argparse.ArgumentParser(prog="mcsweep", description=__doc__)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--rank", type=int, default=4)
    ap.add_argument("--rprime", type=int, default=8)
    ap.add_argument("--angles-preset", choices=sorted(ANGLE_PRESETS))
    ap.add_argument("--angles-u", help="comma-separated principal angles in degrees")
    ap.add_argument("--angles-v", help="comma-separated principal angles in degrees")
    ap.add_argument("--perturbation", type=float, default=None,
                    help="build priors from X + N with this noise standard deviation")
    ap.add_argument("--p-grid", default="0.1:0.9:0.05")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--methods", default="unweighted,single,multi,optimal")
    ap.add_argument("--noise-sigma", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="results.csv")
    ap.add_argument("--bounds-report")
    ap.add_argument("--max-iters", type=int, default=SolverConfig.max_iters)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--timing", action="store_true",
                    help="fill runtime_ms (makes the CSV run-dependent)")
    ap.add_argument("--quiet", action="store_true")
    return ap


def _scenario_config(args):
    explicit = args.angles_u is not None or args.angles_v is not None
    modes = sum([args.angles_preset is not None, explicit, args.perturbation is not None])
    if modes > 1:
        raise ConfigError("choose one of --angles-preset, --angles-u/--angles-v, --perturbation")
    common = dict(n=args.n, r=args.rank, r_prime=args.rprime,
                  noise_sigma=args.noise_sigma, seed=args.seed)
    if args.angles_preset is not None:
        return ScenarioConfig.from_preset(args.angles_preset, **common)
    if explicit:
        if args.angles_u is None or args.angles_v is None:
            raise ConfigError("--angles-u and --angles-v must be given together")
        return ScenarioConfig(theta_u_deg=parse_angles(args.angles_u),
                              theta_v_deg=parse_angles(args.angles_v), **common)
    if args.perturbation is not None:
        return ScenarioConfig(perturbation_sigma=args.perturbation, **common)
    return ScenarioConfig.from_preset("accurate", **common)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scfg = _scenario_config(args)
        sweep = SweepConfig(p_grid=parse_grid(args.p_grid), methods=parse_methods(args.methods),
                            trials=args.trials, base_seed=args.seed)
        solver = SolverConfig(max_iters=args.max_iters)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
    except ValueError as exc:
        print(f"mcsweep: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    scenario = gen_scenario(scfg)
    weights = {m: method_weights(scenario, m) for m in sweep.methods}
    projectors = build_projectors(scenario, weights=weights)
    records = run_sweep(scenario, sweep, solver, workers=args.workers,
                        timing=args.timing, projectors=projectors)
    write_csv(records, args.out)

    if args.bounds_report:
        report = {}
        for m in sweep.methods:
            report[m] = bound_report(weights[m], scenario.priors.theta_u, scenario.priors.theta_v,
                                     scenario.profile, scfg.n, scfg.r)
        with open(args.bounds_report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")

    rows = aggregate(records)
    if not args.quiet:
        for m in sweep.methods:
            pstar = phase_transition_point(rows, m)
            print(f"{m}: p* = {pstar if pstar is not None else 'none'}")
    failing = nonconvergence_rate(records)
    if failing > 0.5:
        print(f"mcsweep: {failing:.0%} of solves did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
