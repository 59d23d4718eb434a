"""Command-line entry point: run one experiment, write its artifacts.

Exit codes: 0 on success, 2 for configuration errors (unknown experiment,
inapplicable flags, a scheme the model cannot run, malformed config file),
3 when the solver fails to converge mid-run.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConsdynError, NonConvergedError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

_FLOAT_KEYS = ("dt", "t_end", "sigma_y", "toughness", "amplitude", "period")
_ALL_KEYS = ("experiment", "mesh_level", "scheme", "out") + _FLOAT_KEYS


def _parse_config_file(path: str) -> dict:
    """key=value lines; '#' starts a comment; keys match the CLI flags."""
    values: dict = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConsdynError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConsdynError(
                f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _ALL_KEYS:
            raise ConsdynError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "mesh_level":
                values[key] = int(value)
            else:
                values[key] = value.strip("'\"")
        except ValueError as exc:
            raise ConsdynError(f"{path}:{lineno}: bad value for {key}: "
                               f"{value!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consdyn",
        description="Energy-tracking implicit simulations of an elastic bar "
                    "with friction, delamination, or bulk plasticity and "
                    "degradation.")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="which scenario to run (required here or in "
                             "the config file)")
    parser.add_argument("--mesh-level", type=int, choices=(1, 2, 3),
                        dest="mesh_level", help="mesh refinement level")
    parser.add_argument("--dt", type=float, help="time step [s]")
    parser.add_argument("--t-end", type=float, dest="t_end",
                        help="final time [s]; must be a multiple of dt")
    parser.add_argument("--scheme", choices=("cn", "split", "be"),
                        help="time discretization: monolithic midpoint, "
                             "fractional-step midpoint, or backward Euler")
    parser.add_argument("--sigma-y", type=float, dest="sigma_y",
                        help="yield traction [Pa] (friction) or yield "
                             "stress [Pa] (bulk)")
    parser.add_argument("--toughness", type=float,
                        help="rupture energy per area [J/m^2] (delamination)")
    parser.add_argument("--amplitude", type=float,
                        help="peak applied traction [Pa]")
    parser.add_argument("--period", type=float,
                        help="load cycle period [s] (friction)")
    parser.add_argument("--out", help="output directory "
                                      "(default runs/<experiment>)")
    parser.add_argument("--config", help="key=value file; command-line "
                                         "flags override it")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        merged: dict = {}
        if args.config:
            merged.update(_parse_config_file(args.config))
        for key in _ALL_KEYS:
            value = getattr(args, key)
            if value is not None:
                merged[key] = value
        if "experiment" not in merged:
            raise ConsdynError(
                "an experiment must be given, via --experiment or the "
                "config file")
        cfg = ExperimentConfig(**merged)
    except ConsdynError as exc:
        print(f"consdyn: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        artifacts = run_experiment(cfg)
    except NonConvergedError as exc:
        step = f" at step {exc.step_index}" if exc.step_index else ""
        print(f"consdyn: solver failed to converge{step}: {exc}",
              file=sys.stderr)
        return 3
    except ConsdynError as exc:
        print(f"consdyn: configuration error: {exc}", file=sys.stderr)
        return 2

    vals = artifacts.summary_values
    print(f"wrote {len(artifacts.files)} files to {artifacts.out_dir}")
    print(f"steps={int(vals['n_steps'])} final_t={vals['final_t']:.6g} s")
    print(f"work={vals['work_ext_cum']:.6g} J "
          f"viscous={vals['dissip_viscous_cum']:.6g} J "
          f"rate_independent={vals['dissip_rate_indep_cum']:.6g} J")
    print(f"energy balance: cumulative residual {vals['cum_residual']:.3e} J "
          f"({vals['rel_cum_residual']:.2e} relative), "
          f"max per-step {vals['max_rel_step_residual']:.2e} relative")
    return 0


if __name__ == "__main__":
    sys.exit(main())
