"""Command-line entry points.

Three subcommands:

* ``lagmaxwell solve --config scenario.cfg [--alpha 0.157] [--mode laguerre]
  [--out runs/]`` — run the sweep and write artifacts.  Exit code 0 as long
  as the sweep completes; stagnated or failed entries are recorded in the
  manifest (stagnation is data, not an error).
* ``lagmaxwell oracle --config scenario.cfg --grid 16`` — compare the
  iterative solution against a dense factorization on a small grid.
* ``lagmaxwell testbed --config scenario.cfg`` — scalar limiting-amplitude
  cross-validation at the config's transform settings.

Configuration or I/O problems (missing file, unknown key, bad mode) exit
nonzero with a message on stderr.
"""

import argparse
import sys
from dataclasses import replace

from .experiments import (
    ScenarioConfig,
    compare_with_direct,
    load_config,
    run_scenario,
    scenario_id,
)


def _load(path, overrides) -> ScenarioConfig:
    config = load_config(path)
    if overrides:
        config = replace(config, **overrides)
    return config


def _cmd_solve(args) -> int:
    overrides = {}
    if args.alpha is not None:
        overrides["alphas"] = (args.alpha,)
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.out is not None:
        overrides["output_dir"] = args.out
    config = _load(args.config, overrides)
    manifest = run_scenario(config)
    print(f"scenario {manifest.scenario_id} -> {config.output_dir}")
    for entry in manifest.entries:
        mode = entry.get("mode", "?")
        if entry.get("error"):
            print(f"  alpha={entry.get('alpha_token', '-')} {mode}: "
                  f"ERROR {entry['error']}")
        elif mode == "scalar_testbed":
            print(f"  scalar testbed: rel error {entry['rel_error']:.3e}")
        else:
            status = "converged" if entry.get("converged") else "stagnated"
            print(f"  alpha={entry['alpha_token']} {mode}: {status} "
                  f"at {entry['final_residual']:.3e} "
                  f"in {entry['iterations']} iterations")
    return 0


def _cmd_oracle(args) -> int:
    config = _load(args.config, {})
    err = compare_with_direct(config, args.grid, workdir=args.out)
    print(f"scenario {scenario_id(config)} grid {args.grid}: "
          f"relative error vs dense direct = {err:.3e}")
    return 0


def _cmd_testbed(args) -> int:
    overrides = {"mode": "scalar_testbed"}
    if args.out is not None:
        overrides["output_dir"] = args.out
    config = _load(args.config, overrides)
    manifest = run_scenario(config)
    entry = manifest.entries[0]
    if entry.get("error"):
        print(f"scalar testbed ERROR: {entry['error']}", file=sys.stderr)
        return 1
    print(f"scalar testbed relative error: {entry['rel_error']:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagmaxwell",
        description="Time-harmonic wave experiments with a "
                    "Laguerre-transform preconditioner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a scenario sweep")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--alpha", type=float, default=None,
                         help="run only this slot angle (radians)")
    p_solve.add_argument("--mode", default=None,
                         choices=["unpreconditioned", "laguerre", "both",
                                  "scalar_testbed"])
    p_solve.add_argument("--out", default=None, help="output directory")
    p_solve.set_defaults(func=_cmd_solve)

    p_oracle = sub.add_parser("oracle",
                              help="dense-direct comparison on a small grid")
    p_oracle.add_argument("--config", required=True)
    p_oracle.add_argument("--grid", type=int, required=True)
    p_oracle.add_argument("--out", default=None,
                          help="directory for the exported matrix")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_testbed = sub.add_parser("testbed",
                               help="scalar limiting-amplitude check")
    p_testbed.add_argument("--config", required=True)
    p_testbed.add_argument("--out", default=None, help="output directory")
    p_testbed.set_defaults(func=_cmd_testbed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
