"""``bench`` command line: design diagnostics, estimator sweeps, bandit runs.

Subcommands pick a family and a default preset; ``--preset`` and the
other flags override, and a ``--config`` file of ``key = value`` lines
fills in anything not flagged (flags win over the file).

Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import ConfigError, parse_config, run_experiment

_SUBCOMMAND_PRESETS = {
    "design": ("design-diagnostics",),
    "estimate": ("case1-l1", "case2-l1", "custom"),
    "bandit": ("case1-bandit", "case2-bandit"),
    "sweep": ("case1-l1", "case1-bandit", "case2-l1", "case2-bandit",
              "design-diagnostics", "custom"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="sparse-regression and bandit benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("design", "solve the design criteria on the hard instance and "
                   "check the closed forms"),
        ("estimate", "l1 estimation error sweep (popart vs lasso baselines)"),
        ("bandit", "cumulative regret runs (etc-popart / estc / "
                   "restricted-phase-elim)"),
        ("sweep", "run any preset by name"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--preset", help="experiment preset name")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--d", type=int, help="dimension")
        p.add_argument("--s", type=int, help="sparsity")
        p.add_argument("--sigma", type=float, help="noise scale")
        p.add_argument("--delta", type=float, help="failure budget in (0,1)")
        p.add_argument("--n", type=int, help="horizon / sample count "
                       "(collapses the l1 grid to one point)")
        p.add_argument("--reps", type=int, help="number of repetitions")
        p.add_argument("--seed", type=int, help="base seed; rep k uses seed+k")
        p.add_argument("--r-max", type=float, dest="r_max",
                       help="reward range bound (default: derived from "
                            "the instance)")
        p.add_argument("--m", type=float, help="minimum-signal bound for "
                       "the support recovery algorithm")
        p.add_argument("--scale", type=int, help="divide the bandit horizon "
                       "by this factor for fast runs")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    allowed = _SUBCOMMAND_PRESETS[args.command]
    overrides = {
        "preset": args.preset if args.preset is not None else allowed[0],
        "d": args.d,
        "s": args.s,
        "sigma": args.sigma,
        "delta": args.delta,
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
        "r_max": args.r_max,
        "m": args.m,
        "scale": args.scale,
        "out": args.out,
    }
    try:
        config = parse_config(args.config, overrides)
        if config.preset not in allowed:
            raise ConfigError(
                f"preset {config.preset!r} is not valid for `{args.command}` "
                f"(choices: {', '.join(allowed)})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        outputs = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"preset {config.preset}: {config.reps} repetition(s), "
          f"n = {', '.join(str(n) for n in config.n_values)}")
    print(f"raw rows:  {outputs['raw']}")
    print(f"summary:   {outputs['summary']}")
    print(f"timings:   {outputs['timings']}")
    for chart in outputs["charts"]:
        print(f"chart:     {chart}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
