"""``agropomdp`` command line: one subcommand per experiment mode."""

from __future__ import annotations

import argparse
import sys

from ..errors import AgroError, ConfigError
from . import runner
from .config import MODES as SUBCOMMANDS
from .config import ExperimentConfig, format_value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agropomdp", description="Nitrogen management with (recurrent) deep Q-learning.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        if name == "verify-rewards":
            p.add_argument("--out", help="also write verify.csv here")
            continue
        p.add_argument("--config", help="flat key=value config or manifest file")
        p.add_argument("--seed", type=int, help="master seed (run.seed)")
        p.add_argument("--episodes", type=int, help="training episodes (agent.episodes), or eval episodes for eval")
        p.add_argument("--out", help="output directory (run.out)")
        p.add_argument("--model", help="model type, or a model file for eval")
        p.add_argument("--full", action="store_true", help="full-scale agent settings instead of desk scale")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    return parser


def _config_from(args) -> ExperimentConfig:
    pairs = {"run.mode": args.command}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs[key.strip()] = value.strip()
    if args.full:
        pairs["run.scale"] = "paper"
    if args.seed is not None:
        pairs["run.seed"] = str(args.seed)
    if args.out is not None:
        pairs["run.out"] = args.out
    if args.episodes is not None:
        pairs["eval.episodes" if args.command == "eval" else "agent.episodes"] = str(args.episodes)
    if args.model is not None:
        pairs["eval.model" if args.command == "eval" and args.model.endswith(".bin") else "run.model"] = args.model
    if args.config:
        return ExperimentConfig.load(args.config, pairs)
    return ExperimentConfig.from_pairs(pairs, "<command line>")


def _print_rows(header, rows) -> None:
    print(runner.csv_text(header, rows), end="")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify-rewards":
        checks = runner.run_verify_rewards(args.out)
        for c in checks:
            tag = "PASS" if c.passed else "FAIL"
            note = "" if c.gated else " (not gated)"
            print(f"{tag} {c.policy}: recomputed {c.recomputed:.2f} vs reported {c.reported:g}{note}")
        return 0 if all(c.passed for c in checks if c.gated) else 1

    cfg = _config_from(args)
    if args.command == "train":
        result = runner.run_training(cfg)
        print(f"wrote {', '.join(sorted(result.paths.values()))}")
        if result.summary is not None:
            _print_rows(runner.SUMMARY_HEADER, [runner.summary_row(result.summary)])
    elif args.command == "eval":
        stats = runner.run_eval(cfg)
        _print_rows(("mean_yield", "mean_n", "mean_leach", "mean_reward"), [stats.row()])
    elif args.command == "compare":
        _print_rows(runner.COMPARE_HEADER, runner.compare_models(cfg))
    elif args.command == "sweep-w3":
        _print_rows(runner.SWEEP_HEADER, runner.sweep_w3(cfg))
    elif args.command == "synth-weather":
        series = runner.run_synth_weather(cfg)
        print(f"wrote {len(series)} days of weather ({series.label}) to {format_value(cfg['run.out'])}")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except AgroError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
