"""edmlab command line.

    edmlab run --config cfg.json [--seed S] [--out DIR]
    edmlab list
    edmlab validate --config cfg.json

Exit codes: 0 success, 1 experiment failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import REGISTRY, ConfigError, ExperimentError, load_config, run_experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"edmlab: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="edmlab", description="Energy-based dynamical model experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="override the config out_dir")
    sub.add_parser("list", help="list registered experiments")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name in sorted(REGISTRY):
                exp = REGISTRY[name]
                print(f"{name:24s} {exp.doc}")
                for pname, spec in exp.params.items():
                    print(f"    {pname} ({spec.kind}, default {spec.default!r})")
            return 0
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"ok: {cfg.experiment} (seed {cfg.seed})")
            return 0
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be in [0, 2^64)")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"edmlab: config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"edmlab: experiment failed: {exc}", file=sys.stderr)
        return 1
    for f in report.csv_files:
        print(f"wrote {f}")
    for k, v in sorted(report.summary.items()):
        print(f"{k} = {v}")
    print(f"runtime {report.runtime:.2f} s")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
