"""Command line entry point: ``spinvqe <experiment> --config FILE [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 resource refusal.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import FIGURES, KINDS, ConfigError, ExperimentConfig, ResourceRefusal, emit_plot_data
from .harness import load_config, run

EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinvqe", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run the {kind} experiment")
        s.add_argument("--config", help="YAML or JSON config file")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--out", dest="output", help="output directory")
        s.add_argument("--n", type=_int_list, help="comma-separated chain lengths")
        s.add_argument("--layers", type=_int_list, help="comma-separated depths")
        s.add_argument("--thresholds", type=_float_list)
        s.add_argument("--samples", type=int)
        s.add_argument("--budget", type=int)
    pd = sub.add_parser("plot-data", help="write long-form CSV for a figure from a record")
    pd.add_argument("record", help="record.json produced by an experiment")
    pd.add_argument("--figure", required=True, choices=sorted(FIGURES))
    pd.add_argument("--out", required=True, help="CSV path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plot-data":
        try:
            path = emit_plot_data(args.record, args.figure, args.out)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(path)
        return 0

    overrides = {"kind": args.command, "seed": args.seed, "output": args.output, "n": args.n,
                 "layers": args.layers, "thresholds": args.thresholds,
                 "samples": args.samples, "budget": args.budget}
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
        record = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(open(f"{cfg.output}/summary.txt", encoding="utf-8").read(), end="")
    print(f"wrote {cfg.output}/record.json ({record['wall_clock_s']:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
