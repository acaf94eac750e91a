"""Command line interface.

    twinphoton simulate <protocol> --config run.yaml [--seed N]
                        [--out DIR] [--no-figures] [--workers N]
    twinphoton calibrate --config run.yaml [...]
    twinphoton replay --record result.yaml [--out DIR]

``calibrate`` is shorthand for ``simulate calibrate``.  Exit codes:
0 success, 1 configuration error, 2 runtime or replay failure,
3 estimation failure (the data could not support the estimate).
"""

from __future__ import annotations

import argparse
import sys

from .config import PROTOCOLS, load_config
from .errors import ConfigError, EstimationError, TwinphotonError
from .runner import replay, run


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--seed", type=int, default=None,
                   help="override the seed in the config")
    p.add_argument("--out", default=None,
                   help="output directory (default <protocol>_run)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering, write only delimited outputs")
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for temperature sweeps (results "
                        "do not depend on this)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinphoton",
        description="Simulate and analyze correlated photon-pair fiber "
                    "measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one measurement protocol")
    sim.add_argument("protocol", choices=PROTOCOLS)
    _add_run_args(sim)

    cal = sub.add_parser("calibrate",
                         help="shorthand for 'simulate calibrate'")
    _add_run_args(cal)

    rep = sub.add_parser("replay", help="re-run a result record and verify "
                                        "it reproduces")
    rep.add_argument("--record", required=True, help="path to a result.yaml")
    rep.add_argument("--out", default=None,
                     help="keep the replay outputs in this directory")
    return parser


def _run_simulation(args, protocol: str | None) -> int:
    cfg = load_config(args.config)
    if protocol is not None and cfg.protocol != protocol:
        raise ConfigError(
            f"config declares protocol {cfg.protocol!r} but the command "
            f"asked for {protocol!r}"
        )
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    out = args.out if args.out is not None else f"{cfg.protocol}_run"
    result = run(
        cfg,
        out,
        workers=args.workers,
        figures=not args.no_figures,
        seed_override=args.seed,
    )
    print(f"wrote {result.out_dir}/result.yaml")
    for name in sorted(result.record["files"]):
        print(f"  {name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run_simulation(args, args.protocol)
        if args.command == "calibrate":
            return _run_simulation(args, "calibrate")
        ok, lines = replay(args.record, out_dir=args.out)
        for line in lines:
            print(line)
        if not ok:
            print("replay FAILED: outputs differ from the record",
                  file=sys.stderr)
            return 2
        print("replay ok: outputs match the record")
        return 0
    except ConfigError as exc:
        print(f"twinphoton: config error: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"twinphoton: estimation error: {exc}", file=sys.stderr)
        return 3
    except TwinphotonError as exc:
        print(f"twinphoton: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"twinphoton: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
