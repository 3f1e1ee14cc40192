"""Command-line entry point: ``forecast-cf <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import pipeline
from .config import METHODS, load_config
from .errors import ConfigError, DataError
from .metrics import CF_METRICS
from .synthetic import SyntheticSpec

logger = logging.getLogger("forecast_cf")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="INI config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    common.add_argument("--seed", type=int, help="global seed (training and initialization)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="processes for the counterfactual search")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="forecast-cf",
                                     description="Band-constrained counterfactual search for multi-step forecasters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic long-format CSV")
    p.add_argument("path", help="output CSV path")
    p.add_argument("--n-series", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--noise", type=float)

    sub.add_parser("prepare", parents=[common], help="split, scale and window the data")
    sub.add_parser("train", parents=[common], help="train the forecaster")
    p = sub.add_parser("generate", parents=[common], help="generate counterfactuals for the test windows")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p = sub.add_parser("evaluate", parents=[common], help="score generated counterfactuals")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p = sub.add_parser("run", parents=[common], help="prepare, train, generate and evaluate in one go")
    p.add_argument("--repeats", type=int, default=1, help="repeat with training seeds seed..seed+k-1 and average")
    p = sub.add_parser("sweep-horizon", parents=[common], help="retrain and explain across forecast horizons")
    p.add_argument("--horizons", type=_int_list, required=True, help="e.g. 1,2,4,8")
    p = sub.add_parser("ablate", parents=[common], help="vary cp or fr with one trained model")
    p.add_argument("parameter", choices=sorted(pipeline.ABLATION_FIELDS))
    p.add_argument("--values", type=_float_list, required=True, help="e.g. 0.25,0.5,1,2,5")
    return parser


def _resolve(args):
    config = load_config(args.config, args.overrides)
    changes = {k: getattr(args, k) for k in ("seed", "out", "workers") if getattr(args, k, None) is not None}
    method = getattr(args, "method", None)
    if method and method != "all":
        changes["methods"] = (method,)
    return replace(config, **changes) if changes else config


def _print_table(rows, columns):
    print("\t".join(columns))
    for row in rows:
        print("\t".join(f"{row[c]:.4f}" if isinstance(row.get(c), float) else str(row.get(c, "")) for c in columns))


def run(args) -> None:
    config = _resolve(args)
    cmd = args.command
    if cmd == "synth":
        spec = config.synthetic
        changes = {k: v for k, v in (("n_series", args.n_series), ("length", args.length), ("noise", args.noise))
                   if v is not None}
        if args.seed is not None:
            changes["seed"] = args.seed
        spec = SyntheticSpec(**{**spec.__dict__, **changes})
        print(f"wrote {pipeline.cmd_synth(spec, args.path)}")
    elif cmd == "prepare":
        data = pipeline.cmd_prepare(config)
        for split, n in data.counts().items():
            print(f"{split}\t{n}")
        if data.skipped:
            print(f"skipped {len(data.skipped)} series: {', '.join(data.skipped)}")
    elif cmd == "train":
        pipeline.cmd_train(config)
        print(f"checkpoint written to {pipeline.Layout(config.out).checkpoint}")
    elif cmd == "generate":
        for method in config.methods:
            records = pipeline.cmd_generate(config, method)
            valid = sum(r["fully_valid"] for r in records)
            print(f"{method}\t{len(records)} windows\t{valid} fully valid")
    elif cmd == "evaluate":
        reports = pipeline.cmd_evaluate(config)
        _print_table([{"method": m, **r.aggregate} for m, r in reports.items()], ["method", *CF_METRICS])
    elif cmd == "run":
        runs = pipeline.run_repeats(config, args.repeats)
        for i, agg in enumerate(runs):
            if len(runs) > 1:
                print(f"repeat {i}")
            _print_table([{"method": m, **a} for m, a in agg.items()], ["method", *CF_METRICS, "smape", "mase"])
    elif cmd == "sweep-horizon":
        rows = pipeline.cmd_horizon_sweep(config, args.horizons)
        _print_table(rows, pipeline.SWEEP_COLUMNS)
    elif cmd == "ablate":
        rows = pipeline.cmd_ablation(config, args.parameter, args.values)
        _print_table(rows, [args.parameter, *CF_METRICS])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
