"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 data/parse/IO, 3 numeric failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .chamber import ChamberState, load_scenario, run_closed_loop
from .checks import run_checks
from .comfort import ComfortClass, classify_comfort
from .config import DEFAULT_DATASET_SIZE, DEFAULT_SEED, AppConfig, load_config
from .control import ComfortSource, Controller, write_trace
from .dataset import (
    generate_dataset,
    read_dataset,
    split_and_normalize,
    write_dataset,
    write_stats,
)
from .errors import DegenerateRange, DivergedTraining, InvalidCount, NonConvergence, ParseError
from .mlp import TrainConfig, evaluate, init_model, load_model, predict_pmv, save_model, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3, 4
FAILED_STEP_LIMIT = 0.10

log = logging.getLogger("comfortloop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="comfortloop", description="PMV comfort engine, surrogate and chamber loop")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for every random stream")
    p.add_argument("--config", type=Path, help="ini file with [occupant], [training], [plant]")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate the labelled training corpus")
    g.add_argument("--n", type=_positive_int, default=DEFAULT_DATASET_SIZE)
    g.add_argument("--out", type=Path, required=True)

    t = sub.add_parser("train", help="train the surrogate and write a weight file")
    t.add_argument("--data", type=Path, required=True)
    t.add_argument("--out", type=Path, required=True, help="weight file")
    t.add_argument("--stats-out", type=Path, help="also write the normalization stats file")
    t.add_argument("--epochs", type=_positive_int)
    t.add_argument("--batch-size", type=_positive_int)
    t.add_argument("--learning-rate", type=float)
    t.add_argument("--widths", type=_positive_int, nargs=4)
    t.add_argument("--train-fraction", type=float)

    pr = sub.add_parser("predict", help="surrogate PMV for one reading")
    pr.add_argument("--model", type=Path, required=True)
    pr.add_argument("--temp", type=float, required=True, help="air temperature, C")
    pr.add_argument("--rh", type=float, required=True, help="relative humidity, percent")

    s = sub.add_parser("simulate", help="run the closed-loop chamber simulation")
    s.add_argument("--params", type=Path, help="scenario ini with [plant] and [initial]")
    s.add_argument("--steps", type=_positive_int, default=10_000)
    s.add_argument("--source", choices=[c.value for c in ComfortSource], default="analytic")
    s.add_argument("--model", type=Path)
    s.add_argument("--init-temp", type=float)
    s.add_argument("--init-rh", type=float, help="percent")
    s.add_argument("--trace-out", type=Path)
    s.add_argument("--report-out", type=Path)

    c = sub.add_parser("check", help="run the built-in verification battery")
    c.add_argument("--model", type=Path, help="also check this surrogate")
    return p


def cmd_gen_data(args, cfg: AppConfig) -> int:
    report = generate_dataset(args.n, args.seed, cfg.occupant)
    write_dataset(report.records, args.out)
    print(f"records={len(report.records)} resamples={report.resamples} path={args.out}")
    return EXIT_OK


def cmd_train(args, cfg: AppConfig) -> int:
    records = read_dataset(args.data)
    fraction = args.train_fraction if args.train_fraction is not None else cfg.train_fraction
    if not 0.0 < fraction < 1.0:
        raise UsageError("--train-fraction must lie in (0, 1)")
    base = cfg.training
    try:
        config = TrainConfig(
            learning_rate=base.learning_rate if args.learning_rate is None else args.learning_rate,
            adam_beta1=base.adam_beta1,
            adam_beta2=base.adam_beta2,
            adam_epsilon=base.adam_epsilon,
            batch_size=args.batch_size or base.batch_size,
            epochs=args.epochs or base.epochs,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train_split, test_split, stats = split_and_normalize(records, fraction, args.seed)
    model = init_model(args.widths or cfg.widths, args.seed, stats)
    model, history = train(model, train_split, config)
    if history.diverged:
        print(f"error: training made no progress (loss {history.epoch_loss[0]:.6g} -> "
              f"{history.epoch_loss[-1]:.6g})", file=sys.stderr)
        return EXIT_NUMERIC
    metrics = evaluate(model, test_split)
    save_model(model, args.out)
    if args.stats_out:
        write_stats(stats, args.seed, fraction, args.stats_out)
    print(f"train={len(train_split)} test={len(test_split)} epochs={config.epochs} "
          f"final_loss={history.epoch_loss[-1]:.6g}")
    print(metrics)
    return EXIT_OK


def cmd_predict(args, cfg: AppConfig) -> int:
    if not 0.0 <= args.rh <= 100.0:
        raise UsageError(f"--rh must be a percentage in [0, 100], got {args.rh}")
    model = load_model(args.model)
    pred = predict_pmv(model, args.temp, args.rh)
    cls = classify_comfort(pred.pmv)
    print(f"Predicted PMV: {pred.pmv:.3f}")
    print(f"pmv={pred.pmv:.6f} class={cls.value} out_of_domain={int(pred.out_of_domain)}")
    if pred.out_of_domain:
        print("warning: input outside the training range", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args, cfg: AppConfig) -> int:
    params, initial = cfg.plant, None
    if args.params:
        params, initial = load_scenario(args.params)
    if initial is None:
        initial = ChamberState.ambient(params)
    if args.init_temp is not None or args.init_rh is not None:
        if args.init_rh is not None and not 0.0 <= args.init_rh <= 100.0:
            raise UsageError("--init-rh must be a percentage in [0, 100]")
        initial = ChamberState(
            initial.temp_c if args.init_temp is None else args.init_temp,
            initial.rh_fraction if args.init_rh is None else args.init_rh / 100.0,
        )
    source = ComfortSource(args.source)
    model = None
    if source is ComfortSource.SURROGATE:
        if args.model is None:
            raise UsageError("--source surrogate needs --model")
        model = load_model(args.model)
    result = run_closed_loop(initial, params, Controller(source, model, cfg.occupant), args.steps)
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            write_trace(result.trace, fh)
    report_text = result.report.to_text()
    if args.report_out:
        Path(args.report_out).write_text(report_text)
    sys.stdout.write(report_text)
    hot = [i for i, r in enumerate(result.trace) if r.comfort_class is ComfortClass.HOT]
    print(f"last_hot_step={hot[-1] if hot else -1} final_temp_c={result.final_state.temp_c:.4f}")
    if result.report.failed_steps > FAILED_STEP_LIMIT * args.steps:
        print(f"error: {result.report.failed_steps} steps failed to solve", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_check(args, cfg: AppConfig) -> int:
    model = load_model(args.model) if args.model else None
    results = run_checks(model, cfg.occupant)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"checks={len(results)} failed={failed}")
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else AppConfig()
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError, InvalidCount, DegenerateRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergedTraining, NonConvergence) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
