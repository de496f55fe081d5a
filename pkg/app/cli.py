"""
Command-line surface of the forecasting pipeline.

    python -m app ingest station.csv
    python -m app synth spec.env out/station.csv
    python -m app impute --method median in.csv out.csv --truth truth.csv
    python -m app train --cell lstm --treatment median --horizon-years 1 in.csv model.json
    python -m app predict model.json in.csv predictions.csv
    python -m app evaluate model.json in.csv
    python -m app grid in.csv --report report.json --table report.csv
    python -m app horizons in.csv --report horizons.json
    python -m app gradcheck --cell lstm

Failures print one JSON line to stderr and exit with 1 (usage), 2 (data) or
3 (numeric).
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from app import config
from app.errors import DataError, ForecastError, UnexpectedError, UsageError
from app.services.evaluation.grid import (
    HORIZONS,
    best_variants,
    run_grid,
    run_multi_horizon,
    score_model,
    summarize_report,
)
from app.services.evaluation.storage import export_trends, write_report_csv, write_report_json
from app.services.forecast.pipeline import predict, train
from app.services.forecast.schemas import ForecastConfig
from app.services.forecast.storage import load_model, save_model
from app.services.impute.benchmark import IMPUTATIONS, benchmark_imputers, impute_series, rmse_on_gaps
from app.services.impute.schemas import Treatment
from app.services.ingest.csv_io import parse_csv, summarize, write_csv
from app.services.ingest.schemas import SyntheticSpec
from app.services.ingest.synthetic import generate_synthetic
from app.services.neural.gradcheck import run_suite
from app.services.neural.schemas import CellKind
from app.services.series.core import HOURS_PER_YEAR
from app.services.series.schemas import FunctionalClass

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Usage problems become UsageError so they share the JSON error line."""

    def error(self, message):
        raise UsageError(message)


def _class(value: str) -> FunctionalClass:
    for functional_class in FunctionalClass:
        if functional_class.value.lower() == value.replace("-", "").replace("_", "").lower():
            return functional_class
    raise argparse.ArgumentTypeError(f"unknown functional class '{value}'")


def _forecast_config(args, **overrides) -> ForecastConfig:
    """Config file values, overridden by any flag that was given."""
    values = config.read_config_file(args.config) if getattr(args, "config", None) else {}
    flags = {
        "cell_kind": getattr(args, "cell", None),
        "treatment": getattr(args, "treatment", None),
        "hidden_size": getattr(args, "hidden", None),
        "window_length": getattr(args, "window", None),
        "window_stride": getattr(args, "stride", None),
        "epochs": getattr(args, "epochs", None),
        "batch_size": getattr(args, "batch", None),
        "learning_rate": getattr(args, "lr", None),
        "seed": getattr(args, "seed", None),
        "test_hours": getattr(args, "test_hours", None),
    }
    values.update({key: value for key, value in flags.items() if value is not None})
    values.update(overrides)
    try:
        return ForecastConfig.model_validate(values)
    except ValidationError as e:
        raise UsageError(f"Invalid configuration: {e.errors()[0]['loc']} {e.errors()[0]['msg']}")


def _print_rows(rows):
    header = f"{'variant':<18} {'horizon':>7} {'year':>5} {'predicted':>12} {'actual':>12}"
    print(f"{header} {'accuracy':>9} {'missing':>8}")
    for row in rows:
        variant = f"{row.cell.value}-{row.treatment.value}"
        if not row.succeeded:
            print(f"{variant:<18} {row.horizon_hours:>7} {row.year:>5}  failed: {row.error}")
            continue
        print(
            f"{variant:<18} {row.horizon_hours:>7} {row.year:>5} {row.predicted_aadt:>12.2f} "
            f"{row.actual_aadt:>12.2f} {row.accuracy_pct:>8.2f}% {row.missing_pct:>7.2f}%"
        )


def cmd_ingest(args) -> int:
    series = parse_csv(args.csv, station_id=args.station, functional_class=args.functional_class)
    summary = summarize(series, args.csv)
    print(f"station   {summary.station_id} ({summary.functional_class.value})")
    print(f"span      {summary.start} .. {summary.end}")
    print(f"length    {summary.length} h")
    print(f"missing   {summary.missing_count} h ({summary.missing_pct:.2f}%)")
    for year, pct in summary.missing_pct_by_year.items():
        print(f"  {year}    {pct:.2f}%")
    return 0


def cmd_synth(args) -> int:
    values = {} if args.spec == "-" else config.read_config_file(args.spec)
    if args.seed is not None:
        values["seed"] = args.seed
    try:
        spec = SyntheticSpec.preset(args.preset, **values) if args.preset else SyntheticSpec.model_validate(values)
    except ValidationError as e:
        raise UsageError(f"Invalid synthetic spec: {e.errors()[0]['loc']} {e.errors()[0]['msg']}")
    gappy, complete = generate_synthetic(spec)
    truth_path = args.truth or os.path.splitext(args.out)[0] + "-complete.csv"
    write_csv(gappy, args.out)
    write_csv(complete, truth_path)
    print(f"wrote {args.out} ({len(gappy)} h, {100.0 * gappy.missing_fraction:.2f}% missing)")
    print(f"wrote {truth_path} (ground truth)")
    return 0


def cmd_impute(args) -> int:
    series = parse_csv(args.input)
    truth = parse_csv(args.truth, station_id=series.station_id) if args.truth else None
    if args.method == "all":
        if truth is None:
            raise UsageError("--method all needs --truth")
        print(f"{'method':<8} {'filled':>8} {'rmse':>12}")
        for row in benchmark_imputers(series, truth, seed=args.seed):
            print(f"{row.method.value:<8} {row.filled_count:>8} {row.rmse:>12.4f}")
        return 0
    treatment = Treatment.parse(args.method)
    completed, result = impute_series(series, treatment, seed=args.seed)
    write_csv(completed, args.output)
    print(f"filled {len(result.filled_positions)} hours with {treatment.value}")
    if truth is not None:
        print(f"rmse {rmse_on_gaps(completed, truth, ~series.observed):.4f}")
    return 0


def cmd_train(args) -> int:
    series = parse_csv(args.csv)
    cfg = _forecast_config(args, horizon_hours=HOURS_PER_YEAR * args.horizon_years)
    model = train(series, cfg)
    save_model(model, args.model_out)
    print(f"trained {cfg.label} horizon {cfg.horizon_hours} h, final loss {model.training_loss_trace[-1]:.6f}")
    print(f"wrote {args.model_out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    series = parse_csv(args.csv, station_id=args.station)
    predicted = predict(model, series)
    write_csv(predicted, args.out)
    print(f"wrote {len(predicted)} predictions to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    series = parse_csv(args.csv, station_id=args.station)
    rows, _, _ = score_model(model, series)
    _print_rows(rows)
    return 0


def _test_years(series, args) -> List[int]:
    if args.test_years:
        return args.test_years
    last = series.end.year
    return [last - 1, last]


def _write_report(report, args):
    if args.report:
        write_report_json(report, args.report)
        print(f"wrote {args.report}")
    if args.table:
        write_report_csv(report, args.table)
        print(f"wrote {args.table}")
    if args.trend_dir:
        export_trends(report, args.trend_dir)


def cmd_grid(args) -> int:
    series = parse_csv(args.csv)
    cfg = _forecast_config(args, horizon_hours=HOURS_PER_YEAR * args.horizon_years)
    report = run_grid(series, cfg, _test_years(series, args), n_jobs=args.jobs, keep_trends=bool(args.trend_dir))
    _print_rows(report.rows)
    summary = summarize_report(report)
    print()
    for line in summary.by_cell + summary.by_treatment:
        print(f"mean {line.group:<10} {line.mean_accuracy_pct:>8.2f}%")
    if summary.masking_mean_pct is not None and summary.imputation_mean_pct is not None:
        print(f"masking {summary.masking_mean_pct:.2f}% vs imputation {summary.imputation_mean_pct:.2f}%")
    print()
    for best in best_variants(report):
        print(f"best {best.year}: {best.cell.value}-{best.treatment.value} ({best.accuracy_pct:.2f}%)")
    _write_report(report, args)
    return 0 if any(row.succeeded for row in report.rows) else 3


def cmd_horizons(args) -> int:
    series = parse_csv(args.csv)
    cfg = _forecast_config(args)
    horizons = [HORIZONS[0] * years for years in args.horizon_years]
    test_years = _test_years(series, args)
    report = run_multi_horizon(
        series, cfg, test_years, horizons, n_jobs=args.jobs, keep_trends=bool(args.trend_dir)
    )
    _print_rows(report.rows)
    for skip in report.skipped:
        print(f"skipped horizon {skip.horizon_hours} h: {skip.reason}")
    _write_report(report, args)
    return 0


def cmd_gradcheck(args) -> int:
    cells = [CellKind.parse(args.cell)] if args.cell else list(CellKind)
    results = run_suite(cells, seeds=args.seeds, tolerance=args.tolerance)
    for cell_kind, report in results.items():
        worst = max(block.max_relative_error for block in report.blocks)
        print(f"{cell_kind.value:<10} {'PASS' if report.passed else 'FAIL'}  max relative error {worst:.3e}")
        for block in report.blocks:
            if not block.passed:
                print(f"  {block.name}: {block.max_relative_error:.3e}")
    return 0 if all(report.passed for report in results.values()) else 3


def _training_flags(parser, with_variant: bool = True):
    if with_variant:
        parser.add_argument("--cell", help="SimpleRnn, Gru or Lstm")
        parser.add_argument("--treatment", help="Masking, Mean, Median, Em, Mice, Knn or Rf")
    parser.add_argument("--config", help="key=value file with ForecastConfig fields")
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--stride", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--test-hours", type=int, dest="test_hours")


def _report_flags(parser):
    parser.add_argument("--test-years", type=int, nargs="+", dest="test_years")
    parser.add_argument("--jobs", type=int, default=config.GRID_JOBS)
    parser.add_argument("--report", help="Write the report as JSON")
    parser.add_argument("--table", help="Write the report table as CSV")
    parser.add_argument("--trend-dir", dest="trend_dir", help="Export hourly trends as CSVs")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="app", description="Hourly traffic volume and AADT forecasting")
    parser.add_argument("--log-level", default=config.CLI_LOG_LEVEL)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    ingest = commands.add_parser("ingest", help="Validate and summarize a CSV")
    ingest.add_argument("csv")
    ingest.add_argument("--station")
    ingest.add_argument("--class", dest="functional_class", type=_class, default=FunctionalClass.RURAL_INTERSTATE)
    ingest.set_defaults(func=cmd_ingest)

    synth = commands.add_parser("synth", help="Generate a synthetic station")
    synth.add_argument("spec", help="key=value SyntheticSpec file, or - for defaults")
    synth.add_argument("out")
    synth.add_argument("--truth", help="Path of the complete series (default: <out>-complete.csv)")
    synth.add_argument("--preset", type=_class, help="Start from a functional class preset")
    synth.add_argument("--seed", type=int)
    synth.set_defaults(func=cmd_synth)

    impute = commands.add_parser("impute", help="Run one treatment on a CSV")
    impute.add_argument("--method", required=True, choices=[t.value.lower() for t in IMPUTATIONS] + ["all"])
    impute.add_argument("input")
    impute.add_argument("output", nargs="?")
    impute.add_argument("--truth", help="Ground-truth CSV for RMSE")
    impute.add_argument("--seed", type=int, default=0)
    impute.set_defaults(func=cmd_impute)

    train_cmd = commands.add_parser("train", help="Train one model variant")
    _training_flags(train_cmd)
    train_cmd.add_argument("--horizon-years", type=int, choices=[1, 2, 3], default=1, dest="horizon_years")
    train_cmd.add_argument("csv")
    train_cmd.add_argument("model_out")
    train_cmd.set_defaults(func=cmd_train)

    predict_cmd = commands.add_parser("predict", help="Predict volumes with a trained model")
    predict_cmd.add_argument("model")
    predict_cmd.add_argument("csv")
    predict_cmd.add_argument("out")
    predict_cmd.add_argument("--station", help="Station of the CSV (default: its file name)")
    predict_cmd.set_defaults(func=cmd_predict)

    evaluate = commands.add_parser("evaluate", help="Per-year AADT accuracy of a trained model")
    evaluate.add_argument("model")
    evaluate.add_argument("csv")
    evaluate.add_argument("--station", help="Station of the CSV (default: its file name)")
    evaluate.set_defaults(func=cmd_evaluate)

    grid = commands.add_parser("grid", help="Run the cell kind x treatment grid")
    grid.add_argument("csv")
    grid.add_argument("--horizon-years", type=int, choices=[1, 2, 3], default=1, dest="horizon_years")
    _training_flags(grid, with_variant=False)
    _report_flags(grid)
    grid.set_defaults(func=cmd_grid)

    horizons = commands.add_parser("horizons", help="Compare 1, 2 and 3-year horizons")
    horizons.add_argument("csv")
    horizons.add_argument("--horizon-years", type=int, nargs="+", default=[1, 2, 3], dest="horizon_years")
    _training_flags(horizons)
    _report_flags(horizons)
    horizons.set_defaults(func=cmd_horizons)

    gradcheck = commands.add_parser("gradcheck", help="Finite-difference check of the BPTT gradients")
    gradcheck.add_argument("--cell")
    gradcheck.add_argument("--seeds", type=int, default=20)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config.configure_logging(args.log_level)
        if args.command == "impute" and args.method != "all" and not args.output:
            raise UsageError("impute needs an output path")
        return args.func(args)
    except ForecastError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError) as e:
        error = DataError(f"{e.strerror}: {e.filename}")
        print(json.dumps({**error.to_dict(), "error": "file_not_found"}), file=sys.stderr)
        return error.exit_code
    except ValueError as e:
        error = UsageError(str(e))
        print(json.dumps(error.to_dict()), file=sys.stderr)
        return error.exit_code
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        error = UnexpectedError(f"{type(e).__name__}: {e}")
        print(json.dumps(error.to_dict()), file=sys.stderr)
        return error.exit_code
