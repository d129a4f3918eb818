"""Command-line entry point.

Exit status: 0 on success, 1 on a configuration or input error, 2 when a batch
finished but some assets failed (see ``failures.json``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import experiments as ex
from .cgan import CganModel, train_and_select
from .config import (
    CASE1_RESAMPLERS, CASE2_SCHEMES, SCHEMA_VERSION, ConfigError, ExperimentConfig, from_dict,
    load_config, normalize_name,
)
from .errors import InsufficientHistoryError
from .strategies import DEFAULTS, KINDS, ENSEMBLE_LEARNERS, TUNING_GRIDS
from .timeseries import compute_excess_log_returns, read_price_csv, write_returns_csv

log = logging.getLogger("cgan_strategies")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _kind(name):
    k = normalize_name(name)
    if k not in KINDS:
        raise argparse.ArgumentTypeError(f"unknown learner {name!r}; choose from {', '.join(KINDS)}")
    return k


def _choice(allowed):
    def parse(name):
        n = normalize_name(name)
        if n not in allowed:
            raise argparse.ArgumentTypeError(f"{name!r} is not one of {', '.join(allowed)}")
        return n
    return parse


def _param(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected key=value")
    k, v = text.split("=", 1)
    return k.strip(), yaml.safe_load(v)


def _grid_arg(text):
    value = yaml.safe_load(text)
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("grid must be a mapping of hyperparameter -> list of values")
    return value


def _common(p, holdout=True):
    p.add_argument("--input", required=True, help="returns CSV (date,return) or price CSV (date,price[,rate])")
    if holdout:
        p.add_argument("--holdout", type=int, default=1260, help="trailing returns reserved for testing")
    p.add_argument("--seed", type=int, default=0)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "partial failure"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="cgan-strategies", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert prices to excess log returns")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    cg = sub.add_parser("cgan", help="train or inspect a cGAN").add_subparsers(dest="action", required=True)
    p = cg.add_parser("train", help="train a cGAN and keep the lowest-RMSE snapshot")
    _common(p)
    p.add_argument("--size", choices=["small", "medium", "large"], required=True)
    p.add_argument("--out", required=True, help="model directory")
    defaults = ExperimentConfig().cgan
    p.add_argument("--p", type=int, default=defaults.p)
    p.add_argument("--noise-dim", type=int, default=defaults.noise_dim)
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p.add_argument("--snap", type=int, default=defaults.snap)
    p.add_argument("--samples", type=int, default=defaults.eval_samples, help="C, samples per RMSE evaluation")
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.set_defaults(func=cmd_cgan_train)

    p = cg.add_parser("diagnose", help="write plot-ready diagnostics for a trained model")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--max-lag", type=int, default=63)
    p.set_defaults(func=cmd_cgan_diagnose)

    p = sub.add_parser("ensemble", help="bagged ensembles").add_subparsers(dest="action", required=True)
    p = p.add_parser("run", help="build an ensemble and test it on the holdout")
    _common(p)
    p.add_argument("--resampler", type=_choice(CASE1_RESAMPLERS), required=True)
    p.add_argument("--learner", type=_kind, required=True)
    p.add_argument("--B", type=int, nargs="+", default=[20], help="ensemble sizes; members are shared")
    p.add_argument("--model", help="trained cGAN directory (cGAN resamplers)")
    p.add_argument("--p", type=int, default=252)
    p.add_argument("--block-size", type=int, default=20, help="expected stationary bootstrap block")
    p.add_argument("--param", type=_param, action="append", default=[], help="learner hyperparameter key=value")
    p.add_argument("--out", required=True, help="report JSON; a CSV row file and curves CSV are written beside it")
    p.set_defaults(func=cmd_ensemble_run)

    p = sub.add_parser("finetune", help="hyperparameter search").add_subparsers(dest="action", required=True)
    p = p.add_parser("run", help="grid search under one validation scheme and test the winner")
    _common(p)
    p.add_argument("--scheme", type=_choice(CASE2_SCHEMES), required=True)
    p.add_argument("--learner", type=_kind, required=True)
    p.add_argument("--model", help="trained cGAN directory (cGAN schemes)")
    p.add_argument("--grid", type=_grid_arg, help="YAML/JSON mapping overriding the default grid")
    p.add_argument("--p", type=int, default=252)
    c2 = ExperimentConfig().case2
    p.add_argument("--window", type=int, default=c2.sliding_window)
    p.add_argument("--stride", type=int, default=c2.sliding_stride)
    p.add_argument("--block-size", type=int, default=c2.block_size)
    p.add_argument("--gap", type=int, default=c2.hv_gap)
    p.add_argument("--k", type=int, default=c2.kfold_k)
    p.add_argument("--val", type=int, default=c2.one_split_val, help="validation length for one-split and resampled paths")
    p.add_argument("--B", type=int, default=c2.cgan_B, help="resampled paths for stat-boot and cGAN schemes")
    p.add_argument("--expected-block", type=int, default=c2.bootstrap_block)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_finetune_run)

    p = sub.add_parser("report", help="cross-asset statistics").add_subparsers(dest="action", required=True)
    p = p.add_parser("aggregate", help="summaries, quantile table and rank table from report CSVs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="sharpe", choices=["sharpe", "calmar", "mdd", "rmse"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_report_aggregate)

    p = sub.add_parser("experiment", help="run a full case from a config file")
    p.add_argument("case", choices=["case1", "case2", "all"])
    p.add_argument("--config", help="YAML config; omitted keys keep the protocol defaults")
    p.add_argument("--input", action="append", default=None, help="asset CSV (repeatable); overrides config inputs")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help=f"worker processes (env {ex.WORKERS_ENV} takes precedence)")
    p.set_defaults(func=cmd_experiment)
    return parser


# --------------------------------------------------------------------------- commands


def cmd_ingest(args):
    write_returns_csv(compute_excess_log_returns(read_price_csv(args.input)), args.out)
    return EXIT_OK


def cmd_cgan_train(args):
    cfg = from_dict({"holdout": args.holdout, "seed": args.seed, "cgan": {
        "p": args.p, "noise_dim": args.noise_dim, "epochs": args.epochs, "batch_size": args.batch_size,
        "snap": args.snap, "eval_samples": args.samples, "learning_rate": args.lr}})
    asset = ex.load_asset(args.input, cfg.holdout)
    model = train_and_select(asset.in_sample, ex.cgan_config(cfg, args.size), args.seed)
    model.save(args.out)
    log.info("selected epoch %d, rmse %.6g", model.selected.epoch, model.selected.rmse)
    return EXIT_OK


def cmd_cgan_diagnose(args):
    asset = ex.load_asset(args.input, args.holdout)
    ex.diagnose(CganModel.load(args.model), asset.in_sample, args.out, args.paths, args.max_lag, args.seed)
    return EXIT_OK


def _models(args, name):
    if not name.startswith("cgan"):
        return None
    if not args.model:
        raise ConfigError(f"{name} needs --model pointing to a trained cGAN")
    return {name.split("_", 1)[1]: CganModel.load(args.model)}


def _beside(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def cmd_ensemble_run(args):
    hp = {**ENSEMBLE_LEARNERS.get(args.learner, {}), **dict(args.param)}
    cfg = from_dict({"holdout": args.holdout, "p": args.p, "seed": args.seed, "case1": {
        "resamplers": [args.resampler], "B": sorted(set(args.B)), "block_size": args.block_size,
        "learners": {args.learner: hp}}})
    asset = ex.load_asset(args.input, cfg.holdout)
    res = ex.case1_asset(asset, cfg, models=_models(args, args.resampler))
    ex.write_json(args.out, {"schema_version": SCHEMA_VERSION, "config_hash": cfg.config_hash(),
                             "reports": res["rows"]})
    ex.write_csv(_beside(args.out, ".csv"), ex.ROW_COLUMNS, res["rows"])
    ex.write_csv(_beside(args.out, "_curves.csv"), ex.CURVE_COLUMNS, res["curves"])
    return EXIT_OK


def cmd_finetune_run(args):
    grid = args.grid or TUNING_GRIDS.get(args.learner) or {k: [v] for k, v in DEFAULTS[args.learner].items()}
    cfg = from_dict({"holdout": args.holdout, "p": args.p, "seed": args.seed, "case2": {
        "schemes": [args.scheme], "grids": {args.learner: grid},
        "sliding_window": args.window, "sliding_stride": args.stride, "block_size": args.block_size,
        "hv_gap": args.gap, "kfold_k": args.k, "one_split_val": args.val, "cgan_val": args.val,
        "bootstrap_B": args.B, "cgan_B": args.B, "bootstrap_block": args.expected_block}})
    asset = ex.load_asset(args.input, cfg.holdout)
    res = ex.case2_asset(asset, cfg, models=_models(args, args.scheme))
    row, result = res["rows"][0], res["grids"][0]
    ex.write_json(args.out, {"schema_version": SCHEMA_VERSION, "config_hash": cfg.config_hash(),
                             "report": row, "search": result})
    ex.write_csv(_beside(args.out, ".csv"), ex.ROW_COLUMNS, res["rows"])
    return EXIT_OK


def cmd_report_aggregate(args):
    ex.report_aggregate(args.inputs, args.out, args.metric, args.alpha)
    return EXIT_OK


def cmd_experiment(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.input is not None:
        cfg.inputs = list(args.input)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    outcomes = []
    if args.case in ("case1", "all"):
        outcomes.append(ex.run_case1(cfg))
    if args.case in ("case2", "all"):
        outcomes.append(ex.run_case2(cfg))
    for o in outcomes:
        for f in o.failures:
            print(f"failed: {f['asset']}: {f['error']}: {f['message']}", file=sys.stderr)
    return max(o.exit_code for o in outcomes)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InsufficientHistoryError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
