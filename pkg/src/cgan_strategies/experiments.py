"""Experiment runners: ensembles (Case I), fine-tuning (Case II), diagnostics, aggregation.

Every output is a pure function of the config and its master seed. Seeds for
each unit of work are derived from names rather than positions, so adding an
asset or a scheme does not perturb the others. Assets are processed in worker
processes when asked to, and always merged back in input order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cgan import CganConfig, CganModel, sample_path, train_and_select
from .config import SCHEMA_VERSION, ExperimentConfig, dump_config
from .ensemble import build_ensemble, member_predictions
from .errors import InsufficientHistoryError
from .finetune import finalize_and_test, grid_search, holdout_dataset
from .metrics import REPORT_COLUMNS, backtest
from .resampling import (
    bootstrap_splits, cgan_splits, member_seed, split_block, split_hv_block,
    split_kfold, split_naive, split_one_split, split_sliding,
)
from .stats import QUANTILES, rank_table, robust_summary, wilcoxon_rank_sum
from .strategies import LearnerSpec, expand_grid
from .timeseries import ReturnSeries, acf, ci_bounds, load_returns, pacf

log = logging.getLogger(__name__)

WORKERS_ENV = "CGAN_STRATEGIES_WORKERS"
ROW_COLUMNS = REPORT_COLUMNS + ["config_hash", "schema_version"]
CURVE_COLUMNS = ["asset", "scheme", "strategy", "b", "sharpe", "calmar", "rmse"]
METRICS = ("sharpe", "calmar", "mdd", "rmse")


def name_key(*names) -> tuple:
    """Stable integer key for a tuple of names, usable as a seed spawn key."""
    return tuple(zlib.crc32(str(n).encode()) for n in names)


def derived_seed(master, *names) -> int:
    return member_seed(master, *name_key(*names))


@dataclass(frozen=True)
class Asset:
    name: str
    in_sample: ReturnSeries
    holdout: ReturnSeries


def load_asset(path, holdout) -> Asset:
    """Read a returns or price CSV and cut off the last ``holdout`` returns."""
    series = load_returns(path)
    if len(series) <= holdout + 1:
        raise InsufficientHistoryError(f"{path}: {len(series)} returns cannot cover a holdout of {holdout}")
    cut = len(series) - holdout
    return Asset(Path(path).stem, series.slice(0, cut), series.slice(cut, None))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows):
    """Write dict rows with a fixed column order and ``\\n`` line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def read_report_rows(paths):
    """Report rows from one or more CSV files, metrics parsed as floats (NaN if blank)."""
    rows = []
    for path in paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(REPORT_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise ValueError(f"{path}: missing report columns {sorted(missing)}")
            for row in reader:
                for m in METRICS:
                    row[m] = float(row[m]) if row[m] != "" else float("nan")
                rows.append(row)
    return rows


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# --------------------------------------------------------------------------- cGAN models


def cgan_config(cfg: ExperimentConfig, size) -> CganConfig:
    c = cfg.cgan
    return CganConfig.for_size(
        size, p=c.p, noise_dim=c.noise_dim, epochs=c.epochs, batch_size=c.batch_size,
        snap=c.snap, eval_samples=c.eval_samples, learning_rate=c.learning_rate,
    )


def get_cgan(asset: Asset, cfg: ExperimentConfig, size, model_root=None) -> CganModel:
    """Train the ``size`` cGAN for an asset, reusing a saved model with the same config and seed."""
    config = cgan_config(cfg, size)
    seed = derived_seed(cfg.seed, "cgan", asset.name, size)
    directory = Path(model_root) / asset.name / size if model_root is not None else None
    if directory is not None and (directory / "model.json").exists():
        model = CganModel.load(directory)
        if model.config == config and model.seed == seed:
            return model
    model = train_and_select(asset.in_sample, config, seed)
    if directory is not None:
        model.save(directory)
    return model


def _size(name):
    return name.split("_", 1)[1]


# --------------------------------------------------------------------------- Case I


def _row(cfg, asset, scheme, strategy, B, report):
    row = {"asset": asset, "scheme": scheme, "strategy": strategy, "B": B,
           "config_hash": cfg.config_hash(), "schema_version": SCHEMA_VERSION}
    row.update(report.summary())
    return row


def incremental_curves(member_preds, actual):
    """Sharpe, Calmar and RMSE of the first ``b`` members' average, for every ``b``."""
    csum = np.cumsum(member_preds, axis=0)
    out = []
    for b in range(1, len(member_preds) + 1):
        rep = backtest(actual, csum[b - 1] / b)
        out.append({"b": b, "sharpe": rep.sharpe, "calmar": rep.calmar, "rmse": rep.rmse})
    return out


def _model_for(name, asset, cfg, model_root, models):
    if not name.startswith("cgan"):
        return None
    size = _size(name)
    if models and size in models:
        return models[size]
    return get_cgan(asset, cfg, size, model_root)


def case1_asset(asset: Asset, cfg: ExperimentConfig, model_root=None, models=None):
    """Report rows and per-b curves for one asset over every resampler and learner.

    ``models`` maps size names to already trained cGANs; missing ones are trained.
    """
    c1 = cfg.case1
    data = holdout_dataset(asset.in_sample, asset.holdout, cfg.p)
    B_max = max(c1.B)
    rows, curves = [], []
    for resampler in c1.resamplers:
        model = _model_for(resampler, asset, cfg, model_root, models)
        for kind, hp in c1.learners.items():
            seed = derived_seed(cfg.seed, "case1", asset.name, resampler, kind)
            ens = build_ensemble(resampler, LearnerSpec(kind, dict(hp)), asset.in_sample, B_max, seed=seed,
                                 p=cfg.p, cgan_model=model, expected_block=c1.block_size)
            M = member_predictions(ens, data.features)
            for B in c1.B:
                rows.append(_row(cfg, asset.name, resampler, kind, B, backtest(data.targets, M[:B].mean(axis=0))))
            for point in incremental_curves(M, data.targets):
                curves.append({"asset": asset.name, "scheme": resampler, "strategy": kind, **point})
    return {"rows": rows, "curves": curves}


def summarize_case1(rows, compare=("cgan_large", "stat_boot")):
    """Median/MAD per (resampler, learner, B, metric) and rank-sum p-values between two resamplers."""
    groups = {}
    for r in rows:
        groups.setdefault((r["scheme"], r["strategy"], str(r["B"])), []).append(r)
    summary = []
    for (scheme, strategy, B), grp in sorted(groups.items(), key=lambda kv: (kv[0][1], int(kv[0][2]), kv[0][0])):
        for m in METRICS:
            vals = np.array([g[m] for g in grp], dtype=float)
            s = robust_summary(vals) if np.isfinite(vals).any() else {"median": None, "mad": None, "n": 0}
            summary.append({"scheme": scheme, "strategy": strategy, "B": B, "metric": m,
                            "median": s["median"], "mad": s["mad"], "n": s["n"]})
    a_name, b_name = compare
    tests = []
    for strategy, B in sorted({(k[1], k[2]) for k in groups}, key=lambda t: (t[0], int(t[1]))):
        a, b = groups.get((a_name, strategy, B)), groups.get((b_name, strategy, B))
        if not a or not b:
            continue
        for m in METRICS:
            try:
                pv = wilcoxon_rank_sum([g[m] for g in a], [g[m] for g in b])
            except ValueError:
                pv = None
            tests.append({"strategy": strategy, "B": B, "metric": m, "a": a_name, "b": b_name, "p_value": pv})
    return summary, tests


# --------------------------------------------------------------------------- Case II


def synthetic_h(requested, path_len):
    return max(1, min(requested, path_len // 2))


def make_scheme(name, asset: Asset, cfg: ExperimentConfig, seed, model=None):
    """Split plan or synthetic split generator for a validation scheme name."""
    c2 = cfg.case2
    n = len(asset.in_sample) - cfg.p
    if name == "naive":
        return split_naive(n)
    if name == "one_split":
        return split_one_split(n, c2.one_split_val)
    if name == "sliding":
        return split_sliding(n, c2.sliding_window, c2.sliding_stride)
    if name == "block":
        return split_block(n, c2.block_size)
    if name == "hv_block":
        return split_hv_block(n, c2.block_size, c2.hv_gap)
    if name == "kfold":
        return split_kfold(n, c2.kfold_k)
    if name == "stat_boot":
        h = synthetic_h(c2.cgan_val, len(asset.in_sample))
        return bootstrap_splits(asset.in_sample, c2.bootstrap_B, h, c2.bootstrap_block, seed)
    if name.startswith("cgan"):
        h = synthetic_h(c2.cgan_val, len(asset.in_sample) - model.p)
        return cgan_splits(model, asset.in_sample, c2.cgan_B, h, seed)
    raise ValueError(f"unknown validation scheme {name!r}")


def case2_asset(asset: Asset, cfg: ExperimentConfig, model_root=None, models=None):
    """Grid results and holdout rows for one asset over every scheme and learner."""
    rows, grids = [], []
    for scheme in cfg.case2.schemes:
        model = _model_for(scheme, asset, cfg, model_root, models)
        for kind, grid in cfg.case2.grids.items():
            seed = derived_seed(cfg.seed, "case2", asset.name, scheme, kind)
            plan = make_scheme(scheme, asset, cfg, seed, model)
            result = grid_search(plan, expand_grid(kind, grid), asset.in_sample, p=cfg.p, seed=seed, scheme_name=scheme)
            report = finalize_and_test(result, asset.in_sample, asset.holdout, strict=False)
            rows.append(_row(cfg, asset.name, scheme, kind, "", report))
            grids.append({"asset": asset.name, "learner": kind, **result.to_dict()})
    return {"rows": rows, "grids": grids}


def quantile_table(rows, metrics=("sharpe", "calmar")):
    """Quantiles across assets, one line per (learner, metric, quantile) and one column per scheme."""
    schemes = list(dict.fromkeys(r["scheme"] for r in rows))
    learners = list(dict.fromkeys(r["strategy"] for r in rows))
    out = []
    for learner in learners:
        for m in metrics:
            q = {}
            for s in schemes:
                vals = [r[m] for r in rows if r["strategy"] == learner and r["scheme"] == s]
                vals = np.asarray(vals, dtype=float)
                q[s] = robust_summary(vals)["quantiles"] if np.isfinite(vals).any() else None
            for level in QUANTILES:
                line = {"strategy": learner, "metric": m, "quantile": f"{level}%"}
                for s in schemes:
                    line[s] = q[s][f"{level}%"] if q[s] else None
                out.append(line)
    return schemes, out


def results_matrix(rows, learner, metric="sharpe"):
    """Assets x schemes matrix for one learner, in first-seen order."""
    sel = [r for r in rows if r["strategy"] == learner]
    assets = list(dict.fromkeys(r["asset"] for r in sel))
    schemes = list(dict.fromkeys(r["scheme"] for r in sel))
    M = np.full((len(assets), len(schemes)), np.nan)
    for r in sel:
        M[assets.index(r["asset"]), schemes.index(r["scheme"])] = r[metric]
    return assets, schemes, M


def rank_tables(rows, metric="sharpe", alpha=0.05):
    """Friedman/Holm table per learner; learners with too few complete assets are reported as skipped."""
    out = {}
    for learner in dict.fromkeys(r["strategy"] for r in rows):
        _, schemes, M = results_matrix(rows, learner, metric)
        try:
            out[learner] = rank_table(M, schemes, alpha=alpha)
        except ValueError as exc:
            out[learner] = {"skipped": str(exc)}
    return {"metric": metric, "alpha": alpha, "schema_version": SCHEMA_VERSION, "tables": out}


# --------------------------------------------------------------------------- batch driving


def resolve_workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else max(1, int(cfg.workers))


def _asset_job(case, path, cfg, model_root):
    try:
        asset = load_asset(path, cfg.holdout)
        fn = case1_asset if case == "case1" else case2_asset
        return {"asset": asset.name, "path": str(path), "ok": True, **fn(asset, cfg, model_root)}
    except Exception as exc:  # isolate: one bad asset must not sink the batch
        log.warning("asset %s failed: %s: %s", path, type(exc).__name__, exc)
        return {"asset": Path(path).stem, "path": str(path), "ok": False,
                "error": type(exc).__name__, "message": str(exc)}


def run_assets(case, cfg: ExperimentConfig, model_root=None):
    """Per-asset results in input order, computed serially or in worker processes."""
    workers = resolve_workers(cfg)
    jobs = [(case, p, cfg, model_root) for p in cfg.inputs]
    if workers == 1 or len(jobs) <= 1:
        return [_asset_job(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_asset_job, *j) for j in jobs]
        return [f.result() for f in futures]


@dataclass
class RunOutcome:
    output_dir: Path
    n_assets: int
    failures: list = field(default_factory=list)

    @property
    def exit_code(self):
        return 2 if self.failures else 0


def _finish(out, cfg, results):
    failures = [{k: r[k] for k in ("asset", "path", "error", "message")} for r in results if not r["ok"]]
    write_json(out / "failures.json", {"schema_version": SCHEMA_VERSION, "failures": failures})
    (out / "config.yaml").write_text(dump_config(cfg), encoding="utf-8")
    write_json(out / "run.json", {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.config_hash(),
        "assets": [r["asset"] for r in results if r["ok"]],
        "failed": [f["asset"] for f in failures],
    })
    return RunOutcome(out, len(results), failures)


def run_case1(cfg: ExperimentConfig) -> RunOutcome:
    """Bagged ensembles per asset x resampler x learner x B, plus cross-asset summaries."""
    out = Path(cfg.output_dir) / "case1"
    out.mkdir(parents=True, exist_ok=True)
    if not cfg.inputs:
        log.warning("no input assets configured; writing an empty report")
    results = run_assets("case1", cfg, Path(cfg.output_dir) / "models")
    rows = [row for r in results if r["ok"] for row in r["rows"]]
    write_csv(out / "reports.csv", ROW_COLUMNS, rows)
    write_csv(out / "curves.csv", CURVE_COLUMNS, [c for r in results if r["ok"] for c in r["curves"]])
    summary, tests = summarize_case1(rows)
    write_csv(out / "summary.csv", ["scheme", "strategy", "B", "metric", "median", "mad", "n"], summary)
    write_csv(out / "wilcoxon.csv", ["strategy", "B", "metric", "a", "b", "p_value"], tests)
    return _finish(out, cfg, results)


def run_case2(cfg: ExperimentConfig) -> RunOutcome:
    """Grid search per asset x scheme x learner with holdout reports and rank statistics."""
    out = Path(cfg.output_dir) / "case2"
    out.mkdir(parents=True, exist_ok=True)
    if not cfg.inputs:
        log.warning("no input assets configured; writing an empty report")
    results = run_assets("case2", cfg, Path(cfg.output_dir) / "models")
    rows = [row for r in results if r["ok"] for row in r["rows"]]
    write_csv(out / "reports.csv", ROW_COLUMNS, rows)
    write_json(out / "grids.json", [g for r in results if r["ok"] for g in r["grids"]])
    aggregate_rows(rows, out)
    return _finish(out, cfg, results)


def aggregate_rows(rows, out, metric="sharpe", alpha=0.05):
    """Quantile table CSV and rank-table JSON from report rows."""
    out = Path(out)
    schemes, table = quantile_table(rows)
    write_csv(out / "quantiles.csv", ["strategy", "metric", "quantile"] + schemes, table)
    ranks = rank_tables(rows, metric, alpha)
    write_json(out / "rank_table.json", ranks)
    return table, ranks


def report_aggregate(inputs, out, metric="sharpe", alpha=0.05):
    """Aggregate report CSVs produced by ensemble or fine-tuning runs."""
    rows = read_report_rows(inputs)
    out = Path(out)
    summary, tests = summarize_case1([r for r in rows if r["B"] != ""])
    write_csv(out / "summary.csv", ["scheme", "strategy", "B", "metric", "median", "mad", "n"], summary)
    write_csv(out / "wilcoxon.csv", ["strategy", "B", "metric", "a", "b", "p_value"], tests)
    return aggregate_rows([r for r in rows if r["B"] == ""], out, metric, alpha)


# --------------------------------------------------------------------------- diagnostics


def diagnose(model: CganModel, returns, out, n_paths=10, max_lag=63, seed=0):
    """Plot-ready CSVs: RMSE curve, sample paths, cumulative returns, ACF/PACF with bands."""
    out = Path(out)
    r = np.asarray(getattr(returns, "returns", returns), dtype=float)
    write_csv(out / "rmse_curve.csv", ["epoch", "rmse"],
              [{"epoch": e, "rmse": v} for e, v in model.rmse_curve])
    paths = np.vstack([sample_path(model, r, "recursive", seed=member_seed(seed, k)) for k in range(n_paths)])
    real = r[model.p:]
    cols = ["t", "real"] + [f"sample_{k}" for k in range(n_paths)]
    write_csv(out / "sample_paths.csv", cols,
              [{"t": t, "real": real[t], **{f"sample_{k}": paths[k, t] for k in range(n_paths)}}
               for t in range(len(real))])
    cum_real, cum_paths = np.cumsum(real), np.cumsum(paths, axis=1)
    write_csv(out / "cum_returns.csv", cols,
              [{"t": t, "real": cum_real[t], **{f"sample_{k}": cum_paths[k, t] for k in range(n_paths)}}
               for t in range(len(real))])
    lo, hi = ci_bounds(len(real))
    for fname, fn in (("acf.csv", acf), ("pacf.csv", pacf)):
        a_real = fn(real, max_lag)
        a_samp = np.mean([fn(p, max_lag) for p in paths], axis=0)
        write_csv(out / fname, ["lag", "real", "sample_mean", "ci_lower", "ci_upper"],
                  [{"lag": k, "real": a_real[k], "sample_mean": a_samp[k], "ci_lower": lo, "ci_upper": hi}
                   for k in range(1, max_lag + 1)])
    return out
