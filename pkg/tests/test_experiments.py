import copy
import csv
import json

import numpy as np
import pytest

from cgan_strategies import experiments as ex
from cgan_strategies.config import from_dict
from cgan_strategies.stats import rank_table

from conftest import SMALL_CONFIG, write_asset


def _cfg(tmp_path, n_assets=3, **over):
    data = copy.deepcopy(SMALL_CONFIG)
    data["inputs"] = [str(write_asset(tmp_path / f"a{i}.csv", 500, seed=40 + i)) for i in range(n_assets)]
    data["output_dir"] = str(tmp_path / "out")
    for k, v in over.items():
        data[k] = v
    return from_dict(data)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_derived_seed_is_name_based():
    assert ex.derived_seed(0, "a", "b") == ex.derived_seed(0, "a", "b")
    assert ex.derived_seed(0, "a", "b") != ex.derived_seed(0, "b", "a")
    assert ex.derived_seed(0, "a") != ex.derived_seed(1, "a")


def test_empty_inputs(tmp_path):
    cfg = from_dict({"output_dir": str(tmp_path / "o")})
    out = ex.run_case1(cfg)
    assert out.exit_code == 0 and out.n_assets == 0
    assert (tmp_path / "o/case1/reports.csv").read_text().strip() == ",".join(ex.ROW_COLUMNS)


@pytest.fixture(scope="module")
def case1_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("c1")
    cfg = _cfg(tmp)
    return cfg, ex.run_case1(cfg)


def test_case1_schema(case1_run):
    cfg, outcome = case1_run
    assert outcome.exit_code == 0
    rows = _rows(outcome.output_dir / "reports.csv")
    # 3 assets x 2 resamplers x 1 learner x 2 ensemble sizes
    assert len(rows) == 12 and list(rows[0]) == ex.ROW_COLUMNS
    assert {r["scheme"] for r in rows} == {"stat_boot", "cgan_small"}
    assert all(r["config_hash"] == cfg.config_hash() for r in rows)
    assert all(r["sharpe"] != "" for r in rows)
    curves = _rows(outcome.output_dir / "curves.csv")
    assert len(curves) == 3 * 2 * 4
    # the curve at b equals the report for ensemble size B
    r = next(r for r in rows if r["asset"] == "a0" and r["scheme"] == "stat_boot" and r["B"] == "4")
    c = next(c for c in curves if c["asset"] == "a0" and c["scheme"] == "stat_boot" and c["b"] == "4")
    assert float(r["sharpe"]) == float(c["sharpe"])
    tests = _rows(outcome.output_dir / "wilcoxon.csv")
    assert tests == []  # the default comparison needs cgan_large
    assert (outcome.output_dir.parent / "models" / "a0" / "small").is_dir()


def test_case1_summary_medians(case1_run):
    _, outcome = case1_run
    rows = _rows(outcome.output_dir / "reports.csv")
    summ = _rows(outcome.output_dir / "summary.csv")
    line = next(s for s in summ if s["scheme"] == "stat_boot" and s["B"] == "2" and s["metric"] == "sharpe")
    vals = [float(r["sharpe"]) for r in rows if r["scheme"] == "stat_boot" and r["B"] == "2"]
    assert float(line["median"]) == np.median(vals) and line["n"] == "3"


def test_case2_two_schemes(tmp_path):
    cfg = _cfg(tmp_path, n_assets=1, case2={**SMALL_CONFIG["case2"], "schemes": ["naive", "one_split"]})
    outcome = ex.run_case2(cfg)
    rows = _rows(outcome.output_dir / "reports.csv")
    assert [r["scheme"] for r in rows] == ["naive", "one_split"] and all(r["B"] == "" for r in rows)
    grids = json.loads((outcome.output_dir / "grids.json").read_text())
    assert len(grids) == 2
    for g in grids:
        assert g["selected_hyperparams"]["shrinkage"] in (0.01, 1.0)


@pytest.fixture(scope="module")
def case2_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("c2")
    cfg = _cfg(tmp)
    return cfg, ex.run_case2(cfg)


def test_case2_aggregates(case2_run):
    cfg, outcome = case2_run
    assert outcome.exit_code == 0
    rows = _rows(outcome.output_dir / "reports.csv")
    assert len(rows) == 3 * 5
    q = _rows(outcome.output_dir / "quantiles.csv")
    assert len(q) == 5 * 2  # five quantiles for sharpe and calmar
    assert list(q[0])[3:] == cfg.case2.schemes
    tab = json.loads((outcome.output_dir / "rank_table.json").read_text())["tables"]["ridge"]
    parsed = ex.read_report_rows([outcome.output_dir / "reports.csv"])
    _, schemes, M = ex.results_matrix(parsed, "ridge", "sharpe")
    ref = rank_table(M, schemes)
    assert tab["friedman_chi2"] == pytest.approx(ref["friedman_chi2"], rel=1e-12)
    assert [r["method"] for r in tab["rows"]] == [r["method"] for r in ref["rows"]]


def test_rerun_is_byte_identical(tmp_path):
    cfg = _cfg(tmp_path, n_assets=2)
    ex.run_case2(cfg)
    first = {p.name: p.read_bytes() for p in (tmp_path / "out/case2").iterdir()}
    cfg2 = _cfg(tmp_path, n_assets=2)
    cfg2.output_dir = str(tmp_path / "again")
    cfg2.workers = 2
    ex.run_case2(cfg2)
    second = {p.name: p.read_bytes() for p in (tmp_path / "again/case2").iterdir()}
    assert first.keys() == second.keys()
    for name in first:
        if name != "config.yaml":
            assert first[name] == second[name], name


def test_failure_isolated(tmp_path):
    cfg = _cfg(tmp_path, n_assets=1)
    short = write_asset(tmp_path / "short.csv", 100, seed=1)
    cfg.inputs = [str(short)] + cfg.inputs
    cfg.case1.resamplers = ["stat_boot"]
    outcome = ex.run_case1(cfg)
    assert outcome.exit_code == 2
    fail = json.loads((outcome.output_dir / "failures.json").read_text())["failures"]
    assert [f["asset"] for f in fail] == ["short"] and fail[0]["error"] == "InsufficientHistoryError"
    assert {r["asset"] for r in _rows(outcome.output_dir / "reports.csv")} == {"a0"}
    run = json.loads((outcome.output_dir / "run.json").read_text())
    assert run["failed"] == ["short"] and run["assets"] == ["a0"]


def test_workers_env_precedence(monkeypatch):
    cfg = from_dict({"workers": 3})
    assert ex.resolve_workers(cfg) == 3
    monkeypatch.setenv(ex.WORKERS_ENV, "1")
    assert ex.resolve_workers(cfg) == 1


def test_diagnose_outputs(tmp_path):
    cfg = _cfg(tmp_path, n_assets=1)
    asset = ex.load_asset(cfg.inputs[0], cfg.holdout)
    model = ex.get_cgan(asset, cfg, "small", tmp_path / "m")
    ex.diagnose(model, asset.in_sample, tmp_path / "d", n_paths=3, max_lag=10)
    curve = _rows(tmp_path / "d/rmse_curve.csv")
    assert len(curve) == cfg.cgan.epochs // cfg.cgan.snap
    acf_rows = _rows(tmp_path / "d/acf.csv")
    assert len(acf_rows) == 10 and list(acf_rows[0]) == ["lag", "real", "sample_mean", "ci_lower", "ci_upper"]
    assert float(acf_rows[0]["ci_upper"]) == pytest.approx(1.959963984540054 / np.sqrt(len(asset.in_sample) - 5))
    paths = _rows(tmp_path / "d/sample_paths.csv")
    assert len(paths) == len(asset.in_sample) - 5 and len(paths[0]) == 2 + 3
    # cached model is reused rather than retrained
    again = ex.get_cgan(asset, cfg, "small", tmp_path / "m")
    assert again.rmse_curve == model.rmse_curve
