import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from cgan_strategies.cli import main

from conftest import SMALL_CONFIG, write_asset

TRAIN = ["--p", "5", "--noise-dim", "5", "--epochs", "100", "--snap", "50", "--samples", "3", "--lr", "0.05"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    write_asset(d / "x.csv", 500, seed=3)
    assert main(["cgan", "train", "--input", str(d / "x.csv"), "--holdout", "150", "--size", "small",
                 "--out", str(d / "model"), *TRAIN]) == 0
    return d


def test_ingest(tmp_path):
    prices = tmp_path / "p.csv"
    prices.write_text("date,price\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n")
    assert main(["ingest", "--input", str(prices), "--out", str(tmp_path / "r.csv")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [float(r["return"]) for r in rows] == pytest.approx([np.log(1.1), np.log(0.9)])


def test_cgan_train_and_diagnose(workdir):
    assert (workdir / "model" / "model.json").exists()
    out = workdir / "diag"
    assert main(["cgan", "diagnose", "--input", str(workdir / "x.csv"), "--holdout", "150",
                 "--model", str(workdir / "model"), "--out", str(out), "--paths", "2", "--max-lag", "5"]) == 0
    assert {p.name for p in out.iterdir()} == {"rmse_curve.csv", "sample_paths.csv", "cum_returns.csv",
                                               "acf.csv", "pacf.csv"}


def test_ensemble_run(workdir):
    out = workdir / "ens" / "report.json"
    assert main(["ensemble", "run", "--input", str(workdir / "x.csv"), "--holdout", "150", "--p", "5",
                 "--resampler", "cgan-small", "--model", str(workdir / "model"), "--learner", "reg_tree",
                 "--B", "2", "3", "--param", "max_depth=2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert [r["B"] for r in rep["reports"]] == [2, 3]
    assert (workdir / "ens" / "report_curves.csv").exists()


def test_finetune_and_aggregate(workdir):
    outs = []
    for scheme in ("naive", "kfold", "stat_boot"):
        out = workdir / "ft" / f"{scheme}.json"
        assert main(["finetune", "run", "--input", str(workdir / "x.csv"), "--holdout", "150", "--p", "5",
                     "--scheme", scheme, "--learner", "ridge", "--grid", "{shrinkage: [0.1, 1.0]}",
                     "--k", "3", "--val", "100", "--B", "2", "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["search"]["scheme"] == scheme and res["report"]["B"] == ""
        outs.append(str(out.with_suffix(".csv")))
    agg = workdir / "agg"
    assert main(["report", "aggregate", "--inputs", *outs, "--out", str(agg)]) == 0
    assert (agg / "quantiles.csv").exists()
    # a single asset cannot support a Friedman test; the table says so instead of failing
    tab = json.loads((agg / "rank_table.json").read_text())
    assert "skipped" in tab["tables"]["ridge"]


def test_experiment_command(tmp_path):
    cfg = dict(SMALL_CONFIG, case1={**SMALL_CONFIG["case1"], "resamplers": ["stat_boot"]})
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(cfg))
    write_asset(tmp_path / "a.csv", 500, seed=5)
    write_asset(tmp_path / "tiny.csv", 50, seed=5)
    args = ["experiment", "case1", "--config", str(tmp_path / "c.yaml"), "--output-dir", str(tmp_path / "o")]
    assert main(args + ["--input", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--input", str(tmp_path / "a.csv"), "--input", str(tmp_path / "tiny.csv")]) == 2


def _exit_code(argv):
    # argparse reports usage errors by raising SystemExit
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize("argv", [
    ["cgan", "train", "--input", "nope.csv", "--size", "small", "--out", "m"],
    ["experiment", "case1", "--config", "missing.yaml"],
    ["finetune", "run", "--input", "x.csv", "--scheme", "walk-forward", "--learner", "ridge", "--out", "o"],
    ["ensemble", "run", "--input", "x.csv", "--resampler", "stat_boot", "--learner", "svm", "--out", "o"],
    [],
])
def test_bad_usage_exits_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert _exit_code(argv) == 1


def test_cgan_scheme_without_model(workdir):
    assert main(["finetune", "run", "--input", str(workdir / "x.csv"), "--holdout", "150", "--p", "5",
                 "--scheme", "cgan_small", "--learner", "ridge", "--out", str(workdir / "o.json")]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cgan_strategies", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("ingest", "cgan", "ensemble", "finetune", "report", "experiment"):
        assert cmd in res.stdout
