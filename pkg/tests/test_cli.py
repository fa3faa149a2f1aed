import csv
import json

import numpy as np
import pytest

from specpath.cli import main
from specpath.data_io import Dataset, load_model, r2, save_csv, split
from specpath.synthetic import make_synthetic


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def synthetic_csv(workdir):
    path = workdir / "synthetic.csv"
    save_csv(make_synthetic(2000, [(1.0, [2, -1])], seed=1), path)
    return path


@pytest.fixture(scope="module")
def fitted(workdir, synthetic_csv):
    model = workdir / "model.json"
    assert main(["fit", "--data", str(synthetic_csv), "--target", "y", "--model", str(model)]) == 0
    return model


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_fit_synthetic(workdir, synthetic_csv, fitted, capsys):
    code, out = run_json(capsys, ["fit", "--data", str(synthetic_csv), "--target", "y",
                                  "--model", str(workdir / "again.json"), "--format", "json"])
    assert code == 0
    assert out["paths"] <= 8 and out["test_r2"] >= 0.999
    trace = (workdir / "again.trace.jsonl").read_text().splitlines()
    assert len(trace) == len(load_model(fitted).fit_trace)
    assert (workdir / "again.json").read_bytes() == fitted.read_bytes()


def test_fit_json_has_no_timestamps(fitted):
    doc = json.loads(fitted.read_text())
    assert not any("time" in k for k in doc)
    assert not any("time" in k or "second" in k for rec in doc["fit_trace"] for k in rec)


def test_missing_target_is_usage_error(synthetic_csv, capsys):
    with pytest.raises(SystemExit) as info:
        main(["fit", "--data", str(synthetic_csv)])
    assert info.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_rejected(synthetic_csv):
    with pytest.raises(SystemExit) as info:
        main(["fit", "--data", str(synthetic_csv), "--target", "y", "--bogus"])
    assert info.value.code == 1


def test_bad_config_and_data_exit_codes(workdir, synthetic_csv, capsys):
    assert main(["fit", "--data", str(synthetic_csv), "--target", "y", "--max-paths", "0"]) == 1
    assert main(["fit", "--data", str(workdir / "none.csv"), "--target", "y"]) == 2
    assert main(["fit", "--data", str(synthetic_csv), "--target", "nope"]) == 2
    assert "available columns" in capsys.readouterr().err


def test_predict_reproduces_training_r2(workdir, synthetic_csv, fitted):
    out = workdir / "pred.csv"
    assert main(["predict", "--model", str(fitted), "--data", str(synthetic_csv), "--out", str(out)]) == 0
    with out.open() as fh:
        yhat = np.array([float(r["prediction"]) for r in csv.DictReader(fh)])
    data = make_synthetic(2000, [(1.0, [2, -1])], seed=1)
    tr = split(2000, 42).train
    model = load_model(fitted)
    expected = r2(data.target[tr], model.predict(data.features[tr]))
    greedy = [r for r in model.fit_trace if r["stage"] == "resweep"][-1]
    assert r2(data.target[tr], yhat[tr]) == pytest.approx(expected, abs=1e-12)
    assert r2(data.target[tr], yhat[tr]) == pytest.approx(greedy["train_r2"], abs=1e-12)


def test_eval_is_row_order_independent(workdir, synthetic_csv, fitted, capsys):
    _, a = run_json(capsys, ["eval", "--model", str(fitted), "--data", str(synthetic_csv),
                             "--target", "y", "--format", "json"])
    data = make_synthetic(2000, [(1.0, [2, -1])], seed=1)
    perm = np.random.default_rng(0).permutation(2000)
    shuffled = workdir / "shuffled.csv"
    save_csv(Dataset(data.features[perm], data.target[perm], data.feature_names, "y"), shuffled)
    _, b = run_json(capsys, ["eval", "--model", str(fitted), "--data", str(shuffled),
                             "--target", "y", "--format", "json"])
    assert a["r2"] == pytest.approx(b["r2"], abs=1e-12)
    assert a["nrmse"] == pytest.approx(b["nrmse"], abs=1e-12)


def test_dimension_mismatch_exit_2(workdir, fitted, capsys):
    wide = workdir / "wide.csv"
    wide.write_text("a,b,c,y\n1,2,3,4\n2,3,4,5\n")
    assert main(["eval", "--model", str(fitted), "--data", str(wide), "--target", "y"]) == 2
    assert "x0" in capsys.readouterr().err
    narrow = workdir / "narrow.csv"
    narrow.write_text("x0,y\n1,2\n")
    assert main(["predict", "--model", str(fitted), "--data", str(narrow)]) == 2


def test_corrupt_model_exit_2(workdir, synthetic_csv):
    bad = workdir / "bad.json"
    bad.write_text('{"format_version": 1, "d": 2')
    assert main(["explain", "--model", str(bad)]) == 2
    bad.write_text('{"format_version": 7}')
    assert main(["importance", "--model", str(bad), "--data", str(synthetic_csv)]) == 2


def test_explain_and_top_n(fitted, capsys):
    assert main(["explain", "--model", str(fitted), "--top", "100"]) == 0
    text = capsys.readouterr().out
    n_terms = text.splitlines()[0].count("cos(")
    assert n_terms == load_model(fitted).n_paths
    assert "where" in text and "…" not in text.splitlines()[0]


def test_explain_intercept_only(workdir, capsys):
    flat = workdir / "flat.csv"
    rows = "\n".join(f"{i},{(i * 7) % 5},3.0" for i in range(30))
    flat.write_text("a,b,y\n" + rows + "\n")
    model = workdir / "flat.json"
    with pytest.warns(UserWarning):
        assert main(["fit", "--data", str(flat), "--target", "y", "--model", str(model)]) == 0
    capsys.readouterr()
    assert main(["explain", "--model", str(model)]) == 0
    assert capsys.readouterr().out.strip() == "3.00"


def test_explain_with_data_prints_importance(fitted, synthetic_csv, capsys):
    assert main(["explain", "--model", str(fitted), "--data", str(synthetic_csv), "--target", "y"]) == 0
    out = capsys.readouterr().out
    scores = json.loads(out[out.index("{"):])
    assert set(scores) == {"x0", "x1"}


def test_importance_percentages(workdir, fitted, synthetic_csv, capsys):
    out = workdir / "imp.csv"
    code, doc = run_json(capsys, ["importance", "--model", str(fitted), "--data", str(synthetic_csv),
                                  "--target", "y", "--format", "json", "--out", str(out)])
    assert code == 0
    assert 100 * sum(doc["importance"].values()) == pytest.approx(100.0, abs=1e-9)
    assert main(["importance", "--model", str(fitted), "--data", str(synthetic_csv), "--target", "y"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum(float(l.split()[-1].rstrip("%")) for l in lines) == pytest.approx(100.0, abs=0.02)
    assert out.read_text().startswith("feature,importance\n")


def test_trace_report_with_capacity(workdir, fitted, synthetic_csv):
    out = workdir / "trace.csv"
    assert main(["trace-report", "--model", str(fitted), "--data", str(synthetic_csv),
                 "--target", "y", "--out", str(out)]) == 0
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    kinds = {r["kind"] for r in rows}
    assert kinds == {"trace", "capacity"}
    capacity = [r for r in rows if r["kind"] == "capacity"]
    assert len(capacity) == load_model(fitted).n_paths + 1
    assert main(["trace-report", "--model", str(fitted), "--data", str(synthetic_csv)]) == 1


def test_benchmark_three_tiny_datasets(workdir, capsys):
    lines = ["dataset,path,target"]
    for i, terms in enumerate([[(1.0, [1, 0])], [(0.5, [0, 2, 0])], [(2.0, [1, -1])]]):
        save_csv(make_synthetic(120, terms, noise_std=0.01, seed=i), workdir / f"tiny{i}.csv")
        lines.append(f"tiny{i},tiny{i}.csv,y")
    lines.append("broken,absent.csv,y")
    manifest = workdir / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n")
    report = workdir / "bench.csv"
    assert main(["benchmark", "--manifest", str(manifest), "--out", str(report), "--baseline", "ridge"]) == 0
    with report.open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["dataset"] for r in rows] == ["tiny0", "tiny1", "tiny2", "broken"]
    assert all(r["status"] == "ok" for r in rows[:3]) and rows[3]["status"].startswith("error")
    for r in rows[:3]:
        assert {"N", "D", "paths", "test_r2", "seconds", "ridge_test_r2"} <= set(r)


def test_seed_sweep_rows(workdir, capsys):
    path = workdir / "sweep.csv"
    save_csv(make_synthetic(150, [(1.0, [1, 1, 0])], noise_std=0.05, seed=9), path)
    code, rows = run_json(capsys, ["sweep", "--mode", "seeds", "--data", str(path), "--target", "y",
                                   "--seeds", "0-9", "--format", "json"])
    assert code == 0 and len(rows) == 10
    assert all(r["status"] == "ok" and np.isfinite(r["test_r2"]) for r in rows)


def test_lambda_sweep_rows(workdir, capsys):
    path = workdir / "lam.csv"
    save_csv(make_synthetic(150, [(1.0, [1, 1, 0])], noise_std=0.05, seed=9), path)
    code, rows = run_json(capsys, ["sweep", "--mode", "lambda", "--data", str(path), "--target", "y",
                                   "--lambda-grid", "1e-4,1e-2,1", "--format", "json"])
    assert code == 0 and [r["lambda"] for r in rows] == [1e-4, 1e-2, 1.0]


def test_ridge_baseline_fit(synthetic_csv, capsys):
    code, out = run_json(capsys, ["fit", "--data", str(synthetic_csv), "--target", "y",
                                  "--baseline", "ridge", "--format", "json"])
    assert code == 0 and out["model"] == "ridge" and out["test_r2"] < 0.999
