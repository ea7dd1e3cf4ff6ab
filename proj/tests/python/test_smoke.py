"""End-to-end smoke tests for the deepcomfort Python module."""

import json

import pytest

import deepcomfort as dc


@pytest.fixture(scope="module")
def csv_text():
    return dc.synth_csv(n=120, seed=5)


@pytest.fixture(scope="module")
def model_path(tmp_path_factory, csv_text):
    path = tmp_path_factory.mktemp("model") / "model.json"
    hp = json.dumps({"trunk_sizes": [10], "epochs": 6, "dropout_rate": 0.0})
    losses = dc.train_model(csv_text, str(path), hp)
    assert len(losses) == 6
    assert losses[-1] < losses[0]
    return str(path)


def test_exports_are_complete():
    for name in dc.__all__:
        assert hasattr(dc, name)
    assert issubclass(dc.DivergenceError, Exception)


def test_synth_csv_is_seeded(csv_text):
    header = csv_text.splitlines()[0]
    for column in ("indoor_temp", "gender", "TSV", "TPV", "TCV"):
        assert column in header
    assert len(csv_text.splitlines()) == 121  # header + rows
    assert dc.synth_csv(n=120, seed=5) == csv_text
    assert dc.synth_csv(n=120, seed=6) != csv_text


def test_predict_record_distributions(model_path):
    out = dc.predict_record(
        model_path,
        {"indoor_temp": 14.0, "clo": 1.5, "gender": "F"},
    )
    assert set(out) == {"TSV", "TPV", "TCV"}
    for task, classes in (("TSV", 7), ("TPV", 5), ("TCV", 6)):
        probs = out[task]["probs"]
        assert len(probs) == classes
        assert abs(sum(probs) - 1.0) < 1e-9
        assert isinstance(out[task]["value"], int)
        assert isinstance(out[task]["label"], str)


def test_predict_record_rejects_bad_input(model_path):
    with pytest.raises(Exception, match="bogus"):
        dc.predict_record(model_path, {"bogus": 1.0})
    with pytest.raises(Exception, match="numeric"):
        dc.predict_record(model_path, {"indoor_temp": "warm"})


def test_predict_record_imputes_omitted_features(model_path):
    out = dc.predict_record(model_path, {"indoor_temp": 14.0})
    assert set(out) == {"TSV", "TPV", "TCV"}


def test_macro_metrics_anchor():
    # Confusion [[1,1],[0,1]]: both classes land on F1 = 2/3.
    out = dc.macro_metrics([0, 0, 1], [0, 1, 1], 2)
    assert out["precision"][0] == 1.0
    assert out["recall"][0] == 0.5
    assert out["f1"][0] == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert out["avg_f1"] == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert out["averaging"] == "macro"


def test_cross_validate_json_shape(csv_text):
    report = json.loads(
        dc.cross_validate_json(csv_text, model="knn", k=3, seed=1)
    )
    (entry,) = report["reports"]
    assert entry["model"] == "knn"
    assert entry["k"] == 3
    assert entry["tasks"] == ["TSV", "TPV", "TCV"]
    for task in entry["tasks"]:
        assert 0.0 <= entry["mean"][task]["avg_f1"] <= 1.0


def test_dataset_summary_json(csv_text):
    summary = json.loads(dc.dataset_summary_json(csv_text))
    assert summary["rows"] == 120


def test_default_config_parses():
    config = json.loads(dc.default_config())
    assert config["hyperparams"]["epochs"] == 750
    assert config["cv"]["k"] == 5


def test_run_cli_round_trip(tmp_path):
    out_dir = tmp_path / "out"
    code, out, err = dc.run_cli(
        ["synth", "--n", "30", "--seed", "2", "--out", str(out_dir)]
    )
    assert (code, err) == (0, "")
    assert "wrote 30 rows" in out
    assert (out_dir / "data.csv").exists()

    code, out, err = dc.run_cli(["synth", "--n", "0", "--out", str(out_dir)])
    assert code == 1
    assert "positive" in err
