"""The iest command line, driven through main()."""

import json

import pytest

from app.cli import main
from app.schemas import EMOTIONS

from tests.helpers import TOY

QUICK = {**TOY, "epochs": "1"}


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("IEST_PROGRESS", "0")
    monkeypatch.delenv("IEST_CHECKPOINT", raising=False)


@pytest.fixture
def workspace(tmp_path):
    train, val = tmp_path / "train.tsv", tmp_path / "val.tsv"
    assert main(["gen-data", "--num", "90", "--seed", "1", "--out", str(train)]) == 0
    assert main(["gen-data", "--num", "36", "--seed", "2", "--out", str(val)]) == 0
    config = tmp_path / "toy.conf"
    config.write_text("".join(f"{k} = {v}\n" for k, v in QUICK.items()))
    return tmp_path


def _train(ws, seed=0):
    out = ws / f"model{seed}.ckpt"
    code = main([
        "train", "--train", str(ws / "train.tsv"), "--val", str(ws / "val.tsv"),
        "--config", str(ws / "toy.conf"), "--seed", str(seed), "--out", str(out),
        "--history", str(ws / f"history{seed}.csv"),
    ])
    assert code == 0
    return out


def test_gen_data_is_deterministic(tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    main(["gen-data", "--num", "30", "--seed", "7", "--out", str(a)])
    main(["gen-data", "--num", "30", "--seed", "7", "--out", str(b)])
    assert a.read_text(encoding="utf-8") == b.read_text(encoding="utf-8")
    assert len(a.read_text(encoding="utf-8").splitlines()) == 30


def test_preprocess(workspace):
    out = workspace / "tokens.tsv"
    assert main(["preprocess", "--input", str(workspace / "val.tsv"), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 36
    assert all(line.split("\t")[0] in EMOTIONS for line in lines)
    assert all("__TRIGGERWORD__" in line for line in lines)


def test_preprocess_takes_in_as_well_as_input(workspace):
    short, long = workspace / "short.tsv", workspace / "long.tsv"
    val = str(workspace / "val.tsv")
    assert main(["preprocess", "--in", val, "--out", str(short), "--strip-emoji"]) == 0
    assert main(["preprocess", "--input", val, "--out", str(long), "--strip-emoji"]) == 0
    assert short.read_text(encoding="utf-8") == long.read_text(encoding="utf-8")


def test_train_predict_evaluate(workspace):
    ckpt = _train(workspace)
    history = (workspace / "history0.csv").read_text(encoding="utf-8").splitlines()
    assert history[0] == "epoch,train_loss,val_accuracy"
    assert len(history) == 2

    unlabeled = workspace / "val.txt"
    unlabeled.write_text(
        "".join(line.split("\t", 1)[1] + "\n" for line in (workspace / "val.tsv").read_text(encoding="utf-8").splitlines()),
        encoding="utf-8",
    )
    pred = workspace / "pred.txt"
    assert main(["predict", "--model", str(ckpt), "--input", str(unlabeled), "--out", str(pred)]) == 0
    labels = pred.read_text(encoding="utf-8").splitlines()
    assert len(labels) == 36 and set(labels) <= set(EMOTIONS)

    report = workspace / "metrics.json"
    code = main(["evaluate", "--pred", str(pred), "--gold", str(workspace / "val.tsv"), "--report", "json", "--out", str(report)])
    assert code == 0
    assert 0.0 <= json.loads(report.read_text())["accuracy"] <= 1.0


def test_ensemble_over_cached_probabilities(workspace):
    caches = workspace / "proba"
    caches.mkdir()
    for seed in (0, 1):
        ckpt = _train(workspace, seed)
        assert main(["predict", "--model", str(ckpt), "--input", str(workspace / "val.tsv"),
                     "--proba", str(caches / f"model{seed}.proba"), "--out", str(workspace / f"p{seed}.txt")]) == 0
    report = workspace / "subsets.json"
    code = main(["ensemble", "--probs", str(caches), "--gold", str(workspace / "val.tsv"), "--report", "json",
                 "--out", str(report), "--by-size", str(workspace / "by_size.tsv")])
    assert code == 0
    subsets = json.loads(report.read_text())
    assert len(subsets) == 3
    assert subsets[0]["accuracy"] >= max(s["accuracy"] for s in subsets)
    assert len((workspace / "by_size.tsv").read_text().splitlines()) == 3


def test_bad_dataset_exits_3(workspace):
    bad = workspace / "bad.tsv"
    bad.write_text("joyful\tnot a label\n", encoding="utf-8")
    code = main(["train", "--train", str(bad), "--val", str(workspace / "val.tsv"), "--out", str(workspace / "x.ckpt")])
    assert code == 3


def test_unknown_config_key_exits_2(workspace):
    conf = workspace / "typo.conf"
    conf.write_text("dropout_wrod = 0.3\n")
    code = main(["train", "--train", str(workspace / "train.tsv"), "--val", str(workspace / "val.tsv"),
                 "--config", str(conf), "--out", str(workspace / "x.ckpt")])
    assert code == 2


def test_bad_jobs_exits_2(workspace):
    assert main(["ensemble", "--probs", str(workspace), "--gold", str(workspace / "val.tsv"), "--jobs", "0"]) == 2


def test_missing_caches_exit_3(workspace):
    assert main(["ensemble", "--probs", str(workspace), "--gold", str(workspace / "val.tsv")]) == 3


def test_hashtag_analysis_from_predictions(workspace, capsys):
    pred = workspace / "pred.txt"
    pred.write_text("joy\n" * 36, encoding="utf-8")
    assert main(["analyze", "hashtag", "--data", str(workspace / "val.tsv"), "--pred", str(pred)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("group\tcount_present")
    assert out[1].startswith("has_hashtag")


def test_prediction_count_mismatch_exits_3(workspace):
    pred = workspace / "pred.txt"
    pred.write_text("joy\n", encoding="utf-8")
    assert main(["evaluate", "--pred", str(pred), "--gold", str(workspace / "val.tsv")]) == 3


def test_analysis_without_model_or_predictions_exits_2(workspace):
    assert main(["analyze", "hashtag", "--data", str(workspace / "val.tsv")]) == 2
