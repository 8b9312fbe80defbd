import json
import os

import pytest

from deixis.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from deixis.io import read_jsonl, write_jsonl

N = ["--n-clips", "6", "--seed", "2"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["forge", *N, "--out", str(out)]) == EXIT_OK
    assert main(["qa", *N, "--out", str(out)]) == EXIT_OK
    return out


def snapshot(d):
    return {
        p.relative_to(d).as_posix(): p.read_bytes()
        for p in sorted(d.rglob("*")) if p.is_file() and not p.name.endswith(".times.json")
    }


def test_forge_and_qa_outputs(run_dir):
    assert len(read_jsonl(run_dir / "clips.jsonl")) == 6
    manifest = json.loads((run_dir / "clips.jsonl.manifest.json").read_text())
    assert manifest["seed"] == 2 and 0 < manifest["acceptance_rate"] <= 1
    summary = json.loads((run_dir / "qa_summary.json").read_text())
    assert summary["validation_failures"] == 0 and summary["items"] == len(read_jsonl(run_dir / "dataset.jsonl"))


def test_idempotent(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["forge", *N, "--out", str(d)]) == EXIT_OK
        assert main(["qa", *N, "--out", str(d)]) == EXIT_OK
    assert snapshot(a) == snapshot(b)
    assert main(["qa", *N, "--out", str(a)]) == EXIT_OK
    assert snapshot(a) == snapshot(b)


def test_temporal_only_on_single_gesture_clips(tmp_path):
    out = tmp_path / "t"
    single = ["--set", "run.multi_gesture_prob=0"]
    assert main(["forge", *N, *single, "--out", str(out)]) == EXIT_OK
    assert main(["qa", *N, *single, "--categories", "temporal", "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "qa_summary.json").read_text())
    assert summary["items"] == 0
    assert summary["drops"] == {"Temporal: infeasible": 6 * 2}


def test_oracle_predictions_score_100(run_dir, tmp_path):
    preds = tmp_path / "preds.jsonl"
    write_jsonl(preds, ({"qa_id": r["qa_id"], "raw_output": f"({'ABCDE'[r['answer_index']]})"}
                        for r in read_jsonl(run_dir / "dataset.jsonl")))
    out = tmp_path / "e"
    code = main(["eval", *N, "--dataset", str(run_dir / "dataset.jsonl"), "--predictions", str(preds),
                 "--clips", str(run_dir / "clips.jsonl"), "--probe", "blind,choices-only", "--self-check",
                 "--out", str(out)])
    assert code == EXIT_OK
    main_report = json.loads((out / "reports" / "main.json").read_text())
    assert all(v["accuracy"] == 100.0 for v in main_report["per_category"].values())
    assert {p.stem for p in (out / "reports").glob("*.json")} == {"main", "random", "blind", "choices-only"}
    assert (out / "summary.txt").exists() and (out / "summary.svg").exists()
    assert main(["report", "--reports", str(out / "reports"), "--out", str(tmp_path / "r")]) == EXIT_OK
    assert "blind" in (tmp_path / "r" / "report.txt").read_text()


def test_malformed_predictions(run_dir, tmp_path, capsys):
    preds = tmp_path / "bad.jsonl"
    good = read_jsonl(run_dir / "dataset.jsonl")[:16]
    preds.write_text("".join(json.dumps({"qa_id": r["qa_id"], "raw_output": "A"}) + "\n" for r in good) + "{oops\n")
    code = main(["eval", *N, "--dataset", str(run_dir / "dataset.jsonl"), "--predictions", str(preds),
                 "--out", str(tmp_path / "e")])
    assert code == EXIT_VALIDATION
    assert "line 17" in capsys.readouterr().err


def test_unknown_prediction_id(run_dir, tmp_path):
    preds = tmp_path / "p.jsonl"
    write_jsonl(preds, [{"qa_id": "nope", "raw_output": "A"}])
    code = main(["eval", *N, "--dataset", str(run_dir / "dataset.jsonl"), "--predictions", str(preds),
                 "--out", str(tmp_path / "e")])
    assert code == EXIT_VALIDATION


def test_mixed_config_refused(run_dir, tmp_path):
    out = tmp_path / "m"
    args = ["qa", "--n-clips", "6", "--seed", "3", "--clips", str(run_dir / "clips.jsonl"), "--out", str(out)]
    assert main(args) == EXIT_USAGE
    assert main(args + ["--force"]) == EXIT_OK


def test_usage_errors():
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["forge", "--set", "run.fps"]) == EXIT_USAGE
    assert main(["forge", "--tau", "2"]) == EXIT_USAGE


def test_io_errors(tmp_path):
    assert main(["qa", "--clips", str(tmp_path / "none.jsonl"), "--out", str(tmp_path)]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["forge", "--n-clips", "1", "--out", str(blocker / "sub")]) == EXIT_IO


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("DEIXIS_RUN_N_CLIPS", "2")
    assert main(["forge", "--out", str(tmp_path)]) == EXIT_OK
    assert len(read_jsonl(tmp_path / "clips.jsonl")) == 2


def test_adapter_check(run_dir, tmp_path):
    out = tmp_path / "a"
    assert main(["adapter", "check", "--clips", str(run_dir / "clips.jsonl"), "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "adapter_check.json").read_text())
    assert summary["failures"] == 0
    counts = list(summary["tau_sweep"].values())
    assert counts == sorted(counts, reverse=True)


def test_adapter_train_deterministic(run_dir, tmp_path):
    args = ["adapter", "train", *N, "--set", "adapter.steps=20", "--clips", str(run_dir / "clips.jsonl"),
            "--dataset", str(run_dir / "dataset.jsonl")]
    assert main(args + ["--out", str(tmp_path / "x")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "y")]) == EXIT_OK
    assert snapshot(tmp_path / "x") == snapshot(tmp_path / "y")


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "forge" in capsys.readouterr().out
