import pandas as pd
import pytest

import src.analysis
from src.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from src.database import ResultsDatabase
from src.training import format_config


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "gradcheck" in capsys.readouterr().out


def test_unknown_command_is_a_validation_error():
    assert main(["fly"]) == EXIT_VALIDATION


def test_missing_input_file_is_a_validation_error(tmp_path):
    code = main(["eval", "--trials", str(tmp_path / "t.txt"), "--scores", str(tmp_path / "s.txt")])
    assert code == EXIT_VALIDATION


def test_invalid_config_is_a_validation_error(tmp_path, synth_corpus):
    root, _ = synth_corpus
    config = tmp_path / "bad.conf"
    config.write_text("model = le_conformer\nlayers = 3\n")
    code = main(["train", "--config", str(config), "--manifest", str(root / "manifest.txt"), "--out", str(tmp_path)])
    assert code == EXIT_VALIDATION


def test_unexpected_exception_is_a_runtime_failure(monkeypatch):
    def explode(scope):
        raise RuntimeError("boom")

    monkeypatch.setattr(src.analysis, "run_gradcheck", explode)
    assert main(["gradcheck", "--scope", "kernels"]) == EXIT_RUNTIME


def test_failed_gradient_check_is_a_runtime_failure(monkeypatch, capsys):
    report = pd.DataFrame([{"scope": "kernels", "unit": "x", "passed": False}])
    monkeypatch.setattr(src.analysis, "run_gradcheck", lambda scope: report)
    assert main(["gradcheck", "--scope", "kernels"]) == EXIT_RUNTIME
    assert "0/1 checks passed" in capsys.readouterr().out


def test_gradcheck_writes_its_report(tmp_path):
    out = tmp_path / "reports" / "gradcheck.csv"
    assert main(["--log-level", "WARNING", "gradcheck", "--scope", "kernels", "--out", str(out)]) == EXIT_OK
    assert pd.read_csv(out)["passed"].all()


def test_full_pipeline(tmp_path, tiny_le_config, capsys):
    corpus, split, feats, run = (tmp_path / name for name in ("corpus", "split", "feats", "run"))
    db_url = f"sqlite:///{tmp_path / 'registry.db'}"
    config = tmp_path / "run.conf"
    config.write_text(format_config(tiny_le_config))

    steps = [
        ["synth", "--out", str(corpus), "--speakers", "3", "--utts", "4", "--format", "sekw"],
        ["trials", "--manifest", str(corpus / "manifest.txt"), "--out", str(split), "--n", "6", "--holdout", "2"],
        ["features", "--manifest", str(split / "train_manifest.txt"), "--out", str(feats)],
        [
            "train", "--config", str(config), "--manifest", str(feats / "manifest.txt"), "--out", str(run),
            "--steps", "2", "--record", "--db-url", db_url,
        ],
        [
            "extract", "--checkpoint", str(run / "final.sekt"), "--manifest", str(split / "heldout_manifest.txt"),
            "--out", str(tmp_path / "embeddings.txt"),
        ],
        [
            "score", "--trials", str(split / "trials.txt"), "--embeddings", str(tmp_path / "embeddings.txt"),
            "--out", str(tmp_path / "scores.txt"),
        ],
        [
            "eval", "--trials", str(split / "trials.txt"), "--scores", str(tmp_path / "scores.txt"),
            "--name", "tiny", "--bootstrap", "20", "--record", "--db-url", db_url,
            "--det-csv", str(tmp_path / "det.csv"),
        ],
    ]
    for argv in steps:
        assert main(argv) == EXIT_OK, argv[0]

    assert len(list((feats / "features").glob("*.sekf"))) == 6
    assert len(pd.read_csv(run / "train_log.csv")) == 2
    assert len((tmp_path / "scores.txt").read_text().splitlines()) == 6
    assert "EER:" in capsys.readouterr().out

    db = ResultsDatabase(db_url)
    assert db.get_training_runs()["steps"].tolist() == [2]
    assert db.latest_evaluation("tiny")["target_trials"] == 3

    compare = [
        "eval", "--trials", str(split / "trials.txt"), "--scores", str(tmp_path / "scores.txt"),
        "--name", "again", "--bootstrap", "20", "--baseline", "tiny", "--db-url", db_url,
    ]
    assert main(compare) == EXIT_OK
    assert "tiny EER" in capsys.readouterr().out
