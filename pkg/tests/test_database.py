import pytest

from src.database import ResultsDatabase


@pytest.fixture
def db(tmp_path):
    return ResultsDatabase(f"sqlite:///{tmp_path / 'results' / 'registry.db'}")


def test_training_runs_are_recorded(db):
    run_id = db.add_training_run("sst", "model = sst\n", steps=300, final_loss=1.5, num_speakers=8)
    runs = db.get_training_runs()
    assert runs["id"].tolist() == [run_id]
    assert runs["num_speakers"].iloc[0] == 8
    assert db.get_training_runs(model="le_conformer").empty


def test_latest_evaluation_is_the_newest_row(db):
    db.add_evaluation_run("toy", {"eer": 0.10, "min_dcf": 0.5})
    db.add_evaluation_run("toy", {"eer": 0.05, "min_dcf": 0.4, "target_trials": 20})
    latest = db.latest_evaluation("toy")
    assert latest["eer"] == 0.05
    assert latest["target_trials"] == 20
    assert db.latest_evaluation("other") is None


def test_evaluations_link_to_their_training_run(db):
    run_id = db.add_training_run("le_conformer", "model = le_conformer\n", steps=10)
    db.add_evaluation_run("le", {"eer": 0.2, "min_dcf": 0.9}, training_run_id=run_id)
    assert db.get_evaluation_runs("le")["training_run_id"].tolist() == [run_id]


def test_comparison_ranks_names_by_best_eer(db):
    db.add_evaluation_run("a", {"eer": 0.30, "min_dcf": 0.9})
    db.add_evaluation_run("a", {"eer": 0.20, "min_dcf": 0.8})
    db.add_evaluation_run("b", {"eer": 0.10, "min_dcf": 0.7})
    summary = db.compare_evaluations()
    assert summary["name"].tolist() == ["b", "a"]
    assert summary.set_index("name").loc["a", "runs"] == 2
    assert summary.set_index("name").loc["a", "best_eer"] == pytest.approx(0.20)


def test_empty_registry_compares_to_nothing(db):
    assert db.compare_evaluations().empty
