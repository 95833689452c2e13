import numpy as np
import pandas as pd
import pytest

from src.errors import FormatError, MetricError, MissingIdError, ShapeMismatchError
from src.evaluation import EvaluationReport, ScoreSet, compute_eer, compute_min_dcf, det_points, evaluate_trials
from src.head import EmbeddingStore


def score_set(targets, nontargets):
    return ScoreSet(
        scores=np.concatenate([targets, nontargets]),
        labels=np.concatenate([np.ones(len(targets), dtype=bool), np.zeros(len(nontargets), dtype=bool)]),
    )


def brute_force(scores: ScoreSet, p_target=0.05, c_miss=1.0, c_fa=1.0):
    """Quadratic scan: every candidate threshold against every score."""
    candidates = sorted(set(scores.scores.tolist())) + [np.inf]
    targets = scores.targets.tolist()
    nontargets = scores.nontargets.tolist()
    frr = [sum(1 for s in targets if s < t) / len(targets) for t in candidates]
    far = [sum(1 for s in nontargets if s >= t) / len(nontargets) for t in candidates]

    k = next(i for i in range(len(candidates)) if frr[i] - far[i] >= 0)
    if frr[k] == far[k] or k == 0:
        eer = frr[k]
    else:
        a, b, c, e = frr[k - 1], frr[k], far[k - 1], far[k]
        lam = (c - a) / ((b - a) - (e - c))
        eer = a + lam * (b - a)

    norm = min(c_miss * p_target, c_fa * (1.0 - p_target))
    min_dcf = min((c_miss * p_target * fr + c_fa * (1.0 - p_target) * fa) / norm for fr, fa in zip(frr, far))
    return eer, min_dcf


def test_perfect_separation():
    scores = score_set([0.9, 0.8], [0.1, 0.2])
    assert compute_eer(scores)[0] == 0.0
    assert compute_min_dcf(scores)[0] == 0.0


def test_interleaved_scores_give_half_eer():
    assert compute_eer(score_set([0.8, 0.2], [0.7, 0.1]))[0] == 0.5


def test_inverted_labels_give_full_eer():
    assert compute_eer(score_set([0.1, 0.2], [0.9, 0.8]))[0] == 1.0


def test_identical_scores_cost_exactly_one():
    scores = score_set([0.5] * 3, [0.5] * 7)
    min_dcf, threshold = compute_min_dcf(scores)
    assert min_dcf == pytest.approx(1.0, rel=1e-12)
    assert threshold == np.inf


def test_single_pass_matches_brute_force_on_random_sets():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        labels = np.zeros(50, dtype=bool)
        labels[rng.choice(50, size=rng.integers(1, 50), replace=False)] = True
        # rounding forces ties between classes
        scores = ScoreSet(scores=np.round(rng.standard_normal(50) + labels, 1), labels=labels)
        expected_eer, expected_dcf = brute_force(scores)
        assert compute_eer(scores)[0] == expected_eer
        assert compute_min_dcf(scores)[0] == expected_dcf


def test_metrics_ignore_strictly_monotone_transforms(rng):
    scores = score_set(rng.normal(1.0, 1.0, 40), rng.normal(0.0, 1.0, 60))
    warped = ScoreSet(scores=np.tanh(scores.scores / 4.0) * 3.0 + 1.0, labels=scores.labels)
    assert compute_eer(warped)[0] == compute_eer(scores)[0]
    assert compute_min_dcf(warped)[0] == compute_min_dcf(scores)[0]


def test_metrics_stay_in_range(rng):
    scores = score_set(rng.normal(0.3, 1.0, 25), rng.normal(0.0, 1.0, 25))
    eer, _ = compute_eer(scores)
    min_dcf, _ = compute_min_dcf(scores)
    assert 0.0 <= eer <= 1.0
    assert 0.0 <= min_dcf <= 1.0


def test_eer_threshold_lies_between_neighbouring_scores():
    eer, threshold = compute_eer(score_set([0.9, 0.4, 0.8], [0.5, 0.1, 0.2]))
    assert 0.0 < eer < 0.5
    assert 0.4 <= threshold <= 0.5


@pytest.mark.parametrize("targets,nontargets", [([], [0.1, 0.2]), ([0.3], [])])
def test_one_class_only_is_a_metric_error(targets, nontargets):
    scores = score_set(np.array(targets, dtype=float), np.array(nontargets, dtype=float))
    with pytest.raises(MetricError):
        compute_eer(scores)
    with pytest.raises(MetricError):
        compute_min_dcf(scores)


@pytest.mark.parametrize("p_target", [0.0, 1.0, -0.1])
def test_p_target_outside_unit_interval_is_rejected(p_target):
    with pytest.raises(MetricError):
        compute_min_dcf(score_set([0.9], [0.1]), p_target=p_target)


def test_score_set_validates_lengths_and_finiteness():
    with pytest.raises(ShapeMismatchError):
        ScoreSet(scores=[0.1, 0.2], labels=[1])
    with pytest.raises(FormatError):
        ScoreSet(scores=[0.1, np.nan], labels=[1, 0])


def test_det_points_are_rates(rng):
    points = det_points(score_set(rng.normal(1.0, 1.0, 30), rng.normal(0.0, 1.0, 30)))
    assert list(points.columns) == ["threshold", "far", "frr"]
    assert points[["far", "frr"]].to_numpy().min() >= 0.0
    assert points[["far", "frr"]].to_numpy().max() <= 1.0


def test_self_trial_scores_one():
    store = EmbeddingStore([("a", np.array([1.0, 2.0, 3.0]))])
    trials = pd.DataFrame({"label": [1], "enroll_id": ["a"], "test_id": ["a"]})
    scores = evaluate_trials(trials, store)
    assert scores.scores[0] == pytest.approx(1.0)
    assert scores.labels.tolist() == [True]


def test_empty_trial_list_gives_empty_score_set():
    trials = pd.DataFrame({"label": [], "enroll_id": [], "test_id": []})
    assert len(evaluate_trials(trials, EmbeddingStore())) == 0


def test_missing_id_is_named():
    store = EmbeddingStore([("a", np.ones(3))])
    trials = pd.DataFrame({"label": [0], "enroll_id": ["a"], "test_id": ["ghost"]})
    with pytest.raises(MissingIdError, match="ghost"):
        evaluate_trials(trials, store)


def test_trial_order_does_not_change_metrics(rng):
    ids = [f"u{i}" for i in range(8)]
    store = EmbeddingStore((utt, rng.standard_normal(4)) for utt in ids)
    pairs = [(ids[i], ids[j]) for i in range(8) for j in range(i + 1, 8)]
    trials = pd.DataFrame(
        {"label": [int(i % 3 == 0) for i in range(len(pairs))],
         "enroll_id": [e for e, _ in pairs],
         "test_id": [t for _, t in pairs]}
    )
    shuffled = trials.sample(frac=1.0, random_state=3).reset_index(drop=True)
    assert compute_eer(evaluate_trials(trials, store))[0] == compute_eer(evaluate_trials(shuffled, store))[0]


def test_scores_join_back_onto_trials():
    trials = pd.DataFrame({"label": [1, 0], "enroll_id": ["a", "a"], "test_id": ["b", "c"]})
    scores = pd.DataFrame({"enroll_id": ["a", "a"], "test_id": ["c", "b"], "score": [0.1, 0.7]})
    joined = ScoreSet.from_frames(trials, scores)
    np.testing.assert_array_equal(joined.scores, [0.7, 0.1])
    with pytest.raises(FormatError, match="a b"):
        ScoreSet.from_frames(trials, scores.iloc[:1])


def test_report_metrics_and_baseline_change(rng):
    scores = score_set(rng.normal(1.0, 0.5, 50), rng.normal(0.0, 0.5, 150))
    report = EvaluationReport(scores, model_name="toy", baseline_eer=0.2, baseline_name="ref", n_bootstrap=50)
    metrics = report.calculate_metrics()
    assert metrics["target_trials"] == 50
    assert metrics["nontarget_trials"] == 150
    lower, upper = metrics["eer_confidence_interval"]
    assert 0.0 <= lower <= upper <= 1.0
    assert metrics["relative_eer_change"] == pytest.approx((metrics["eer"] - 0.2) / 0.2 * 100.0)
    text = report.generate_report()
    assert "=== Verification Report: toy ===" in text
    assert "Baseline Comparison" in text


def test_relative_change_against_zero_baseline_is_undefined():
    assert EvaluationReport.relative_eer_change(0.1, 0.0) is None


def test_bootstrap_is_reproducible(rng):
    scores = score_set(rng.normal(1.0, 1.0, 30), rng.normal(0.0, 1.0, 30))
    first = EvaluationReport(scores, n_bootstrap=40, seed=5).eer_confidence_interval()
    second = EvaluationReport(scores, n_bootstrap=40, seed=5).eer_confidence_interval()
    assert first == second
