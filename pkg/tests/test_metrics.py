import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alia.errors import PreconditionError
from alia.training import MetricReport, balanced_accuracy, macro_f1


def brute_force_metrics(y_true, y_pred, classes):
    """Independent oracle: build the full confusion matrix, then read the
    per-class precision/recall off it."""
    idx = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    cm = np.zeros((k, k), dtype=int)
    for t, p in zip(y_true, y_pred):
        cm[idx[t], idx[p]] += 1
    f1s, recalls = [], []
    for i in range(k):
        support = cm[i].sum()
        if support == 0:
            continue
        tp = cm[i, i]
        predicted = cm[:, i].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        f1s.append(f1)
        recalls.append(recall)
    return sum(f1s) / len(f1s), sum(recalls) / len(recalls)


def test_perfect_predictions_score_one():
    y = ["A", "B", "A", "C"]
    assert macro_f1(y, y, ("A", "B", "C"))[0] == 1.0
    assert balanced_accuracy(y, y, ("A", "B", "C"))[0] == 1.0


def test_hand_derived_two_class_case():
    # A:2 both correct; B:2 both predicted A.
    y_true = ["A", "A", "B", "B"]
    y_pred = ["A", "A", "A", "A"]
    ba, per_recall = balanced_accuracy(y_true, y_pred, ("A", "B"))
    assert ba == pytest.approx(0.5)
    assert per_recall == {"A": 1.0, "B": 0.0}
    f1, per_f1 = macro_f1(y_true, y_pred, ("A", "B"))
    assert per_f1["A"] == pytest.approx(2 / 3)
    assert per_f1["B"] == 0.0
    assert f1 == pytest.approx(1 / 3)


def test_constant_prediction_on_balanced_classes():
    classes = ("A", "B", "C", "D")
    y_true = [c for c in classes for _ in range(5)]
    y_pred = ["A"] * len(y_true)
    ba, _ = balanced_accuracy(y_true, y_pred, classes)
    assert ba == pytest.approx(1 / len(classes))


def test_absent_class_excluded_with_diagnostic(caplog):
    import logging

    with caplog.at_level(logging.WARNING):
        f1, per = macro_f1(["A", "A"], ["A", "B"], ("A", "B", "C"))
    assert "C" not in per
    assert any("absent" in r.message for r in caplog.records)


def test_empty_split_rejected():
    with pytest.raises(PreconditionError):
        macro_f1([], [], ("A",))


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_matches_confusion_matrix_brute_force(data):
    k = data.draw(st.integers(2, 6))
    classes = tuple(f"c{i}" for i in range(k))
    n = data.draw(st.integers(1, 60))
    y_true = [classes[data.draw(st.integers(0, k - 1))] for _ in range(n)]
    y_pred = [classes[data.draw(st.integers(0, k - 1))] for _ in range(n)]
    expected_f1, expected_ba = brute_force_metrics(y_true, y_pred, classes)
    assert macro_f1(y_true, y_pred, classes)[0] == pytest.approx(expected_f1, abs=1e-12)
    assert balanced_accuracy(y_true, y_pred, classes)[0] == pytest.approx(expected_ba, abs=1e-12)


class TestMetricReport:
    def test_three_seed_aggregation(self):
        report = MetricReport.from_seeds("macro-F1", [0.5, 0.6, 0.7])
        assert report.per_seed == (0.5, 0.6, 0.7)
        assert report.mean == pytest.approx(0.6)
        expected_std = np.sqrt(((0.1) ** 2 + 0 + (0.1) ** 2) / 3)
        assert report.std == pytest.approx(expected_std)

    def test_mean_std_recompute_from_stored_values(self):
        rng = np.random.default_rng(3)
        values = list(rng.random(5))
        report = MetricReport.from_seeds("macro-F1", values)
        assert report.mean == pytest.approx(np.mean(report.per_seed), abs=1e-15)
        assert report.std == pytest.approx(np.std(report.per_seed), abs=1e-15)

    def test_per_class_averaged_across_seeds(self):
        report = MetricReport.from_seeds(
            "macro-F1", [0.5, 0.7],
            [{"A": 0.4, "B": 0.6}, {"A": 0.6, "B": 0.8}],
        )
        assert report.per_class == {"A": pytest.approx(0.5), "B": pytest.approx(0.7)}
