import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csmescreen.metrics import (
    ConfusionMatrix,
    RocCurve,
    auc,
    concordance_auc,
    confusion,
    expected_cost,
    improvement_pi,
    operating_point_a,
    operating_point_b,
    reduction_xi,
    roc_curve,
    summary,
    summary_at,
)


def pairwise_concordance(truth, scores):
    """Independent oracle: explicit double loop over positive/negative pairs."""
    pos = [s for t, s in zip(truth, scores) if t == 1]
    neg = [s for t, s in zip(truth, scores) if t == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def count_oracle(truth, pred):
    tp = fp = tn = fn = 0
    for t, p in zip(truth, pred):
        if t and p:
            tp += 1
        elif t:
            fn += 1
        elif p:
            fp += 1
        else:
            tn += 1
    return tp, fp, tn, fn


# -- confusion / summary ----------------------------------------------------------


def test_confusion_identity():
    assert confusion([1, 0], [1, 0]) == ConfusionMatrix(tp=1, fp=0, tn=1, fn=0)


def test_confusion_swapped():
    cm = confusion([1, 0], [0, 1])
    assert (cm.fn, cm.fp, cm.tp, cm.tn) == (1, 1, 0, 0)


def test_confusion_matches_counting_oracle():
    rng = np.random.default_rng(11)
    t = rng.integers(0, 2, 50)
    p = rng.integers(0, 2, 50)
    cm = confusion(t, p)
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == count_oracle(t.tolist(), p.tolist())


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([1, 0], [1])
    with pytest.raises(ValueError):
        confusion([], [])
    with pytest.raises(ValueError):
        confusion([2], [1])


def test_summary_table_counts():
    # ResNet50 full-image row reconstructed on 93 positives / 275 negatives
    se, sp, acc = summary(ConfusionMatrix(tp=60, fp=19, tn=256, fn=33))
    assert se == pytest.approx(0.6452, abs=5e-5)
    assert sp == pytest.approx(0.9309, abs=5e-5)
    assert acc == pytest.approx(0.8587, abs=5e-5)


def test_summary_symmetric_and_perfect():
    assert summary(ConfusionMatrix(tp=5, fp=7, tn=7, fn=5)) == (0.5, 0.5, 0.5)
    assert summary(confusion([1, 0, 1, 0], [1, 0, 1, 0])) == (1.0, 1.0, 1.0)


def test_summary_missing_class():
    with pytest.raises(ValueError):
        summary(ConfusionMatrix(tp=0, fp=1, tn=3, fn=0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=40).filter(lambda t: 0 < sum(t) < len(t)))
def test_summary_of_perfect_prediction(t):
    assert summary(confusion(t, t)) == (1.0, 1.0, 1.0)


# -- ROC / AUC --------------------------------------------------------------------


def test_roc_perfect_separation():
    c = roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1])
    assert (0.0, 1.0) in list(zip(c.fpr.tolist(), c.tpr.tolist()))
    assert auc(c) == 1.0


def test_roc_all_scores_identical():
    c = roc_curve([1, 0, 1, 0], [0.5] * 4)
    assert list(zip(c.fpr.tolist(), c.tpr.tolist())) == [(0.0, 0.0), (1.0, 1.0)]
    assert auc(c) == 0.5


def test_roc_knn_levels_match_hand_enumeration():
    truth = [1, 1, 1, 0, 0, 0, 0, 1]
    scores = [1.0, 2 / 3, 1 / 3, 2 / 3, 1 / 3, 0.0, 0.0, 1.0]
    c = roc_curve(truth, scores)
    assert len(c) <= 5
    # enumerate thresholds by hand: positive iff score > threshold
    expected = []
    for thr in sorted(set(scores), reverse=True) + [-np.inf]:
        pred = [s > thr for s in scores]
        tp = sum(p and t for p, t in zip(pred, truth))
        fp = sum(p and not t for p, t in zip(pred, truth))
        expected.append((fp / 4, tp / 4, thr))
    assert c.points == expected


def test_auc_small_concordance_example():
    c = roc_curve([1, 1, 0, 0], [0.9, 0.4, 0.6, 0.1])
    assert auc(c) == pytest.approx(0.75, abs=1e-15)
    assert pairwise_concordance([1, 1, 0, 0], [0.9, 0.4, 0.6, 0.1]) == 0.75


def test_roc_errors():
    with pytest.raises(ValueError):
        roc_curve([1, 1], [0.2, 0.3])
    with pytest.raises(ValueError):
        roc_curve([1, 0], [0.2])


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_roc_invariants_and_concordance(data):
    n = data.draw(st.integers(2, 60))
    truth = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda t: 0 < sum(t) < len(t)))
    scores = data.draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0, 0.1, 0.9]), min_size=n, max_size=n))
    c = roc_curve(truth, scores)
    assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0)
    assert (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    a = auc(c)
    assert 0.0 <= a <= 1.0
    assert abs(a - pairwise_concordance(truth, scores)) <= 1e-12
    assert abs(concordance_auc(truth, scores) - pairwise_concordance(truth, scores)) <= 1e-12


def test_roc_text_roundtrip(tmp_path):
    c = roc_curve([1, 0, 1, 0, 1], [0.3, 0.2, 0.9, 0.9, 0.1])
    p = tmp_path / "roc.csv"
    c.save(p)
    back = RocCurve.load(p)
    assert back.points == c.points
    assert (back.n_pos, back.n_neg) == (3, 2)
    assert auc(back) == auc(c)


# -- operating points -------------------------------------------------------------


def random_curve(rng, n=40):
    truth = rng.integers(0, 2, n)
    truth[:2] = [0, 1]
    scores = np.round(rng.random(n) + 0.4 * truth, 1)
    return roc_curve(truth, scores)


def youden_oracle(c):
    best = None
    for i in range(len(c)):
        key = (c.tpr[i] - c.fpr[i], c.tpr[i], -c.thresholds[i])
        if best is None or key > best[0]:
            best = (key, i)
    return best[1]


def min_fpr_oracle(c, min_se):
    best = None
    for i in range(len(c)):
        if c.tpr[i] < min_se:
            continue
        key = (-c.fpr[i], c.tpr[i], -c.thresholds[i])
        if best is None or key > best[0]:
            best = (key, i)
    return best[1]


def test_point_a_perfect():
    a = operating_point_a(roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1]))
    assert (a.fpr, a.tpr, a.se, a.sp, a.accuracy) == (0.0, 1.0, 1.0, 1.0, 1.0)


def test_point_a_diagonal_prefers_highest_tpr():
    c = RocCurve([0.0, 0.25, 0.5, 1.0], [0.0, 0.25, 0.5, 1.0], [3.0, 2.0, 1.0, -np.inf])
    a = operating_point_a(c)
    assert (a.fpr, a.tpr) == (1.0, 1.0)


def test_point_a_matches_scan_oracle():
    rng = np.random.default_rng(5)
    c = random_curve(rng, 60)
    assert summary_at(c, youden_oracle(c)) == operating_point_a(c)


def test_point_b_boundary_min_se_zero():
    c = roc_curve([1, 0, 1, 0, 1], [0.8, 0.6, 0.5, 0.2, 0.1])
    b = operating_point_b(c, 0.0)
    assert (b.fpr, b.tpr) == (0.0, pytest.approx(1 / 3))


def test_point_b_perfect():
    b = operating_point_b(roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1]), 0.95)
    assert (b.fpr, b.tpr) == (0.0, 1.0)


def test_point_b_matches_filtered_argmin():
    rng = np.random.default_rng(6)
    c = random_curve(rng, 60)
    assert summary_at(c, min_fpr_oracle(c, 0.95)) == operating_point_b(c, 0.95)


def test_point_b_unreachable():
    c = RocCurve([0.0, 1.0], [0.0, 0.9], [1.0, -np.inf])
    with pytest.raises(ValueError):
        operating_point_b(c, 0.95)


def test_point_accuracy_from_counts():
    c = roc_curve([1, 1, 0, 0, 0], [0.9, 0.2, 0.5, 0.1, 0.1])
    a = operating_point_a(c)
    pred = [s > a.threshold for s in [0.9, 0.2, 0.5, 0.1, 0.1]]
    assert a.accuracy == pytest.approx(summary(confusion([1, 1, 0, 0, 0], pred))[2])


def test_point_a_invariant_under_monotone_transform():
    rng = np.random.default_rng(8)
    truth = rng.integers(0, 2, 50)
    truth[:2] = [0, 1]
    scores = rng.random(50)
    a1 = operating_point_a(roc_curve(truth, scores))
    a2 = operating_point_a(roc_curve(truth, np.exp(3 * scores) - 7))
    assert (a1.fpr, a1.tpr) == (a2.fpr, a2.tpr)


def test_expected_cost():
    c = roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1])
    assert expected_cost(operating_point_a(c)) == 0.0
    c2 = RocCurve([0.0, 0.5, 1.0], [0.0, 0.8, 1.0], [2.0, 1.0, -np.inf], 10, 10)
    pt = summary_at(c2, 1)
    assert expected_cost(pt, prevalence=0.015, c_fn=10, c_fp=1) == pytest.approx(10 * 0.015 * 0.2 + 0.985 * 0.5)


# -- selection summaries ------------------------------------------------------------


@pytest.mark.parametrize("j_prime, j_mean, expected", [(0.0566, 0.0323, 42.9), (0.0436, 0.0339, 22.2)])
def test_improvement_pi_table_values(j_prime, j_mean, expected):
    assert improvement_pi(j_prime, j_mean) == pytest.approx(expected, abs=0.05)


@pytest.mark.parametrize("n, xi, expected", [(1000, 483.3, 51.7), (1000, 538.2, 46.2)])
def test_reduction_xi_table_values(n, xi, expected):
    assert reduction_xi(n, xi) == pytest.approx(expected, abs=0.05)


def test_summary_metric_identities_and_errors():
    assert improvement_pi(0.3, 0.3) == 0.0
    assert reduction_xi(12, 12) == 0.0
    with pytest.raises(ValueError):
        improvement_pi(0.0, 0.1)
    with pytest.raises(ValueError):
        reduction_xi(10, 11)
    with pytest.raises(ValueError):
        reduction_xi(10, -1)
