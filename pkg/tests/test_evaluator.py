import numpy as np
import pytest

from ovvis.errors import InputError, UndefinedMetricError
from ovvis.evaluator import (DEFAULT_THRESHOLDS, Category, GroundTruthInstance, VideoInstancePrediction,
                             evaluate, id_switches, interpolated_ap, st_iou)

CATS = [Category(0, "cat", novel=False), Category(1, "dog", novel=True)]


def box(shape, y0, y1, x0, x1):
    m = np.zeros(shape, dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def oracle_ap(matched, num_gt):
    """Direct definition: interpolated precision = best precision at any recall >= r."""
    points = []
    tp = fp = 0
    for m in matched:
        tp, fp = tp + m, fp + (not m)
        points.append((tp / num_gt, tp / (tp + fp)))
    total = 0.0
    for i in range(101):
        r = i / 100
        candidates = [p for rec, p in points if rec >= r - 1e-12]
        total += max(candidates) if candidates else 0.0
    return total / 101


# --- st_iou -----------------------------------------------------------------

def test_st_iou_identical():
    m = [box((8, 8), 1, 4, 2, 6), box((8, 8), 0, 2, 0, 2)]
    assert st_iou(m, m) == 1.0


def test_st_iou_missing_frame_halves():
    g = box((8, 8), 2, 6, 2, 6)
    assert st_iou([g, None], [g, g]) == 0.5


def test_st_iou_pixel_count_oracle(rng):
    for _ in range(20):
        p = [rng.random((5, 6)) > 0.6 for _ in range(3)]
        g = [rng.random((5, 6)) > 0.5 for _ in range(3)]
        inter = union = 0
        for pf, gf in zip(p, g):
            for y in range(5):
                for x in range(6):
                    inter += bool(pf[y, x] and gf[y, x])
                    union += bool(pf[y, x] or gf[y, x])
        assert st_iou(p, g) == pytest.approx(inter / union)


def test_st_iou_empty_and_length_mismatch():
    assert st_iou([None, None], [None, None]) == 0.0
    with pytest.raises(InputError):
        st_iou([None], [None, None])


# --- PR integration -----------------------------------------------------------

def test_interpolated_ap_against_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(1, 12))
        matched = rng.random(n) > 0.5
        num_gt = max(1, int(matched.sum()) + int(rng.integers(0, 3)))
        assert interpolated_ap(matched, num_gt) == pytest.approx(oracle_ap(matched.tolist(), num_gt), abs=1e-12)


def test_thresholds():
    assert DEFAULT_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


# --- evaluate -------------------------------------------------------------------

def _iou_072_fixture():
    gt = box((10, 10), 0, 10, 0, 10)            # area 100
    pred = np.zeros((10, 10), dtype=bool)
    pred.reshape(-1)[:72] = True                  # 72 pixels inside the GT
    return ([VideoInstancePrediction(0, 0, 0.9, [pred])],
            [GroundTruthInstance(0, 0, [gt])])


def test_single_prediction_iou_072():
    preds, gts = _iou_072_fixture()
    assert st_iou(preds[0].masks, gts[0].masks) == 0.72
    res = evaluate(preds, gts, CATS)
    assert [res.per_threshold[t] for t in DEFAULT_THRESHOLDS] == [1.0] * 5 + [0.0] * 5
    assert res.AP == 0.5
    # independent reimplementation: TP iff 0.72 >= threshold, single-point curve
    expected = np.mean([oracle_ap([0.72 >= t], 1) for t in DEFAULT_THRESHOLDS])
    assert res.AP == pytest.approx(expected)


def test_wrong_category_scores_zero():
    preds, gts = _iou_072_fixture()
    preds[0].category = 1
    res = evaluate(preds, gts, CATS)
    assert res.AP == 0.0 and res.per_category == {0: 0.0}


def test_duplicate_prediction_is_false_positive():
    g1 = box((8, 8), 0, 4, 0, 4)
    g2 = box((8, 8), 4, 8, 4, 8)
    gts = [GroundTruthInstance(0, 0, [g1]), GroundTruthInstance(1, 0, [g2])]
    preds = [VideoInstancePrediction(0, 0, 0.9, [g1]),
             VideoInstancePrediction(1, 0, 0.8, [g1.copy()]),
             VideoInstancePrediction(2, 0, 0.7, [g2])]
    res = evaluate(preds, gts, CATS)
    # ranked TP, FP, TP: precision 1 up to recall 0.5, then 2/3 -> 51 points at 1, 50 at 2/3
    assert res.AP == pytest.approx((51 + 50 * 2 / 3) / 101)
    assert res.AP < 1.0
    single = evaluate(preds[:2], gts[:1], CATS)
    assert single.AP == 1.0  # trailing FP does not lower interpolated precision


def test_perfect_predictions(rng):
    gts, preds = [], []
    for i in range(6):
        masks = [rng.random((6, 6)) > 0.5 for _ in range(3)]
        gts.append(GroundTruthInstance(i, i % 2, masks, video=f"v{i % 2}"))
        preds.append(VideoInstancePrediction(i, i % 2, float(rng.uniform(0.1, 1)), masks, video=f"v{i % 2}"))
    res = evaluate(preds, gts, CATS)
    assert res.AP == 1.0 and res.AP_n == 1.0


def test_novel_subset_and_missing_categories():
    g = box((4, 4), 0, 2, 0, 2)
    gts = [GroundTruthInstance(0, 0, [g]), GroundTruthInstance(1, 1, [g], video="b")]
    preds = [VideoInstancePrediction(0, 0, 0.5, [g])]
    res = evaluate(preds, gts, CATS)
    assert res.per_category == {0: 1.0, 1: 0.0}
    assert res.AP == 0.5 and res.AP_n == 0.0
    res2 = evaluate(preds, gts[:1], CATS)
    assert res2.AP_n is None


def test_predictions_only_match_their_video():
    g = box((4, 4), 0, 2, 0, 2)
    gts = [GroundTruthInstance(0, 0, [g], video="a")]
    preds = [VideoInstancePrediction(0, 0, 0.9, [g], video="b")]
    assert evaluate(preds, gts, CATS).AP == 0.0


def test_no_ground_truth():
    with pytest.raises(UndefinedMetricError):
        evaluate([], [], CATS)


def test_ap_bounded_and_monotone(rng):
    for _ in range(20):
        gts, preds = _random_scene(rng)
        res = evaluate(preds, gts, CATS)
        assert 0.0 <= res.AP <= 1.0
        vals = [res.per_threshold[t] for t in DEFAULT_THRESHOLDS]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def _random_scene(rng, n_gt=4, n_pred=6):
    gts = []
    for i in range(n_gt):
        y, x = rng.integers(0, 6, size=2)
        gts.append(GroundTruthInstance(i, int(rng.integers(0, 2)), [box((10, 10), y, y + 4, x, x + 4)] * 2))
    preds = []
    for j in range(n_pred):
        y, x = rng.integers(0, 6, size=2)
        h, w = rng.integers(2, 5, size=2)
        preds.append(VideoInstancePrediction(j, int(rng.integers(0, 2)), float(rng.random()),
                                             [box((10, 10), y, y + h, x, x + w), None if rng.random() < .3
                                              else box((10, 10), y, y + h, x, x + w)]))
    return gts, preds


def test_low_confidence_false_positive_never_helps(rng):
    for _ in range(30):
        gts, preds = _random_scene(rng)
        base = evaluate(preds, gts, CATS).AP
        corner = box((10, 10), 0, 1, 0, 1)
        if any(g.masks[0][0, 0] for g in gts):
            continue  # corner pixel must lie outside every GT for zero overlap
        far = VideoInstancePrediction(99, int(rng.integers(0, 2)), -1.0, [corner, None])
        assert evaluate(preds + [far], gts, CATS).AP <= base


def test_order_invariance(rng):
    gts, preds = _random_scene(rng)
    preds[1].confidence = preds[0].confidence  # exercise the tie-break
    base = evaluate(preds, gts, CATS)
    for _ in range(5):
        shuffled = [preds[i] for i in rng.permutation(len(preds))]
        assert evaluate(shuffled, gts[::-1], CATS).to_json() == base.to_json()


def test_result_json_layout():
    preds, gts = _iou_072_fixture()
    doc = evaluate(preds, gts, CATS).to_json()
    assert set(doc) == {"AP", "AP_n", "per_threshold", "per_category"}
    assert doc["per_threshold"]["0.70"] == 1.0 and doc["per_category"] == {"cat": 0.5}


# --- identity switches ---------------------------------------------------------------

def test_id_switches_counts_track_changes():
    a = box((8, 8), 0, 3, 0, 3)
    b = box((8, 8), 5, 8, 5, 8)
    gts = [GroundTruthInstance(0, 0, [a, a, a, a]), GroundTruthInstance(1, 0, [b, b, None, b])]
    preds = [VideoInstancePrediction(0, 0, 1.0, [a, a, b, b]),
             VideoInstancePrediction(1, 0, 1.0, [b, b, a, a])]
    # GT 0 covered by tracks 0,0,1,1 -> 1 switch; GT 1 by 1,1,-,0 -> 1 switch
    assert id_switches(preds, gts) == 2
    assert id_switches(preds[:1], gts[:1]) == 0
