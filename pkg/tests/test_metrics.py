"""Tests for the HOTA family and CLEAR-MOT, cross-checked against the
exhaustive reference in _oracles."""

import json
import math

import numpy as np
import pytest

from motskit.masks import BBox, rle_encode
from motskit.metrics import (
    ALPHAS,
    EvalInput,
    SeqObject,
    clear_mot,
    combine_inputs,
    evaluate,
    hota,
    match_at_alpha,
)

from _oracles import hota_reference, pixel_iou

H, W = 8, 8


def rect_mask(y1, y2, x1, x2):
    m = np.zeros((H, W), dtype=bool)
    m[y1:y2, x1:x2] = True
    return m


def obj(frame, tid, cls, mask):
    return SeqObject(frame=frame, track_id=tid, class_id=cls, mask=rle_encode(mask))


# ---------------------------------------------------------------------------
# single-frame matching
# ---------------------------------------------------------------------------

def test_match_identical_frame_all_tp():
    frame_gt = [obj(0, 1, 1, rect_mask(0, 4, 0, 4)), obj(0, 2, 1, rect_mask(4, 8, 4, 8))]
    frame_pred = [obj(0, 7, 1, rect_mask(0, 4, 0, 4)), obj(0, 9, 1, rect_mask(4, 8, 4, 8))]
    tp, fn, fp, sims = match_at_alpha(frame_gt, frame_pred, 0.5)
    assert sorted(tp) == [(1, 7), (2, 9)]
    assert fn == [] and fp == []
    assert sims == [1.0, 1.0]


def test_match_disjoint_no_tp():
    frame_gt = [obj(0, 1, 1, rect_mask(0, 2, 0, 2))]
    frame_pred = [obj(0, 5, 1, rect_mask(6, 8, 6, 8))]
    tp, fn, fp, sims = match_at_alpha(frame_gt, frame_pred, 0.05)
    assert tp == [] and sims == []
    assert fn == [1] and fp == [5]


def test_match_prefers_higher_overlap():
    # GT strip of 10 px; one pred covers 8 of them, the other 6.
    gt_mask = np.zeros((H, W), dtype=bool)
    gt_mask[0, :] = True
    gt_mask[1, :2] = True  # 10 px total
    pred_a = np.zeros((H, W), dtype=bool)
    pred_a[0, :] = True  # 8 px subset -> IoU 0.8
    pred_b = np.zeros((H, W), dtype=bool)
    pred_b[0, :6] = True  # 6 px subset -> IoU 0.6
    frame_gt = [obj(0, 1, 1, gt_mask)]
    frame_pred = [obj(0, 11, 1, pred_a), obj(0, 12, 1, pred_b)]
    tp, fn, fp, sims = match_at_alpha(frame_gt, frame_pred, 0.5)
    assert tp == [(1, 11)]
    assert sims == [pytest.approx(0.8)]
    assert fp == [12]


def test_match_respects_alpha_floor():
    frame_gt = [obj(0, 1, 1, rect_mask(0, 4, 0, 4))]
    frame_pred = [obj(0, 2, 1, rect_mask(0, 4, 0, 2))]  # IoU 0.5
    tp, *_ = match_at_alpha(frame_gt, frame_pred, 0.5)
    assert tp == [(1, 2)]
    tp, fn, fp, _ = match_at_alpha(frame_gt, frame_pred, 0.55)
    assert tp == [] and fn == [1] and fp == [2]


# ---------------------------------------------------------------------------
# HOTA
# ---------------------------------------------------------------------------

def perfect_input(n_frames=5):
    gt = []
    pred = []
    for f in range(n_frames):
        for tid, (y, x) in ((1, (0, 0)), (2, (4, 4))):
            m = rect_mask(y, y + 3, x, x + 3)
            gt.append(obj(f, tid, 1, m))
            pred.append(obj(f, tid + 40, 1, m))
    return EvalInput.build(gt, pred, "mask")


def test_hota_perfect_sequence_is_exactly_one():
    report = hota(perfect_input())
    r = report.classes[1]
    assert r.hota == 1.0 and r.det_a == 1.0 and r.ass_a == 1.0 and r.loc_a == 1.0
    for row in r.per_alpha:
        assert row["HOTA"] == 1.0 and row["FN"] == 0 and row["FP"] == 0


def test_hota_midpoint_identity_switch():
    m = rect_mask(2, 6, 2, 6)
    gt = [obj(f, 1, 1, m) for f in range(10)]
    pred = [obj(f, 1 if f < 5 else 2, 1, m) for f in range(10)]
    r = hota(EvalInput.build(gt, pred, "mask")).classes[1]
    for row in r.per_alpha:
        assert row["DetA"] == pytest.approx(1.0, abs=1e-12)
        assert row["AssA"] == pytest.approx(0.5, abs=1e-12)
        assert row["HOTA"] == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert r.hota == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_hota_empty_conventions():
    empty = EvalInput.build([], [], "mask")
    r = evaluate(empty, classes=[1]).classes[1]
    assert (r.hota, r.det_a, r.ass_a, r.loc_a, r.mota) == (1.0, 1.0, 1.0, 1.0, 1.0)

    only_gt = EvalInput.build([obj(0, 1, 1, rect_mask(0, 2, 0, 2))], [], "mask")
    r = evaluate(only_gt).classes[1]
    assert (r.hota, r.det_a, r.ass_a, r.loc_a, r.mota) == (0.0, 0.0, 0.0, 0.0, 0.0)

    only_pred = EvalInput.build([], [obj(0, 1, 1, rect_mask(0, 2, 0, 2))], "mask")
    r = evaluate(only_pred).classes[1]
    assert r.hota == 0.0 and r.mota == 0.0


def random_scene(rng, n_ids=3, n_frames=5):
    """Random rectangles; returns (EvalInput, oracle arguments)."""
    while True:
        gt_objs, pred_objs = [], []
        gt_frames, pred_frames, sims = [], [], {}
        grids = {}
        for f in range(n_frames):
            gt_ids, pred_ids = [], []
            for tid in range(1, n_ids + 1):
                if rng.random() < 0.75:
                    y1 = int(rng.integers(0, H - 2)); x1 = int(rng.integers(0, W - 2))
                    y2 = y1 + int(rng.integers(2, H - y1)); x2 = x1 + int(rng.integers(2, W - x1))
                    m = rect_mask(y1, y2, x1, x2)
                    gt_objs.append(obj(f, tid, 1, m))
                    gt_ids.append(tid)
                    grids[("g", f, tid)] = m.astype(int).tolist()
                if rng.random() < 0.75:
                    y1 = int(rng.integers(0, H - 2)); x1 = int(rng.integers(0, W - 2))
                    y2 = y1 + int(rng.integers(2, H - y1)); x2 = x1 + int(rng.integers(2, W - x1))
                    m = rect_mask(y1, y2, x1, x2)
                    pred_objs.append(obj(f, tid, 1, m))
                    pred_ids.append(tid)
                    grids[("p", f, tid)] = m.astype(int).tolist()
            gt_frames.append(gt_ids)
            pred_frames.append(pred_ids)
            sims[f] = [[pixel_iou(grids[("g", f, g)], grids[("p", f, p)])
                        for p in pred_ids] for g in gt_ids]
        if gt_objs and pred_objs:
            return EvalInput.build(gt_objs, pred_objs, "mask"), (gt_frames, pred_frames, sims)


def test_hota_matches_brute_force_oracle():
    rng = np.random.default_rng(1234)
    for _ in range(25):
        inp, (gt_frames, pred_frames, sims) = random_scene(rng)
        expected = hota_reference(gt_frames, pred_frames, sims, ALPHAS)
        got = hota(inp).classes[1]
        for row in got.per_alpha:
            ref = expected[row["alpha"]]
            for key in ("DetA", "AssA", "LocA", "HOTA"):
                assert row[key] == pytest.approx(ref[key], abs=1e-9), (row["alpha"], key)
            assert (row["TP"], row["FN"], row["FP"]) == (ref["TP"], ref["FN"], ref["FP"])


def test_sqrt_identity_every_alpha():
    rng = np.random.default_rng(77)
    inp, _ = random_scene(rng)
    for row in hota(inp).classes[1].per_alpha:
        assert row["HOTA"] == pytest.approx(
            math.sqrt(row["DetA"] * row["AssA"]), abs=1e-12)


def test_metrics_invariant_under_pred_relabeling():
    rng = np.random.default_rng(5)
    inp, _ = random_scene(rng)
    renamed = EvalInput.build(
        inp.gt,
        [SeqObject(o.frame, o.track_id * 13 + 1, o.class_id, o.mask) for o in inp.pred],
        "mask",
    )
    a = evaluate(inp).classes[1]
    b = evaluate(renamed).classes[1]
    assert a.hota == pytest.approx(b.hota, abs=1e-12)
    assert a.ass_a == pytest.approx(b.ass_a, abs=1e-12)
    assert a.mota == pytest.approx(b.mota, abs=1e-12)
    assert a.id_switches == b.id_switches


def test_removing_spurious_pred_never_decreases_deta():
    rng = np.random.default_rng(9)
    inp, _ = random_scene(rng)
    # a prediction far from everything (random_scene keeps objects off the
    # last row/column, so this never overlaps)
    junk = np.zeros((H, W), dtype=bool)
    junk[H - 1, W - 1] = True
    with_junk = EvalInput.build(
        inp.gt, list(inp.pred) + [obj(2, 99, 1, junk)], "mask")
    before = evaluate(with_junk).classes[1].per_alpha
    after = evaluate(inp).classes[1].per_alpha
    for row_b, row_a in zip(before, after):
        assert row_a["DetA"] >= row_b["DetA"] - 1e-12


# ---------------------------------------------------------------------------
# CLEAR-MOT
# ---------------------------------------------------------------------------

def test_clear_perfect():
    out = clear_mot(perfect_input())
    assert out[1] == {"MOTA": 1.0, "IDs": 0}


def test_clear_midpoint_switch_counts_one():
    m = rect_mask(2, 6, 2, 6)
    gt = [obj(f, 1, 1, m) for f in range(10)]
    pred = [obj(f, 1 if f < 5 else 2, 1, m) for f in range(10)]
    out = clear_mot(EvalInput.build(gt, pred, "mask"))
    assert out[1]["IDs"] == 1
    assert out[1]["MOTA"] == pytest.approx(1.0 - 1 / 10)


def test_clear_switch_counted_across_gap():
    m = rect_mask(2, 6, 2, 6)
    gt = [obj(f, 1, 1, m) for f in range(6)]
    pred = [obj(0, 1, 1, m), obj(1, 1, 1, m), obj(4, 2, 1, m), obj(5, 2, 1, m)]
    out = clear_mot(EvalInput.build(gt, pred, "mask"))
    assert out[1]["IDs"] == 1  # id changed over the detection gap


def test_clear_all_spurious_is_nonpositive():
    gt = [obj(f, 1, 1, rect_mask(0, 2, 0, 2)) for f in range(4)]
    pred = [obj(f, 9, 1, rect_mask(6, 8, 6, 8)) for f in range(4)]
    out = clear_mot(EvalInput.build(gt, pred, "mask"))
    assert out[1]["MOTA"] <= 0.0


def test_clear_persistence_beats_greedy_swap():
    # Two GT side by side; at frame 1 pred 1 drifts so pred 2 has slightly
    # higher IoU with GT 1 -- persistence must keep the existing pairing.
    g1, g2 = rect_mask(0, 4, 0, 4), rect_mask(0, 4, 4, 8)
    p1_f1 = rect_mask(1, 5, 0, 4)  # IoU 0.6 with g1
    gt = [obj(0, 1, 1, g1), obj(0, 2, 1, g2), obj(1, 1, 1, g1), obj(1, 2, 1, g2)]
    pred = [obj(0, 11, 1, g1), obj(0, 12, 1, g2), obj(1, 11, 1, p1_f1), obj(1, 12, 1, g1)]
    out = clear_mot(EvalInput.build(gt, pred, "mask"))
    # pred 11 stays matched to gt 1, so no switch is charged to gt 1
    assert out[1]["IDs"] == 0


# ---------------------------------------------------------------------------
# ignore regions, pooling, bbox mode, report plumbing
# ---------------------------------------------------------------------------

def test_ignore_region_drops_buried_predictions():
    region = rect_mask(0, 4, 0, 8)
    real = rect_mask(5, 7, 5, 7)
    buried = rect_mask(1, 3, 1, 3)      # fully inside the ignore region
    half = rect_mask(2, 6, 0, 2)        # exactly half inside -> kept
    gt = [obj(0, 1, 1, real), obj(0, 2, 10, region)]
    pred = [obj(0, 5, 1, real), obj(0, 6, 1, buried), obj(0, 7, 1, half)]
    r = evaluate(EvalInput.build(gt, pred, "mask")).classes[1]
    row = r.per_alpha[0]
    # buried pred vanished, half-covered one remains an FP
    assert (row["TP"], row["FN"], row["FP"]) == (1, 0, 1)


def test_ignore_class_not_scored():
    region = rect_mask(0, 4, 0, 8)
    gt = [obj(0, 2, 10, region)]
    report = evaluate(EvalInput.build(gt, [], "mask"))
    assert 10 not in report.classes


def test_combine_inputs_preserves_scores():
    rng = np.random.default_rng(21)
    inp, _ = random_scene(rng)
    pooled = combine_inputs([inp, inp])
    a = evaluate(inp).classes[1]
    b = evaluate(pooled).classes[1]
    assert b.hota == pytest.approx(a.hota, abs=1e-12)
    assert b.ass_a == pytest.approx(a.ass_a, abs=1e-12)
    assert b.det_a == pytest.approx(a.det_a, abs=1e-12)
    assert b.id_switches == 2 * a.id_switches


def test_combine_rejects_mixed_modes():
    a = EvalInput.build([], [], "mask")
    b = EvalInput.build([], [], "bbox")
    with pytest.raises(ValueError):
        combine_inputs([a, b])


def test_bbox_mode_with_explicit_boxes():
    gt = [SeqObject(0, 1, 1, bbox=BBox(0, 0, 4, 4))]
    pred = [SeqObject(0, 3, 1, bbox=BBox(0, 0, 4, 4))]
    r = evaluate(EvalInput.build(gt, pred, "bbox")).classes[1]
    assert r.hota == 1.0 and r.loc_a == 1.0


def test_bbox_mode_from_masks():
    m = rect_mask(1, 5, 2, 6)
    gt = [obj(0, 1, 1, m)]
    pred = [obj(0, 2, 1, m)]
    r = evaluate(EvalInput.build(gt, pred, "bbox")).classes[1]
    assert r.hota == 1.0


def test_eval_input_validation():
    with pytest.raises(ValueError):
        EvalInput.build([], [], "boxes")
    with pytest.raises(ValueError):
        EvalInput.build([obj(0, 0, 1, rect_mask(0, 2, 0, 2))], [], "mask")


def test_report_json_and_table():
    report = evaluate(perfect_input())
    payload = json.loads(report.to_json())
    assert payload["classes"]["1"]["HOTA"] == 1.0
    assert payload["classes"]["1"]["IDs"] == 0
    assert len(payload["classes"]["1"]["per_alpha"]) == 19
    table = report.format_table()
    assert "HOTA" in table and "MOTA" in table
    assert any(line.strip().startswith("1") for line in table.splitlines())
