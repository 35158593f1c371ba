"""Tracking evaluation: HOTA, DetA, AssA, LocA and CLEAR-MOT.

The HOTA family is computed per localization threshold alpha over the 19
values 0.05, 0.10, ..., 0.95 and averaged. Per frame and alpha, ground
truth and predictions are matched one-to-one among pairs with similarity
at or above alpha, maximizing first the number of matched pairs, then the
summed similarity, with a small bias toward pairs whose identities align
well over the whole sequence (the standard global alignment score). The
association accuracy of a matched pair is TPA / (TPA + FNA + FPA), where
TPA counts frames the pair is matched and the other terms count frames
either identity appears without the other.

Conventions: when ground truth and predictions are both empty every
metric reports 1.0; when exactly one side is empty, 0.0. Ground-truth
objects of the ignore class (10) are excluded from scoring, and
predictions burying more than half their area in an ignore region are
dropped beforehand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .association import hungarian_assign
from .masks import BBox, Rle, bbox_iou, mask_to_bbox, rle_decode
from .tracking import CLASS_IGNORE

ALPHAS: Tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 20))

_ALIGN_TIE_WEIGHT = 1e-9
_IGNORE_OVERLAP = 0.5


@dataclass(frozen=True)
class SeqObject:
    """One object in one frame of a sequence, on either side of the eval."""

    frame: int
    track_id: int
    class_id: int
    mask: Optional[Rle] = None
    bbox: Optional[BBox] = None
    score: float = 1.0


@dataclass(frozen=True)
class EvalInput:
    gt: Tuple[SeqObject, ...]
    pred: Tuple[SeqObject, ...]
    mode: str = "mask"

    def __post_init__(self) -> None:
        if self.mode not in ("mask", "bbox"):
            raise ValueError(f"mode must be 'mask' or 'bbox', got {self.mode!r}")
        for obj in self.gt + self.pred:
            if obj.track_id <= 0:
                raise ValueError(f"track ids must be positive, got {obj.track_id}")

    @classmethod
    def build(cls, gt, pred, mode="mask"):
        return cls(gt=tuple(gt), pred=tuple(pred), mode=mode)


@dataclass
class ClassReport:
    class_id: int
    hota: float
    det_a: float
    ass_a: float
    loc_a: float
    mota: float
    id_switches: int
    per_alpha: List[Dict[str, float]] = field(default_factory=list)


@dataclass
class MetricsReport:
    mode: str
    classes: Dict[int, ClassReport]

    def to_json(self, indent: int = 2) -> str:
        payload = {
            "mode": self.mode,
            "classes": {
                str(cid): {
                    "HOTA": r.hota,
                    "DetA": r.det_a,
                    "AssA": r.ass_a,
                    "LocA": r.loc_a,
                    "MOTA": r.mota,
                    "IDs": r.id_switches,
                    "per_alpha": r.per_alpha,
                }
                for cid, r in sorted(self.classes.items())
            },
        }
        return json.dumps(payload, indent=indent, sort_keys=True)

    def format_table(self) -> str:
        header = f"{'class':>6} {'HOTA':>8} {'DetA':>8} {'AssA':>8} {'LocA':>8} {'MOTA':>8} {'IDs':>6}"
        rows = [header, "-" * len(header)]
        for cid, r in sorted(self.classes.items()):
            rows.append(
                f"{cid:>6} {r.hota:>8.4f} {r.det_a:>8.4f} {r.ass_a:>8.4f} "
                f"{r.loc_a:>8.4f} {r.mota:>8.4f} {r.id_switches:>6}"
            )
        return "\n".join(rows)


class _FrameData:
    """Aligned id lists and the similarity matrix for one frame."""

    __slots__ = ("gt_ids", "pred_ids", "sim")

    def __init__(self, gt_ids: List[int], pred_ids: List[int], sim: np.ndarray) -> None:
        self.gt_ids = gt_ids
        self.pred_ids = pred_ids
        self.sim = sim


def _decode(obj: SeqObject) -> np.ndarray:
    if obj.mask is None:
        raise ValueError(f"object id {obj.track_id} frame {obj.frame} has no mask")
    return rle_decode(obj.mask)


def _object_bbox(obj: SeqObject) -> Optional[BBox]:
    if obj.bbox is not None:
        return obj.bbox
    if obj.mask is not None:
        return mask_to_bbox(rle_decode(obj.mask))
    raise ValueError(f"object id {obj.track_id} frame {obj.frame} has neither box nor mask")


def _mask_sim_matrix(gts: List[SeqObject], preds: List[SeqObject]) -> np.ndarray:
    if not gts or not preds:
        return np.zeros((len(gts), len(preds)))
    g = np.stack([_decode(o).reshape(-1) for o in gts]).astype(np.float64)
    p = np.stack([_decode(o).reshape(-1) for o in preds]).astype(np.float64)
    inter = g @ p.T
    areas_g = g.sum(axis=1)[:, None]
    areas_p = p.sum(axis=1)[None, :]
    union = areas_g + areas_p - inter
    sim = np.zeros_like(inter, dtype=float)
    np.divide(inter, union, out=sim, where=union > 0)
    return sim


def _bbox_sim_matrix(gts: List[SeqObject], preds: List[SeqObject]) -> np.ndarray:
    sim = np.zeros((len(gts), len(preds)))
    g_boxes = [_object_bbox(o) for o in gts]
    p_boxes = [_object_bbox(o) for o in preds]
    for i, gb in enumerate(g_boxes):
        if gb is None:
            continue
        for j, pb in enumerate(p_boxes):
            if pb is None:
                continue
            sim[i, j] = bbox_iou(gb, pb)
    return sim


def _drop_ignored_preds(
    gt: Sequence[SeqObject], pred: Sequence[SeqObject], mode: str
) -> List[SeqObject]:
    """Remove predictions mostly covered by an ignore region of their frame."""
    ignore_by_frame: Dict[int, List[SeqObject]] = {}
    for obj in gt:
        if obj.class_id == CLASS_IGNORE:
            ignore_by_frame.setdefault(obj.frame, []).append(obj)
    if not ignore_by_frame:
        return list(pred)

    kept: List[SeqObject] = []
    decoded_ignore: Dict[int, np.ndarray] = {}
    for obj in pred:
        regions = ignore_by_frame.get(obj.frame)
        if not regions:
            kept.append(obj)
            continue
        if mode == "mask":
            if obj.frame not in decoded_ignore:
                union = _decode(regions[0])
                for extra in regions[1:]:
                    union = union | _decode(extra)
                decoded_ignore[obj.frame] = union
            mask = _decode(obj)
            area = int(mask.sum())
            overlap = int((mask & decoded_ignore[obj.frame]).sum())
            ratio = overlap / area if area else 0.0
        else:
            box = _object_bbox(obj)
            ratio = 0.0
            if box is not None:
                area = (box.x2 - box.x1) * (box.y2 - box.y1)
                for region in regions:
                    rbox = _object_bbox(region)
                    if rbox is None:
                        continue
                    ix = max(0.0, min(box.x2, rbox.x2) - max(box.x1, rbox.x1))
                    iy = max(0.0, min(box.y2, rbox.y2) - max(box.y1, rbox.y1))
                    if area > 0:
                        ratio = max(ratio, ix * iy / area)
        if ratio <= _IGNORE_OVERLAP:
            kept.append(obj)
    return kept


def _frames_for_class(
    gt: Sequence[SeqObject], pred: Sequence[SeqObject], class_id: int, mode: str
) -> List[_FrameData]:
    gt_by_frame: Dict[int, List[SeqObject]] = {}
    pred_by_frame: Dict[int, List[SeqObject]] = {}
    for obj in gt:
        if obj.class_id == class_id:
            gt_by_frame.setdefault(obj.frame, []).append(obj)
    for obj in pred:
        if obj.class_id == class_id:
            pred_by_frame.setdefault(obj.frame, []).append(obj)
    frames = sorted(set(gt_by_frame) | set(pred_by_frame))
    out: List[_FrameData] = []
    for f in frames:
        gts = gt_by_frame.get(f, [])
        preds = pred_by_frame.get(f, [])
        if mode == "mask":
            sim = _mask_sim_matrix(gts, preds)
        else:
            sim = _bbox_sim_matrix(gts, preds)
        out.append(_FrameData([o.track_id for o in gts], [o.track_id for o in preds], sim))
    return out


def _global_alignment(frames: List[_FrameData]):
    """Sequence-level identity affinity used to bias matching at ties."""
    gt_count: Dict[int, int] = {}
    pred_count: Dict[int, int] = {}
    potential: Dict[Tuple[int, int], float] = {}
    for fd in frames:
        for g in fd.gt_ids:
            gt_count[g] = gt_count.get(g, 0) + 1
        for p in fd.pred_ids:
            pred_count[p] = pred_count.get(p, 0) + 1
        if not fd.gt_ids or not fd.pred_ids:
            continue
        sim = fd.sim
        row_sum = sim.sum(axis=1, keepdims=True)
        col_sum = sim.sum(axis=0, keepdims=True)
        denom = row_sum + col_sum - sim
        ratio = np.zeros_like(sim)
        np.divide(sim, denom, out=ratio, where=denom > 1e-300)
        for i, g in enumerate(fd.gt_ids):
            for j, p in enumerate(fd.pred_ids):
                if ratio[i, j] > 0:
                    key = (g, p)
                    potential[key] = potential.get(key, 0.0) + float(ratio[i, j])
    alignment: Dict[Tuple[int, int], float] = {}
    for (g, p), pot in potential.items():
        alignment[(g, p)] = pot / (gt_count[g] + pred_count[p] - pot)
    return gt_count, pred_count, alignment


def _match_frame(
    fd: _FrameData, alpha: float, alignment: Dict[Tuple[int, int], float]
) -> List[Tuple[int, int]]:
    """Indices of matched (gt, pred) pairs at one alpha for one frame."""
    n_g, n_p = fd.sim.shape
    if n_g == 0 or n_p == 0:
        return []
    eligible = fd.sim >= alpha
    if not eligible.any():
        return []
    cost = np.full(fd.sim.shape, np.inf)
    for i in range(n_g):
        for j in range(n_p):
            if eligible[i, j]:
                bias = alignment.get((fd.gt_ids[i], fd.pred_ids[j]), 0.0)
                cost[i, j] = -(fd.sim[i, j] + _ALIGN_TIE_WEIGHT * bias)
    return list(hungarian_assign(cost).pairs)


def match_at_alpha(fd_gt: Sequence[SeqObject], fd_pred: Sequence[SeqObject],
                   alpha: float, mode: str = "mask"):
    """Match a single frame at one threshold.

    Returns (tp_pairs, fn_ids, fp_ids, similarities) where tp_pairs is a
    list of (gt_id, pred_id) and similarities aligns with it.
    """
    classes = sorted({o.class_id for o in fd_gt} | {o.class_id for o in fd_pred})
    tp_pairs: List[Tuple[int, int]] = []
    sims: List[float] = []
    fn_ids: List[int] = []
    fp_ids: List[int] = []
    for cid in classes:
        frames = _frames_for_class(fd_gt, fd_pred, cid, mode)
        if not frames:
            continue
        fd = frames[0]
        pairs = _match_frame(fd, alpha, {})
        matched_g = {i for i, _ in pairs}
        matched_p = {j for _, j in pairs}
        for i, j in pairs:
            tp_pairs.append((fd.gt_ids[i], fd.pred_ids[j]))
            sims.append(float(fd.sim[i, j]))
        fn_ids.extend(g for i, g in enumerate(fd.gt_ids) if i not in matched_g)
        fp_ids.extend(p for j, p in enumerate(fd.pred_ids) if j not in matched_p)
    return tp_pairs, fn_ids, fp_ids, sims


def _hota_for_frames(frames: List[_FrameData]) -> Dict[str, object]:
    gt_count, pred_count, alignment = _global_alignment(frames)
    per_alpha: List[Dict[str, float]] = []
    for alpha in ALPHAS:
        tp = 0
        fn = 0
        fp = 0
        loc_sum = 0.0
        pair_tpa: Dict[Tuple[int, int], int] = {}
        for fd in frames:
            pairs = _match_frame(fd, alpha, alignment)
            tp += len(pairs)
            fn += len(fd.gt_ids) - len(pairs)
            fp += len(fd.pred_ids) - len(pairs)
            for i, j in pairs:
                loc_sum += float(fd.sim[i, j])
                key = (fd.gt_ids[i], fd.pred_ids[j])
                pair_tpa[key] = pair_tpa.get(key, 0) + 1
        det_a = tp / (tp + fn + fp) if (tp + fn + fp) else 0.0
        if tp:
            ass_sum = 0.0
            for (g, p), tpa in pair_tpa.items():
                ass_sum += tpa * (tpa / (gt_count[g] + pred_count[p] - tpa))
            ass_a = ass_sum / tp
            loc_a = loc_sum / tp
        else:
            ass_a = 0.0
            loc_a = 0.0
        per_alpha.append(
            {
                "alpha": alpha,
                "HOTA": float(np.sqrt(det_a * ass_a)),
                "DetA": det_a,
                "AssA": ass_a,
                "LocA": loc_a,
                "TP": tp,
                "FN": fn,
                "FP": fp,
            }
        )
    return {
        "per_alpha": per_alpha,
        "HOTA": float(np.mean([r["HOTA"] for r in per_alpha])),
        "DetA": float(np.mean([r["DetA"] for r in per_alpha])),
        "AssA": float(np.mean([r["AssA"] for r in per_alpha])),
        "LocA": float(np.mean([r["LocA"] for r in per_alpha])),
    }


def _clear_for_frames(frames: List[_FrameData], iou_threshold: float) -> Tuple[float, int]:
    gt_total = sum(len(fd.gt_ids) for fd in frames)
    fn = 0
    fp = 0
    idsw = 0
    prev_match: Dict[int, int] = {}
    last_pred_for_gt: Dict[int, int] = {}
    for fd in frames:
        sim = fd.sim
        matched_g: Dict[int, int] = {}
        used_p: set = set()
        # keep previous-frame pairs that still clear the threshold
        for i, g in enumerate(fd.gt_ids):
            p = prev_match.get(g)
            if p is None or p not in fd.pred_ids:
                continue
            j = fd.pred_ids.index(p)
            if sim[i, j] >= iou_threshold:
                matched_g[i] = j
                used_p.add(j)
        # optimally match the rest
        free_g = [i for i in range(len(fd.gt_ids)) if i not in matched_g]
        free_p = [j for j in range(len(fd.pred_ids)) if j not in used_p]
        if free_g and free_p:
            sub = np.full((len(free_g), len(free_p)), np.inf)
            for a, i in enumerate(free_g):
                for b, j in enumerate(free_p):
                    if sim[i, j] >= iou_threshold:
                        sub[a, b] = -sim[i, j]
            for a, b in hungarian_assign(sub).pairs:
                matched_g[free_g[a]] = free_p[b]
                used_p.add(free_p[b])
        prev_match = {}
        for i, j in matched_g.items():
            g = fd.gt_ids[i]
            p = fd.pred_ids[j]
            prev_match[g] = p
            if g in last_pred_for_gt and last_pred_for_gt[g] != p:
                idsw += 1
            last_pred_for_gt[g] = p
        fn += len(fd.gt_ids) - len(matched_g)
        fp += len(fd.pred_ids) - len(matched_g)
    if gt_total == 0:
        return (1.0 if fp == 0 else 0.0), idsw
    mota = 1.0 - (fn + fp + idsw) / gt_total
    return mota, idsw


def _evaluate_class(
    gt: Sequence[SeqObject],
    pred: Sequence[SeqObject],
    class_id: int,
    mode: str,
    clear_iou: float,
) -> ClassReport:
    frames = _frames_for_class(gt, pred, class_id, mode)
    has_gt = any(fd.gt_ids for fd in frames)
    has_pred = any(fd.pred_ids for fd in frames)
    if not has_gt and not has_pred:
        per_alpha = [
            {"alpha": a, "HOTA": 1.0, "DetA": 1.0, "AssA": 1.0, "LocA": 1.0,
             "TP": 0, "FN": 0, "FP": 0}
            for a in ALPHAS
        ]
        return ClassReport(class_id, 1.0, 1.0, 1.0, 1.0, 1.0, 0, per_alpha)
    if has_gt != has_pred:
        mota, idsw = _clear_for_frames(frames, clear_iou)
        per_alpha = [
            {"alpha": a, "HOTA": 0.0, "DetA": 0.0, "AssA": 0.0, "LocA": 0.0,
             "TP": 0,
             "FN": sum(len(fd.gt_ids) for fd in frames),
             "FP": sum(len(fd.pred_ids) for fd in frames)}
            for a in ALPHAS
        ]
        return ClassReport(class_id, 0.0, 0.0, 0.0, 0.0, 0.0, idsw, per_alpha)

    stats = _hota_for_frames(frames)
    mota, idsw = _clear_for_frames(frames, clear_iou)
    return ClassReport(
        class_id=class_id,
        hota=stats["HOTA"],
        det_a=stats["DetA"],
        ass_a=stats["AssA"],
        loc_a=stats["LocA"],
        mota=mota,
        id_switches=idsw,
        per_alpha=stats["per_alpha"],
    )


def evaluate(
    inp: EvalInput,
    classes: Optional[Sequence[int]] = None,
    clear_iou: float = 0.5,
) -> MetricsReport:
    """Full report: HOTA family plus CLEAR-MOT, per class."""
    pred = _drop_ignored_preds(inp.gt, inp.pred, inp.mode)
    gt = [o for o in inp.gt if o.class_id != CLASS_IGNORE]
    if classes is None:
        classes = sorted({o.class_id for o in gt} | {o.class_id for o in pred})
    reports = {
        cid: _evaluate_class(gt, pred, cid, inp.mode, clear_iou) for cid in classes
    }
    return MetricsReport(mode=inp.mode, classes=reports)


def hota(inp: EvalInput, classes: Optional[Sequence[int]] = None) -> MetricsReport:
    """HOTA / DetA / AssA / LocA (the report also carries CLEAR fields)."""
    return evaluate(inp, classes=classes)


def clear_mot(
    inp: EvalInput,
    iou_threshold: float = 0.5,
    classes: Optional[Sequence[int]] = None,
) -> Dict[int, Dict[str, float]]:
    """MOTA and identity-switch count per class."""
    report = evaluate(inp, classes=classes, clear_iou=iou_threshold)
    return {
        cid: {"MOTA": r.mota, "IDs": r.id_switches}
        for cid, r in report.classes.items()
    }


def seq_objects_from_trajectories(trajectories: Sequence[object]) -> List[SeqObject]:
    """Flatten tracker trajectories (id, class_id, (frame, Rle, score) entries)
    into the per-frame objects this module scores."""
    out: List[SeqObject] = []
    for traj in trajectories:
        for frame, rle, score in traj.entries:
            out.append(
                SeqObject(frame=frame, track_id=traj.id, class_id=traj.class_id,
                          mask=rle, score=score)
            )
    out.sort(key=lambda o: (o.frame, o.track_id))
    return out


def combine_inputs(inputs: Sequence[EvalInput]) -> EvalInput:
    """Pool sequences for corpus-level evaluation.

    Frames are shifted so sequences never overlap and ids are namespaced
    per sequence, which makes pooled per-pair association counts identical
    to accumulating each sequence separately.
    """
    if not inputs:
        raise ValueError("no inputs to combine")
    mode = inputs[0].mode
    if any(i.mode != mode for i in inputs):
        raise ValueError("cannot combine inputs with different modes")
    gt: List[SeqObject] = []
    pred: List[SeqObject] = []
    frame_base = 0
    for k, inp in enumerate(inputs):
        id_base = (k + 1) * 1_000_000
        max_frame = -1
        for obj in inp.gt + inp.pred:
            max_frame = max(max_frame, obj.frame)
        for obj in inp.gt:
            gt.append(
                SeqObject(obj.frame + frame_base, obj.track_id + id_base,
                          obj.class_id, obj.mask, obj.bbox, obj.score)
            )
        for obj in inp.pred:
            pred.append(
                SeqObject(obj.frame + frame_base, obj.track_id + id_base,
                          obj.class_id, obj.mask, obj.bbox, obj.score)
            )
        frame_base += max_frame + 1
    return EvalInput(gt=tuple(gt), pred=tuple(pred), mode=mode)
