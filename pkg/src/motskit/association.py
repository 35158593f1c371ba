"""Detection gating and association.

Four stages run per frame: confidence filtering, an overlap split of the
surviving detections against the merged previous-frame mask, Hungarian
matching of the overlapping candidates to live tracks on center distance,
and prompt-set construction (reinforcements for matched Uncertain tracks,
initializations for non-overlapping detections).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .masks import BBox, BinaryMask, bbox_mask_iou, mask_centroid
from .tracking import QualityState, Track, TrackerConfig

logger = logging.getLogger(__name__)

INFEASIBLE = float("inf")


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float
    class_id: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class PromptSet:
    """Boxes to feed the segmenter: refresh prompts and new-track prompts."""

    reinforcements: Tuple[Tuple[int, BBox], ...]
    initializations: Tuple[Tuple[int, BBox, int], ...]


@dataclass(frozen=True)
class Assignment:
    pairs: Tuple[Tuple[int, int], ...]
    total_cost: float


def filter_detections(dets: Sequence[Detection], min_conf: float) -> List[Detection]:
    """Keep detections scoring strictly above min_conf, order preserved."""
    return [d for d in dets if d.score > min_conf]


def overlap_split(
    dets: Sequence[Detection],
    union_mask: BinaryMask,
    cfg: TrackerConfig,
) -> Tuple[List[Detection], List[Detection]]:
    """Partition detections by IoU against the merged previous-frame mask.

    Detections at or above the class threshold are candidates for matching
    existing tracks; the rest are treated as potential new objects. Classes
    without a configured threshold fall back to cfg.default_tau_v with a
    warning.
    """
    candidates: List[Detection] = []
    fresh: List[Detection] = []
    warned: set = set()
    for det in dets:
        tau_v = cfg.tau_v_for(det.class_id)
        if tau_v is None:
            if det.class_id not in warned:
                logger.warning(
                    "class %d has no tau_v entry; using default %.2f",
                    det.class_id,
                    cfg.default_tau_v,
                )
                warned.add(det.class_id)
            tau_v = cfg.default_tau_v
        v = bbox_mask_iou(det.bbox, union_mask, local=cfg.local_union)
        if v >= tau_v:
            candidates.append(det)
        else:
            fresh.append(det)
    return candidates, fresh


def center_cost(tracks: Sequence[Track], dets: Sequence[Detection]) -> np.ndarray:
    """Euclidean distance between track mask centers and detection box centers.

    Tracks without a usable mask get an all-infinite row so they can never
    absorb a detection.
    """
    cost = np.full((len(tracks), len(dets)), INFEASIBLE, dtype=float)
    centers = [d.bbox.center() for d in dets]
    for i, track in enumerate(tracks):
        if track.last_mask is None:
            continue
        centroid = mask_centroid(track.last_mask)
        if centroid is None:
            continue
        for j, (cx, cy) in enumerate(centers):
            cost[i, j] = math.hypot(centroid[0] - cx, centroid[1] - cy)
    return cost


def hungarian_assign(cost: np.ndarray) -> Assignment:
    """Minimum-cost one-to-one assignment on a possibly rectangular matrix.

    Infinite entries mark infeasible pairs: internally they are replaced by
    a finite sentinel large enough that the solver uses as few of them as
    possible, and any pair that still lands on one is dropped from the
    result. Ties between equal-cost assignments are settled toward the
    lexicographically smallest (row, col) pair list.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost must be a 2D matrix, got shape {cost.shape}")
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return Assignment(pairs=(), total_cost=0.0)
    if np.isnan(cost).any():
        raise ValueError("cost matrix contains NaN")

    finite = np.isfinite(cost)
    if finite.any():
        scale = max(1.0, float(np.abs(cost[finite]).max()))
    else:
        scale = 1.0
    sentinel = 10.0 * scale * (min(n_rows, n_cols) + 1)
    work = np.where(finite, cost, sentinel)

    rows, cols = linear_sum_assignment(work)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols) if finite[r, c]]
    pairs.sort()
    pairs = _lex_tie_break(pairs, cost)
    total = float(sum(cost[r, c] for r, c in pairs))
    return Assignment(pairs=tuple(pairs), total_cost=total)


def _lex_tie_break(pairs: List[Tuple[int, int]], cost: np.ndarray) -> List[Tuple[int, int]]:
    """Swap crossed pairs whose exchange leaves the total cost unchanged.

    linear_sum_assignment is deterministic but makes no promise about which
    optimal assignment it returns; normalizing equal-cost two-swaps gives a
    canonical, lexicographically smaller pair list.
    """
    changed = True
    passes = 0
    while changed and passes < len(pairs) + 1:
        changed = False
        passes += 1
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                r1, c1 = pairs[a]
                r2, c2 = pairs[b]
                if c1 <= c2:
                    continue
                direct = cost[r1, c1] + cost[r2, c2]
                swapped = cost[r1, c2] + cost[r2, c1]
                if np.isfinite(swapped) and swapped == direct:
                    pairs[a] = (r1, c2)
                    pairs[b] = (r2, c1)
                    changed = True
        pairs.sort()
    return pairs


def build_prompt_set(
    assignment: Assignment,
    track_ids: Sequence[int],
    track_states: Mapping[int, QualityState],
    candidates: Sequence[Detection],
    fresh: Sequence[Detection],
    next_id: int,
) -> Tuple[PromptSet, int]:
    """Turn the association result into segmenter prompts.

    Matched candidates reinforce their track only when the track sat in the
    Uncertain state; High (and Low) matches produce no prompt. Candidates
    that matched nothing are duplicates of tracked objects and are dropped.
    Every fresh detection initializes a new track with a consecutive id.
    Returns the prompt set and the next unused id.
    """
    reinforcements: List[Tuple[int, BBox]] = []
    for row, col in assignment.pairs:
        tid = track_ids[row]
        if track_states.get(tid) is QualityState.UNCERTAIN:
            reinforcements.append((tid, candidates[col].bbox))

    initializations: List[Tuple[int, BBox, int]] = []
    for det in fresh:
        initializations.append((next_id, det.bbox, det.class_id))
        next_id += 1

    return (
        PromptSet(
            reinforcements=tuple(reinforcements),
            initializations=tuple(initializations),
        ),
        next_id,
    )
