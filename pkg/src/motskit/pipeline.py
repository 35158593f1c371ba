"""Per-frame tracking loop: detections in, trajectories out.

Each frame runs the same fixed sequence against a promptable segmenter:
filter detections by confidence, split them by overlap against the union
of the previous frame's track masks, match overlapping candidates to live
tracks on center distance, prompt the segmenter (new boxes initialize,
matched boxes refresh Uncertain tracks), propagate, classify every track's
quality, retire tracks that stayed Low too long, and emit the survivors.

Two toggles carve out ablation baselines. `enable_oaf=False` drops the
overlap/matching stage: every filtered detection that does not overlap
existing tracks starts a new one, and nothing is ever refreshed.
`enable_tqa=False` keeps the quality classification but never retires
tracks and pushes memory on every frame.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .association import (
    INFEASIBLE,
    Detection,
    PromptSet,
    build_prompt_set,
    center_cost,
    filter_detections,
    hungarian_assign,
    overlap_split,
)
from .masks import BBox, BinaryMask, Rle, rle_encode, union_masks
from .tracking import (
    MaskObservation,
    QualityState,
    TrackStore,
    TrackerConfig,
    apply_observation,
)

logger = logging.getLogger(__name__)


class SegmenterFailure(RuntimeError):
    """A segmenter call failed; the frame loop stops and flags the run."""


class SegmenterContract(Protocol):
    """What the frame loop needs from a promptable video segmenter."""

    def add_prompt(self, frame_index: int, bbox: BBox, track_id: int) -> MaskObservation:
        """Start or refresh `track_id` from a box prompt; returns its observation."""

    def propagate(self, frame_index: int) -> Sequence[MaskObservation]:
        """Observations for the current frame, at most one per active id."""

    def drop_track(self, track_id: int) -> None:
        """Forget a track; it must not appear in later propagations."""

    def set_memory_window(self, t_w: int) -> None:
        """Cap per-track memory to the t_w most recent frames (0 = unbounded)."""


@dataclass(frozen=True)
class Emission:
    """One emitted track-frame; masks are disjoint within a frame."""

    track_id: int
    class_id: int
    mask: BinaryMask
    score: float


@dataclass(frozen=True)
class FrameResult:
    frame_index: int
    emitted: Tuple[Emission, ...]
    removed_ids: Tuple[int, ...]
    initialized_ids: Tuple[int, ...]
    reinforced_ids: Tuple[int, ...]


@dataclass(frozen=True)
class Trajectory:
    """All emitted frames of one identity, in frame order."""

    id: int
    class_id: int
    entries: Tuple[Tuple[int, Rle, float], ...]


@dataclass(frozen=True)
class RunStats:
    frames: int
    peak_memory_entries: int
    frame_times_s: Tuple[float, ...]
    aborted: bool = False
    failed_frame: Optional[int] = None


def process_frame(
    frame_index: int,
    detections: Sequence[Detection],
    segmenter: SegmenterContract,
    store: TrackStore,
    cfg: TrackerConfig,
) -> FrameResult:
    """Advance the tracker by one frame.

    The store is mutated in place (new tracks, state updates, removals);
    the segmenter sees prompts before its propagate call so a refreshed
    track yields the prompted observation, not a stale propagation.
    """
    height, width = store.frame_size
    filtered = filter_detections(detections, cfg.det_conf)

    live = store.live_tracks()
    union = union_masks(
        [t.last_mask for t in live if t.last_mask is not None],
        shape=(height, width),
    )
    candidates, fresh = overlap_split(filtered, union, cfg)

    if cfg.enable_oaf:
        if cfg.uncertain_only_matching:
            rows = [t for t in live if t.state is QualityState.UNCERTAIN]
        else:
            rows = live
        cost = center_cost(rows, candidates)
        gate = cfg.distance_gate
        if gate is None:
            gate = math.hypot(width, height)
        cost[cost > gate] = INFEASIBLE
        assignment = hungarian_assign(cost)
        prompts, _ = build_prompt_set(
            assignment,
            [t.id for t in rows],
            {t.id: t.state for t in rows},
            candidates,
            fresh,
            store.peek_next_id(),
        )
    else:
        next_id = store.peek_next_id()
        inits = []
        for det in fresh:
            inits.append((next_id, det.bbox, det.class_id))
            next_id += 1
        prompts = PromptSet(reinforcements=(), initializations=tuple(inits))

    initialized: List[int] = []
    for track_id, bbox, class_id in prompts.initializations:
        store.create(track_id, class_id, frame_index)
        segmenter.add_prompt(frame_index, bbox, track_id)
        initialized.append(track_id)
    reinforced: List[int] = []
    for track_id, bbox in prompts.reinforcements:
        segmenter.add_prompt(frame_index, bbox, track_id)
        reinforced.append(track_id)

    observations: Dict[int, MaskObservation] = {}
    for obs in segmenter.propagate(frame_index):
        if obs.track_id in observations:
            logger.warning("segmenter returned multiple observations for id %d", obs.track_id)
        observations[obs.track_id] = obs

    removed: List[int] = []
    pending: List[Emission] = []
    for track in store.live_tracks():
        obs = observations.get(track.id)
        if obs is None:
            # a silent segmenter means the object is gone this frame
            obs = MaskObservation(
                mask=np.zeros((height, width), dtype=bool),
                score=0.0,
                embedding=b"",
                track_id=track.id,
            )
        update = apply_observation(track, obs, frame_index, cfg)
        if update.removed:
            removed.append(track.id)
        elif update.new_state is not QualityState.LOW:
            pending.append(Emission(track.id, track.class_id, obs.mask, obs.score))

    for track_id in removed:
        segmenter.drop_track(track_id)

    return FrameResult(
        frame_index=frame_index,
        emitted=_resolve_overlaps(pending),
        removed_ids=tuple(removed),
        initialized_ids=tuple(initialized),
        reinforced_ids=tuple(reinforced),
    )


def _resolve_overlaps(pending: Sequence[Emission]) -> Tuple[Emission, ...]:
    """Make emitted masks disjoint: higher score claims contested pixels.

    Ties go to the older track (lower id). An emission left with no pixels
    is dropped for the frame. Output is sorted by id.
    """
    order = sorted(range(len(pending)), key=lambda i: (-pending[i].score, pending[i].track_id))
    claimed: Optional[BinaryMask] = None
    kept: List[Emission] = []
    for i in order:
        e = pending[i]
        if claimed is None:
            claimed = np.zeros_like(e.mask)
        mask = e.mask & ~claimed
        if mask.any():
            claimed |= mask
            kept.append(Emission(e.track_id, e.class_id, mask, e.score))
    kept.sort(key=lambda e: e.track_id)
    return tuple(kept)


def run_sequence(
    frames: Iterable[Sequence[Detection]],
    segmenter: SegmenterContract,
    cfg: TrackerConfig,
    frame_size: Tuple[int, int],
    on_frame: Optional[Callable[[FrameResult], None]] = None,
) -> Tuple[List[Trajectory], RunStats]:
    """Run the frame loop over a detection stream.

    `frames` is one detection list per frame, contiguous from frame 0;
    `frame_size` is (height, width). `on_frame` sees each FrameResult as
    it is produced (streaming writers, diagnostics). A SegmenterFailure
    stops the loop and the partial result is returned with stats.aborted
    set.
    """
    store = TrackStore(frame_size=frame_size)
    segmenter.set_memory_window(cfg.t_w)

    entries: Dict[int, List[Tuple[int, Rle, float]]] = {}
    classes: Dict[int, int] = {}
    peak = 0
    times: List[float] = []
    aborted = False
    failed_frame: Optional[int] = None

    for frame_index, dets in enumerate(frames):
        started = time.perf_counter()
        try:
            result = process_frame(frame_index, dets, segmenter, store, cfg)
        except SegmenterFailure as exc:
            logger.error("segmenter failed at frame %d: %s", frame_index, exc)
            aborted = True
            failed_frame = frame_index
            break
        times.append(time.perf_counter() - started)
        peak = max(peak, store.memory_entries())
        for e in result.emitted:
            entries.setdefault(e.track_id, []).append(
                (frame_index, rle_encode(e.mask), e.score)
            )
            classes[e.track_id] = e.class_id
        if on_frame is not None:
            on_frame(result)

    trajectories = [
        Trajectory(id=track_id, class_id=classes[track_id], entries=tuple(rows))
        for track_id, rows in sorted(entries.items())
    ]
    stats = RunStats(
        frames=len(times),
        peak_memory_entries=peak,
        frame_times_s=tuple(times),
        aborted=aborted,
        failed_frame=failed_frame,
    )
    return trajectories, stats


def ablation_variants(cfg: TrackerConfig) -> List[Tuple[str, TrackerConfig]]:
    """The four toggle combinations sharing all other settings, weakest first.

    bare: no quality gating, no overlap-aware prompting; tracks are never
          refreshed and never retired.
    oaf:  overlap-aware prompting only.
    tqa:  quality gating only; every non-overlapping detection initializes.
    full: both on.
    """

    def variant(tqa: bool, oaf: bool) -> TrackerConfig:
        return replace(cfg, tau_v_by_class=dict(cfg.tau_v_by_class),
                       enable_tqa=tqa, enable_oaf=oaf)

    return [
        ("bare", variant(False, False)),
        ("oaf", variant(False, True)),
        ("tqa", variant(True, False)),
        ("full", variant(True, True)),
    ]
