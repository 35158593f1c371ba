"""Deterministic synthetic world: scripted scenes, a noisy detector, and a
ground-truth-bound segmenter.

The simulator replaces real detection and segmentation models at desk
scale. Scenes script rectangles and ellipses along waypoint paths with
static occluders; the detector emulator drops, jitters, and salts
detections with false positives under a fixed seed; the segmenter binds
each track to the ground-truth object its prompt box overlaps most and
reports confidence equal to the object's visible fraction.

Two behaviors model failure modes of real promptable segmenters:

* Prompts that overlap no object (box-to-mask IoU below 0.1) create a
  phantom track, mimicking a false positive segmented off background
  texture. Its confidence decays 0.9 / 0.6 / 0.3, sits at zero for five
  frames, then flickers back to 0.45 for two frames out of every eight,
  forever. A quality-gated tracker retires the phantom during the zero
  stretch; an ungated one keeps re-emitting it on every flicker.
* An object spec may carry appearance-drift windows. While a window is
  active, an un-prompted track's internal quality factor q is multiplied
  by the window's decay each propagation; its mask erodes to the fraction
  q nearest the object centroid and its score becomes visible_fraction
  times q. A fresh prompt resets q to 1. Outside drift windows q is 1 and
  propagation returns exact visible masks, so scenes without drift follow
  the plain visible-fraction model everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .association import Detection
from .masks import BBox, BinaryMask, bbox_mask_iou, mask_centroid, mask_to_bbox, rle_encode
from .tracking import CLASS_CAR, CLASS_PEDESTRIAN, MaskObservation, TrackerConfig

PHANTOM_DECAY_SCORES = (0.9, 0.6, 0.3)
PHANTOM_DEAD_FRAMES = 5
PHANTOM_FLICKER_PERIOD = 8
PHANTOM_FLICKER_SCORE = 0.45
BIND_MIN_IOU = 0.1


def _phantom_score(age: int) -> float:
    """Confidence of a phantom track `age` frames after its prompt."""
    if age < len(PHANTOM_DECAY_SCORES):
        return PHANTOM_DECAY_SCORES[age]
    settled = age - len(PHANTOM_DECAY_SCORES)
    if settled < PHANTOM_DEAD_FRAMES:
        return 0.0
    if (settled - PHANTOM_DEAD_FRAMES) % PHANTOM_FLICKER_PERIOD < 2:
        return PHANTOM_FLICKER_SCORE
    return 0.0


class InvalidSpec(ValueError):
    """Scene description violates its own invariants."""


class UnknownTrackId(KeyError):
    """Segmenter asked about a track id it never saw."""


# ---------------------------------------------------------------------------
# scene description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftWindow:
    """Frames [start, end] during which un-prompted quality decays."""

    start: int
    end: int
    decay: float

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise InvalidSpec(f"drift window start {self.start} > end {self.end}")
        if not 0.0 < self.decay < 1.0:
            raise InvalidSpec(f"drift decay must be in (0,1), got {self.decay}")

    def active(self, frame: int) -> bool:
        return self.start <= frame <= self.end


@dataclass(frozen=True)
class ObjectSpec:
    obj_id: int
    class_id: int
    width: int
    height: int
    path: Tuple[Tuple[int, float, float], ...]  # (frame, center_x, center_y)
    enter_frame: int = 0
    exit_frame: Optional[int] = None
    shape: str = "rect"
    size_path: Tuple[Tuple[int, float, float], ...] = ()  # (frame, width, height)
    drift: Tuple[DriftWindow, ...] = ()

    def __post_init__(self) -> None:
        if self.obj_id <= 0:
            raise InvalidSpec(f"object id must be positive, got {self.obj_id}")
        if self.shape not in ("rect", "ellipse"):
            raise InvalidSpec(f"shape must be rect or ellipse, got {self.shape!r}")
        if self.width <= 0 or self.height <= 0:
            raise InvalidSpec("object size must be positive")
        if not self.path:
            raise InvalidSpec("object path must not be empty")
        frames = [f for f, _, _ in self.path]
        if frames != sorted(frames):
            raise InvalidSpec("path waypoints must be frame-sorted")
        if self.exit_frame is not None and self.exit_frame < self.enter_frame:
            raise InvalidSpec("exit_frame before enter_frame")

    def present(self, frame: int, n_frames: int) -> bool:
        last = self.exit_frame if self.exit_frame is not None else n_frames - 1
        return self.enter_frame <= frame <= last

    def center_at(self, frame: int) -> Tuple[float, float]:
        return _interp(self.path, frame)

    def size_at(self, frame: int) -> Tuple[float, float]:
        if not self.size_path:
            return float(self.width), float(self.height)
        return _interp(self.size_path, frame)

    def drift_at(self, frame: int) -> Optional[DriftWindow]:
        for window in self.drift:
            if window.active(frame):
                return window
        return None


@dataclass(frozen=True)
class Occluder:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self) -> None:
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise InvalidSpec("occluder rectangle is degenerate")


@dataclass(frozen=True)
class NoiseParams:
    det_dropout_prob: float = 0.0
    det_jitter_px: int = 0
    false_positive_rate: float = 0.0
    score_noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.det_dropout_prob <= 1.0:
            raise InvalidSpec("det_dropout_prob must be in [0,1]")
        if self.det_jitter_px < 0:
            raise InvalidSpec("det_jitter_px must be >= 0")
        if self.false_positive_rate < 0:
            raise InvalidSpec("false_positive_rate must be >= 0")
        if self.score_noise_sigma < 0:
            raise InvalidSpec("score_noise_sigma must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    name: str
    width: int
    height: int
    n_frames: int
    objects: Tuple[ObjectSpec, ...]
    occluders: Tuple[Occluder, ...] = ()
    seed: int = 0
    noise: NoiseParams = NoiseParams()

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0 or self.n_frames <= 0:
            raise InvalidSpec("scene dimensions and frame count must be positive")
        ids = [o.obj_id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise InvalidSpec("object ids must be unique")
        for o in self.objects:
            first = o.path[0][0]
            last = o.path[-1][0]
            end = o.exit_frame if o.exit_frame is not None else self.n_frames - 1
            if first > o.enter_frame or last < end:
                raise InvalidSpec(
                    f"object {o.obj_id} path [{first},{last}] does not cover "
                    f"presence [{o.enter_frame},{end}]")

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        try:
            objects = tuple(
                ObjectSpec(
                    obj_id=o["obj_id"],
                    class_id=o["class_id"],
                    width=o["width"],
                    height=o["height"],
                    path=tuple((f, x, y) for f, x, y in o["path"]),
                    enter_frame=o.get("enter_frame", 0),
                    exit_frame=o.get("exit_frame"),
                    shape=o.get("shape", "rect"),
                    size_path=tuple((f, w, h) for f, w, h in o.get("size_path", [])),
                    drift=tuple(DriftWindow(*w) for w in o.get("drift", [])),
                )
                for o in data["objects"]
            )
            occluders = tuple(Occluder(*o) for o in data.get("occluders", []))
            noise = NoiseParams(**data.get("noise", {}))
            return cls(
                name=data["name"],
                width=data["width"],
                height=data["height"],
                n_frames=data["n_frames"],
                objects=objects,
                occluders=occluders,
                seed=data.get("seed", 0),
                noise=noise,
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed scene document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "n_frames": self.n_frames,
            "seed": self.seed,
            "noise": {
                "det_dropout_prob": self.noise.det_dropout_prob,
                "det_jitter_px": self.noise.det_jitter_px,
                "false_positive_rate": self.noise.false_positive_rate,
                "score_noise_sigma": self.noise.score_noise_sigma,
            },
            "occluders": [[o.x1, o.y1, o.x2, o.y2] for o in self.occluders],
            "objects": [
                {
                    "obj_id": o.obj_id,
                    "class_id": o.class_id,
                    "width": o.width,
                    "height": o.height,
                    "path": [list(p) for p in o.path],
                    "enter_frame": o.enter_frame,
                    "exit_frame": o.exit_frame,
                    "shape": o.shape,
                    "size_path": [list(p) for p in o.size_path],
                    "drift": [[w.start, w.end, w.decay] for w in o.drift],
                }
                for o in self.objects
            ],
        }

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"scene document is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidSpec("scene document must be a JSON object")
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _interp(points: Sequence[Tuple[int, float, float]], frame: int) -> Tuple[float, float]:
    """Piecewise-linear interpolation over (frame, a, b) waypoints."""
    if frame <= points[0][0]:
        return points[0][1], points[0][2]
    if frame >= points[-1][0]:
        return points[-1][1], points[-1][2]
    for (f0, a0, b0), (f1, a1, b1) in zip(points, points[1:]):
        if f0 <= frame <= f1:
            if f1 == f0:
                return a1, b1
            t = (frame - f0) / (f1 - f0)
            return a0 + t * (a1 - a0), b0 + t * (b1 - b0)
    raise InvalidSpec("waypoints are not frame-sorted")  # unreachable after validation


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GtObject:
    gt_id: int
    class_id: int
    mask: BinaryMask           # visible pixels only
    full_area: int             # pixels before occlusion, clipped to the frame
    drift: Optional[DriftWindow] = None

    @property
    def visible_fraction(self) -> float:
        if self.full_area == 0:
            return 0.0
        return float(self.mask.sum()) / self.full_area


@dataclass
class GtSequence:
    width: int
    height: int
    frames: List[List[GtObject]] = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def objects_at(self, frame: int) -> List[GtObject]:
        return self.frames[frame]


def _rasterize(shape: str, cx: float, cy: float, w: float, h: float,
               height: int, width: int) -> BinaryMask:
    mask = np.zeros((height, width), dtype=bool)
    if shape == "rect":
        x1 = max(0, int(np.floor(cx - w / 2)))
        y1 = max(0, int(np.floor(cy - h / 2)))
        x2 = min(width, int(np.ceil(cx + w / 2)))
        y2 = min(height, int(np.ceil(cy + h / 2)))
        if x2 > x1 and y2 > y1:
            mask[y1:y2, x1:x2] = True
    else:
        ys, xs = np.mgrid[0:height, 0:width]
        a = max(w / 2, 0.5)
        b = max(h / 2, 0.5)
        mask = ((xs + 0.5 - cx) / a) ** 2 + ((ys + 0.5 - cy) / b) ** 2 <= 1.0
    return mask


def generate_scene(spec: SceneSpec) -> GtSequence:
    """Rasterize a scene: later-listed objects occlude earlier ones, and
    static occluders cover everything. Objects whose visible mask is empty
    on a frame are absent from that frame's ground truth."""
    occluder_mask = np.zeros((spec.height, spec.width), dtype=bool)
    for occ in spec.occluders:
        occluder_mask[max(0, occ.y1):occ.y2, max(0, occ.x1):occ.x2] = True

    seq = GtSequence(width=spec.width, height=spec.height)
    for f in range(spec.n_frames):
        rasters: List[Tuple[ObjectSpec, BinaryMask]] = []
        for obj in spec.objects:
            if not obj.present(f, spec.n_frames):
                continue
            cx, cy = obj.center_at(f)
            w, h = obj.size_at(f)
            full = _rasterize(obj.shape, cx, cy, w, h, spec.height, spec.width)
            if full.any():
                rasters.append((obj, full))
        cover = occluder_mask.copy()
        frame_objs: List[GtObject] = []
        for obj, full in reversed(rasters):  # last listed is on top
            visible = full & ~cover
            cover = cover | full
            if visible.any():
                frame_objs.append(
                    GtObject(
                        gt_id=obj.obj_id,
                        class_id=obj.class_id,
                        mask=visible,
                        full_area=int(full.sum()),
                        drift=obj.drift_at(f),
                    )
                )
        frame_objs.reverse()
        seq.frames.append(frame_objs)
    return seq


# ---------------------------------------------------------------------------
# detector emulator
# ---------------------------------------------------------------------------

def synth_detect(
    gt_frame: Sequence[GtObject],
    noise: NoiseParams,
    seed: int,
    frame_index: int,
    frame_shape: Tuple[int, int] = (240, 320),
) -> List[Detection]:
    """Noisy detections for one frame; (seed, frame_index) fixes all draws."""
    height, width = frame_shape
    rng = np.random.default_rng([seed, frame_index])
    dets: List[Detection] = []
    for obj in gt_frame:
        if rng.random() < noise.det_dropout_prob:
            continue
        box = mask_to_bbox(obj.mask)
        if box is None:
            continue
        x1, y1, x2, y2 = box.as_tuple()
        if noise.det_jitter_px:
            j = noise.det_jitter_px
            dx1, dy1, dx2, dy2 = rng.integers(-j, j + 1, size=4)
            x1 = min(max(0.0, x1 + dx1), width - 1.0)
            y1 = min(max(0.0, y1 + dy1), height - 1.0)
            x2 = max(x1 + 1.0, min(float(width), x2 + dx2))
            y2 = max(y1 + 1.0, min(float(height), y2 + dy2))
        score = obj.visible_fraction
        if noise.score_noise_sigma:
            score += rng.normal(0.0, noise.score_noise_sigma)
        score = float(min(1.0, max(0.0, score)))
        dets.append(Detection(bbox=BBox(x1, y1, x2, y2), score=score,
                              class_id=obj.class_id))
    n_fp = int(rng.poisson(noise.false_positive_rate)) if noise.false_positive_rate else 0
    for _ in range(n_fp):
        w = int(rng.integers(4, 9))
        h = int(rng.integers(4, 9))
        x1 = float(rng.integers(0, max(1, width - w)))
        y1 = float(rng.integers(0, max(1, height - h)))
        score = float(rng.uniform(0.5, 0.8))
        class_id = int(rng.choice([CLASS_CAR, CLASS_PEDESTRIAN]))
        dets.append(Detection(bbox=BBox(x1, y1, x1 + w, y1 + h), score=score,
                              class_id=class_id))
    return dets


# ---------------------------------------------------------------------------
# segmenter
# ---------------------------------------------------------------------------

def _erode_to_fraction(mask: BinaryMask, q: float) -> BinaryMask:
    """Keep the round(q * area) pixels closest to the mask centroid."""
    if q >= 1.0:
        return mask
    total = int(mask.sum())
    keep = int(q * total + 0.5)
    if keep <= 0:
        return np.zeros_like(mask)
    if keep >= total:
        return mask
    center = mask_centroid(mask)
    rows, cols = np.nonzero(mask)
    d2 = (cols + 0.5 - center[0]) ** 2 + (rows + 0.5 - center[1]) ** 2
    order = np.lexsort((cols, rows, d2))[:keep]
    out = np.zeros_like(mask)
    out[rows[order], cols[order]] = True
    return out


class _GtBinding:
    __slots__ = ("gt_id", "q")

    def __init__(self, gt_id: int) -> None:
        self.gt_id = gt_id
        self.q = 1.0


class _PhantomBinding:
    __slots__ = ("mask", "age")

    def __init__(self, mask: BinaryMask) -> None:
        self.mask = mask
        self.age = 0


class SynthSegmenter:
    """Segmenter contract backed by ground truth.

    add_prompt binds the track to the ground-truth object whose visible
    mask best overlaps the prompt box (IoU >= 0.1), else to a phantom.
    propagate reports each bound object's current visible mask with score
    visible_fraction * q; a prompt issued for the same frame preempts that
    frame's propagation result for its track.
    """

    def __init__(self, gt: GtSequence) -> None:
        self._gt = gt
        self._bindings: Dict[int, object] = {}
        self._window = 0
        self._history: Dict[int, List[int]] = {}
        self._prompted: Dict[Tuple[int, int], MaskObservation] = {}

    # -- contract ----------------------------------------------------------

    def add_prompt(self, frame_index: int, bbox: BBox, track_id: int) -> MaskObservation:
        best_obj = None
        best_iou = 0.0
        for obj in self._gt.objects_at(frame_index):
            iou = bbox_mask_iou(bbox, obj.mask)
            if iou > best_iou:
                best_iou = iou
                best_obj = obj
        if best_obj is not None and best_iou >= BIND_MIN_IOU:
            self._bindings[track_id] = _GtBinding(best_obj.gt_id)
            obs = MaskObservation(
                mask=best_obj.mask.copy(),
                score=best_obj.visible_fraction,
                embedding=b"",
                track_id=track_id,
            )
        else:
            rect = np.zeros((self._gt.height, self._gt.width), dtype=bool)
            x1, y1, x2, y2 = bbox.pixel_rect(self._gt.height, self._gt.width)
            rect[y1:y2, x1:x2] = True
            self._bindings[track_id] = _PhantomBinding(rect)
            obs = MaskObservation(
                mask=rect.copy(),
                score=_phantom_score(0),
                embedding=b"",
                track_id=track_id,
            )
        self._prompted[(frame_index, track_id)] = obs
        self._push_history(track_id, frame_index)
        return obs

    def propagate(self, frame_index: int) -> List[MaskObservation]:
        out: List[MaskObservation] = []
        for track_id in sorted(self._bindings):
            cached = self._prompted.pop((frame_index, track_id), None)
            if cached is not None:
                out.append(cached)
                continue
            binding = self._bindings[track_id]
            if isinstance(binding, _GtBinding):
                obs = self._propagate_gt(binding, frame_index, track_id)
            else:
                obs = self._propagate_phantom(binding, track_id)
            self._push_history(track_id, frame_index)
            out.append(obs)
        return out

    def drop_track(self, track_id: int) -> None:
        if track_id not in self._bindings:
            raise UnknownTrackId(track_id)
        del self._bindings[track_id]
        self._history.pop(track_id, None)

    def set_memory_window(self, t_w: int) -> None:
        if t_w < 0:
            raise ValueError(f"memory window must be >= 0, got {t_w}")
        self._window = t_w
        for track_id, entries in self._history.items():
            self._history[track_id] = self._cap(entries)

    # -- internals ----------------------------------------------------------

    def _propagate_gt(self, binding: _GtBinding, frame_index: int,
                      track_id: int) -> MaskObservation:
        obj = None
        for candidate in self._gt.objects_at(frame_index):
            if candidate.gt_id == binding.gt_id:
                obj = candidate
                break
        empty = np.zeros((self._gt.height, self._gt.width), dtype=bool)
        if obj is None:
            return MaskObservation(mask=empty, score=0.0, embedding=b"",
                                   track_id=track_id)
        if obj.drift is not None:
            binding.q *= obj.drift.decay
        mask = _erode_to_fraction(obj.mask, binding.q)
        score = obj.visible_fraction * binding.q
        return MaskObservation(mask=mask, score=float(score), embedding=b"",
                               track_id=track_id)

    def _propagate_phantom(self, binding: _PhantomBinding,
                           track_id: int) -> MaskObservation:
        binding.age += 1
        score = _phantom_score(binding.age)
        if score > 0.0:
            mask = binding.mask.copy()
        else:
            mask = np.zeros_like(binding.mask)
        return MaskObservation(mask=mask, score=score, embedding=b"",
                               track_id=track_id)

    def _push_history(self, track_id: int, frame_index: int) -> None:
        entries = self._history.setdefault(track_id, [])
        entries.append(frame_index)
        self._history[track_id] = self._cap(entries)

    def _cap(self, entries: List[int]) -> List[int]:
        if self._window <= 0:
            return entries
        return entries[-self._window:]

    # -- introspection (tests, stats) ----------------------------------------

    @property
    def active_ids(self) -> List[int]:
        return sorted(self._bindings)

    def history_length(self, track_id: int) -> int:
        if track_id not in self._bindings:
            raise UnknownTrackId(track_id)
        return len(self._history.get(track_id, []))

    def bound_gt_id(self, track_id: int) -> Optional[int]:
        binding = self._bindings.get(track_id)
        if binding is None:
            raise UnknownTrackId(track_id)
        if isinstance(binding, _GtBinding):
            return binding.gt_id
        return None


# ---------------------------------------------------------------------------
# evaluation plumbing
# ---------------------------------------------------------------------------

def gt_to_eval_objects(gt: GtSequence):
    """Ground truth as metrics-ready objects (masks in run-length form)."""
    from .metrics import SeqObject

    out = []
    for frame, objs in enumerate(gt.frames):
        for obj in objs:
            out.append(SeqObject(frame=frame, track_id=obj.gt_id,
                                 class_id=obj.class_id, mask=rle_encode(obj.mask)))
    return out


def corpus_tracker_config(**overrides) -> TrackerConfig:
    """Tracker configuration the shipped corpus is tuned for.

    The box-to-union overlap test uses local mode (intersection over box
    area): with the global-IoU form, any frame holding several objects
    dilutes v toward zero for every detection and the candidate branch
    never fires. Overlap thresholds keep their published per-class values.
    """
    base = dict(local_union=True)
    base.update(overrides)
    return TrackerConfig(**base)


# ---------------------------------------------------------------------------
# standard corpus
# ---------------------------------------------------------------------------

_FRAME_W = 320
_FRAME_H = 240


def _car(obj_id, path, enter=0, exit_frame=None, drift=(), w=48, h=28):
    return ObjectSpec(obj_id=obj_id, class_id=CLASS_CAR, width=w, height=h,
                      path=tuple(path), enter_frame=enter, exit_frame=exit_frame,
                      drift=tuple(drift))


def _ped(obj_id, path, enter=0, exit_frame=None, drift=(), w=20, h=48):
    return ObjectSpec(obj_id=obj_id, class_id=CLASS_PEDESTRIAN, width=w, height=h,
                      path=tuple(path), enter_frame=enter, exit_frame=exit_frame,
                      drift=tuple(drift))


def crossing_pair_scene() -> SceneSpec:
    """Two cars pass each other with a brief, shallow overlap."""
    return SceneSpec(
        name="crossing_pair",
        width=_FRAME_W, height=_FRAME_H, n_frames=60, seed=7,
        objects=(
            _car(1, [(0, 44.0, 120.0), (59, 280.0, 120.0)]),
            _car(2, [(0, 280.0, 138.0), (59, 44.0, 138.0)]),
        ),
        noise=NoiseParams(det_dropout_prob=0.03, det_jitter_px=1,
                          score_noise_sigma=0.02),
    )


def long_occlusion_scene() -> SceneSpec:
    """A pedestrian vanishes behind a pillar, re-emerges, loiters at its
    edge through an appearance-drift spell, then leaves; a second
    pedestrian later appears exactly on the first one's last footprint."""
    p1_path = [
        (0, 100.0, 120.0),
        (25, 150.0, 120.0),
        (35, 170.0, 120.0),
        (43, 186.0, 120.0),
        (76, 186.0, 120.0),
        (83, 198.0, 120.0),
    ]
    return SceneSpec(
        name="long_occlusion",
        width=_FRAME_W, height=_FRAME_H, n_frames=110, seed=11,
        objects=(
            _ped(1, p1_path, exit_frame=83,
                 drift=[DriftWindow(48, 72, 0.93)]),
            _ped(2, [(89, 198.0, 120.0), (109, 198.0, 120.0)], enter=89),
        ),
        occluders=(Occluder(140, 60, 180, 200),),
        noise=NoiseParams(score_noise_sigma=0.01),
    )


def dense_parallel_traffic_scene() -> SceneSpec:
    """Six cars in two opposite lanes, no interaction."""
    lane1 = [
        _car(1, [(0, 44.0, 60.0), (79, 284.0, 60.0)]),
        _car(2, [(0, 154.0, 60.0), (79, 394.0, 60.0)]),
        _car(3, [(0, 264.0, 60.0), (79, 504.0, 60.0)]),
    ]
    lane2 = [
        _car(4, [(0, 276.0, 180.0), (79, 36.0, 180.0)]),
        _car(5, [(0, 166.0, 180.0), (79, -74.0, 180.0)]),
        _car(6, [(0, 56.0, 180.0), (79, -184.0, 180.0)]),
    ]
    return SceneSpec(
        name="dense_parallel_traffic",
        width=_FRAME_W, height=_FRAME_H, n_frames=80, seed=13,
        objects=tuple(lane1 + lane2),
        noise=NoiseParams(det_dropout_prob=0.05, det_jitter_px=1,
                          score_noise_sigma=0.02),
    )


def detector_dropout_scene() -> SceneSpec:
    """Heavy detector dropout; tracks must coast through missing frames."""
    return SceneSpec(
        name="detector_dropout",
        width=_FRAME_W, height=_FRAME_H, n_frames=70, seed=17,
        objects=(
            _car(1, [(0, 44.0, 80.0), (69, 251.0, 80.0)]),
            _ped(2, [(0, 60.0, 180.0), (69, 198.0, 180.0)]),
        ),
        noise=NoiseParams(det_dropout_prob=0.35, det_jitter_px=1,
                          score_noise_sigma=0.02),
    )


def false_positive_storm_scene() -> SceneSpec:
    """Spurious detections every few frames, a parked car that drifts in
    appearance, and a second car appearing on the first one's footprint."""
    c1_path = [
        (0, 40.0, 120.0),
        (20, 120.0, 120.0),
        (61, 120.0, 120.0),
        (74, 172.0, 120.0),
    ]
    return SceneSpec(
        name="false_positive_storm",
        width=_FRAME_W, height=_FRAME_H, n_frames=100, seed=23,
        objects=(
            _car(1, c1_path, exit_frame=74, drift=[DriftWindow(22, 58, 0.8)]),
            _car(2, [(81, 172.0, 120.0), (99, 172.0, 120.0)], enter=81),
        ),
        noise=NoiseParams(det_dropout_prob=0.02, det_jitter_px=1,
                          false_positive_rate=0.4, score_noise_sigma=0.02),
    )


def enter_exit_scene() -> SceneSpec:
    """Objects appear and disappear; two newcomers reuse old footprints."""
    return SceneSpec(
        name="enter_exit",
        width=_FRAME_W, height=_FRAME_H, n_frames=80, seed=19,
        objects=(
            _car(1, [(0, 80.0, 60.0), (30, 140.0, 60.0)], exit_frame=30),
            _ped(2, [(0, 240.0, 170.0), (15, 270.0, 170.0), (45, 270.0, 170.0)],
                 exit_frame=45),
            _car(3, [(0, 30.0, 120.0), (79, 267.0, 120.0)]),
            _car(4, [(38, 140.0, 60.0), (79, 140.0, 60.0)], enter=38),
            _ped(5, [(52, 270.0, 170.0), (79, 270.0, 170.0)], enter=52),
        ),
        noise=NoiseParams(det_dropout_prob=0.02, score_noise_sigma=0.02),
    )


def scale_change_scene() -> SceneSpec:
    """One approaching object grows by a factor of 3.5 in width."""
    return SceneSpec(
        name="scale_change",
        width=_FRAME_W, height=_FRAME_H, n_frames=80, seed=29,
        objects=(
            ObjectSpec(obj_id=1, class_id=CLASS_CAR, width=24, height=16,
                       shape="ellipse",
                       path=((0, 160.0, 100.0), (79, 160.0, 140.0)),
                       size_path=((0, 24.0, 16.0), (79, 84.0, 56.0))),
        ),
        noise=NoiseParams(det_dropout_prob=0.03, det_jitter_px=1,
                          score_noise_sigma=0.02),
    )


def load_test_scene() -> SceneSpec:
    """Thirty objects in six lanes; cars drive off-frame, pedestrians stay."""
    objects: List[ObjectSpec] = []
    obj_id = 1
    for row in range(6):
        y = 24.0 + 40.0 * row
        is_car = row % 2 == 0
        for k in range(5):
            x0 = 30.0 + 64.0 * k
            enter = (k % 5) * 2
            if is_car:
                x1 = x0 + 2.0 * (99 - enter)
                objects.append(ObjectSpec(
                    obj_id=obj_id, class_id=CLASS_CAR, width=36, height=20,
                    path=((enter, x0, y), (99, x1, y)), enter_frame=enter))
            else:
                x1 = x0 + 1.0 * (99 - enter)
                objects.append(ObjectSpec(
                    obj_id=obj_id, class_id=CLASS_PEDESTRIAN, width=14, height=28,
                    path=((enter, x0, y), (99, x1, y)), enter_frame=enter))
            obj_id += 1
    return SceneSpec(
        name="load_test_30",
        width=_FRAME_W, height=_FRAME_H, n_frames=100, seed=31,
        objects=tuple(objects),
        noise=NoiseParams(det_dropout_prob=0.03, score_noise_sigma=0.01),
    )


def standard_corpus() -> List[SceneSpec]:
    """The eight named scenes the directional experiments run on."""
    return [
        crossing_pair_scene(),
        long_occlusion_scene(),
        dense_parallel_traffic_scene(),
        detector_dropout_scene(),
        false_positive_storm_scene(),
        enter_exit_scene(),
        scale_change_scene(),
        load_test_scene(),
    ]


def perfect_corpus() -> List[SceneSpec]:
    """Zero noise, zero occlusion: tracker output must equal ground truth."""
    single = SceneSpec(
        name="perfect_single",
        width=_FRAME_W, height=_FRAME_H, n_frames=80, seed=43,
        objects=(_car(1, [(0, 60.0, 120.0), (79, 220.0, 120.0)]),),
    )
    pair = SceneSpec(
        name="perfect_pair",
        width=_FRAME_W, height=_FRAME_H, n_frames=60, seed=44,
        objects=(
            _car(1, [(0, 40.0, 80.0), (59, 160.0, 80.0)]),
            _ped(2, [(0, 260.0, 180.0), (59, 200.0, 180.0)]),
        ),
    )
    multi = SceneSpec(
        name="perfect_multi",
        width=_FRAME_W, height=_FRAME_H, n_frames=80, seed=45,
        objects=(
            _car(1, [(0, 50.0, 60.0), (79, 210.0, 60.0)]),
            _car(2, [(6, 270.0, 120.0), (70, 142.0, 120.0)], enter=6, exit_frame=70),
            _ped(3, [(12, 80.0, 180.0), (79, 147.0, 180.0)], enter=12),
            ObjectSpec(obj_id=4, class_id=CLASS_PEDESTRIAN, width=20, height=48,
                       shape="ellipse", enter_frame=20,
                       path=((20, 260.0, 216.0), (79, 201.0, 216.0))),
        ),
    )
    return [single, pair, multi]


def memory_probe_scene(n_frames: int = 200) -> SceneSpec:
    """Single clean object over many frames; used to measure the memory
    footprint of different sliding-window sizes."""
    return SceneSpec(
        name="memory_probe",
        width=_FRAME_W, height=_FRAME_H, n_frames=n_frames, seed=47,
        objects=(_car(1, [(0, 60.0, 120.0), (n_frames - 1, 60.0 + n_frames, 120.0)]),),
    )


def scene_by_name(name: str) -> SceneSpec:
    for scene in standard_corpus() + perfect_corpus():
        if scene.name == name:
            return scene
    if name == "memory_probe":
        return memory_probe_scene()
    known = [s.name for s in standard_corpus() + perfect_corpus()] + ["memory_probe"]
    raise InvalidSpec(f"unknown scene {name!r}; known scenes: {', '.join(known)}")
