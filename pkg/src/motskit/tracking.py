"""Track lifecycle: quality states, consecutive-low removal, bounded memory.

Each track carries a quality state derived from the segmenter confidence:
High above tau_h, Low at or below tau_l, Uncertain in between. High frames
push an entry into the track's memory bank, which keeps only the most
recent t_w entries. A run of n_tries consecutive Low frames retires the
track; any High or Uncertain frame resets the streak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .masks import BinaryMask

CLASS_CAR = 1
CLASS_PEDESTRIAN = 2
CLASS_IGNORE = 10

_CLASS_NAMES = {"car": CLASS_CAR, "pedestrian": CLASS_PEDESTRIAN}


class QualityState(Enum):
    HIGH = "high"
    UNCERTAIN = "uncertain"
    LOW = "low"


class IdentityMismatch(ValueError):
    """Raised when an observation is applied to a track with another id."""


@dataclass(frozen=True)
class MaskObservation:
    """One segmenter output: mask, confidence, opaque embedding, identity."""

    mask: BinaryMask
    score: float
    embedding: bytes
    track_id: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.track_id < 1:
            raise ValueError(f"track_id must be positive, got {self.track_id}")


@dataclass
class TrackerConfig:
    """Pipeline thresholds and toggles.

    t_w = 0 means an unbounded memory window (full-history baseline).
    distance_gate = None defaults to the frame diagonal at run time.
    """

    tau_h: float = 0.70
    tau_l: float = 0.10
    n_tries: int = 5
    t_w: int = 16
    det_conf: float = 0.50
    tau_v_by_class: Dict[int, float] = field(
        default_factory=lambda: {CLASS_CAR: 0.6, CLASS_PEDESTRIAN: 0.85}
    )
    default_tau_v: float = 0.6
    enable_tqa: bool = True
    enable_oaf: bool = True
    distance_gate: Optional[float] = None
    local_union: bool = False
    uncertain_only_matching: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not (0.0 <= self.tau_l < self.tau_h <= 1.0):
            raise ValueError(
                f"thresholds must satisfy 0 <= tau_l < tau_h <= 1, "
                f"got tau_l={self.tau_l}, tau_h={self.tau_h}"
            )
        if self.n_tries < 1:
            raise ValueError(f"n_tries must be >= 1, got {self.n_tries}")
        if self.t_w < 0:
            raise ValueError(f"t_w must be >= 0, got {self.t_w}")
        if not (0.0 <= self.det_conf <= 1.0):
            raise ValueError(f"det_conf {self.det_conf} outside [0, 1]")
        for cls, tau in self.tau_v_by_class.items():
            if not (0.0 < tau <= 1.0):
                raise ValueError(f"tau_v for class {cls} must be in (0, 1], got {tau}")
        if not (0.0 < self.default_tau_v <= 1.0):
            raise ValueError(f"default_tau_v {self.default_tau_v} outside (0, 1]")
        if self.distance_gate is not None and self.distance_gate <= 0:
            raise ValueError(f"distance_gate must be positive, got {self.distance_gate}")

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "TrackerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(raw)
        if "tau_v_by_class" in kwargs:
            kwargs["tau_v_by_class"] = _parse_tau_v(kwargs["tau_v_by_class"])
        return cls(**kwargs)  # type: ignore[arg-type]

    @classmethod
    def from_file(cls, path: str) -> "TrackerConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must contain a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> Dict[str, object]:
        return {
            "tau_h": self.tau_h,
            "tau_l": self.tau_l,
            "n_tries": self.n_tries,
            "t_w": self.t_w,
            "det_conf": self.det_conf,
            "tau_v_by_class": {str(k): v for k, v in self.tau_v_by_class.items()},
            "default_tau_v": self.default_tau_v,
            "enable_tqa": self.enable_tqa,
            "enable_oaf": self.enable_oaf,
            "distance_gate": self.distance_gate,
            "local_union": self.local_union,
            "uncertain_only_matching": self.uncertain_only_matching,
        }

    def tau_v_for(self, class_id: int) -> Optional[float]:
        """Per-class overlap threshold, or None when the class is unknown."""
        return self.tau_v_by_class.get(class_id)


def _parse_tau_v(raw: object) -> Dict[int, float]:
    if not isinstance(raw, Mapping):
        raise ValueError("tau_v_by_class must be a mapping")
    out: Dict[int, float] = {}
    for key, value in raw.items():
        if isinstance(key, str) and key.lower() in _CLASS_NAMES:
            cls = _CLASS_NAMES[key.lower()]
        else:
            try:
                cls = int(key)
            except (TypeError, ValueError):
                raise ValueError(f"unrecognized class key {key!r} in tau_v_by_class")
        out[cls] = float(value)  # type: ignore[arg-type]
    return out


@dataclass
class Track:
    id: int
    class_id: int
    born_frame: int
    state: QualityState = QualityState.HIGH
    low_count: int = 0
    last_mask: Optional[BinaryMask] = None
    memory: List[Tuple[int, bytes]] = field(default_factory=list)
    alive: bool = True


@dataclass(frozen=True)
class TrackUpdate:
    new_state: QualityState
    memory_pushed: bool
    removed: bool


def classify_state(score: float, cfg: TrackerConfig) -> QualityState:
    """High iff score > tau_h, Low iff score <= tau_l, Uncertain between."""
    if score > cfg.tau_h:
        return QualityState.HIGH
    if score > cfg.tau_l:
        return QualityState.UNCERTAIN
    return QualityState.LOW


def memory_retain(memory: Sequence[Tuple[int, bytes]], t_w: int) -> List[Tuple[int, bytes]]:
    """Keep the most recent t_w entries; t_w = 0 keeps everything."""
    entries = list(memory)
    if t_w > 0 and len(entries) > t_w:
        entries = entries[-t_w:]
    return entries


def apply_observation(
    track: Track, obs: MaskObservation, frame: int, cfg: TrackerConfig
) -> TrackUpdate:
    """Advance one track by one frame of segmenter output.

    High pushes (frame, embedding) into memory and trims it to the window;
    Uncertain leaves memory alone; both reset the low streak. Low bumps the
    streak and removes the track once it reaches n_tries. last_mask follows
    the observation on every non-Low frame. With enable_tqa off the memory
    push happens unconditionally and removal never fires (states are still
    classified for downstream consumers).
    """
    if obs.track_id != track.id:
        raise IdentityMismatch(f"observation for id {obs.track_id} applied to track {track.id}")
    if not track.alive:
        raise ValueError(f"track {track.id} is no longer alive")

    state = classify_state(obs.score, cfg)
    track.state = state

    pushed = False
    removed = False
    if cfg.enable_tqa:
        if state is QualityState.HIGH:
            track.memory.append((frame, obs.embedding))
            track.memory = memory_retain(track.memory, cfg.t_w)
            pushed = True
            track.low_count = 0
        elif state is QualityState.UNCERTAIN:
            track.low_count = 0
        else:
            track.low_count += 1
            if track.low_count >= cfg.n_tries:
                removed = True
                track.alive = False
    else:
        track.memory.append((frame, obs.embedding))
        track.memory = memory_retain(track.memory, cfg.t_w)
        pushed = True

    if state is not QualityState.LOW:
        track.last_mask = obs.mask
    return TrackUpdate(new_state=state, memory_pushed=pushed, removed=removed)


class TrackStore:
    """All tracks for one run, with a monotone id counter (ids never reused)."""

    def __init__(self, frame_size: Tuple[int, int]) -> None:
        self.frame_size = frame_size
        self.tracks: Dict[int, Track] = {}
        self._next_id = 1

    def peek_next_id(self) -> int:
        return self._next_id

    def create(self, track_id: int, class_id: int, frame: int) -> Track:
        if track_id in self.tracks:
            raise ValueError(f"track id {track_id} already exists")
        if track_id < self._next_id:
            raise ValueError(f"track id {track_id} was already retired or issued")
        track = Track(id=track_id, class_id=class_id, born_frame=frame)
        self.tracks[track_id] = track
        self._next_id = max(self._next_id, track_id + 1)
        return track

    def live_tracks(self) -> List[Track]:
        return [t for t in self.tracks.values() if t.alive]

    def memory_entries(self) -> int:
        return sum(len(t.memory) for t in self.tracks.values() if t.alive)

    def __len__(self) -> int:
        return len(self.tracks)
