"""Deterministic canned responses replayed from a script file.

A script is a single JSON document describing one recorded inference
run:

    {
      "v": 1,
      "width": 64, "height": 48, "n_frames": 3,
      "frames": [
        {
          "detections": [
            {"class_id": 1, "score": 0.9, "bbox": [8.0, 10.0, 20.0, 20.0]}
          ],
          "tracks": {
            "1": {"rle": "<compressed counts>", "score": 0.95}
          }
        }
      ]
    }

Per frame, "detections" is what the detector saw and "tracks" maps a
track id to the segmenter output for that id. A track absent from a
frame simply yields no observation there (the object is gone for that
frame). "frames" may be shorter than "n_frames"; requests past its end
are answered with an error while the process stays up.

Mask payloads are opaque here: the rle string from the script is sent
byte for byte, never decoded or re-encoded. Whatever the script author
recorded is exactly what the client receives, including deliberately
broken payloads used to test the client's validation.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set


class ScriptError(ValueError):
    """The script file cannot be used at all (reported before serving)."""


class ReplayError(RuntimeError):
    """A request the script cannot answer; reported in-band."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScriptError(message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_num(value) -> bool:
    return _is_int(value) or isinstance(value, float)


def _check_detection(det, where: str) -> None:
    _require(isinstance(det, dict), f"{where}: detection must be an object")
    _require(_is_int(det.get("class_id")), f"{where}: class_id must be an integer")
    _require(_is_num(det.get("score")), f"{where}: score must be a number")
    bbox = det.get("bbox")
    _require(
        isinstance(bbox, list) and len(bbox) == 4 and all(_is_num(v) for v in bbox),
        f"{where}: bbox must be a list of four numbers",
    )


def _check_track(entry, where: str) -> None:
    _require(isinstance(entry, dict), f"{where}: track entry must be an object")
    _require(isinstance(entry.get("rle"), str), f"{where}: rle must be a string")
    _require(_is_num(entry.get("score")), f"{where}: score must be a number")


@dataclass
class ScriptModel:
    """Answers protocol requests from a validated script.

    Frame requests must arrive in playback order: each frame index is
    either the one currently being served or the next one. Anything else
    is an out-of-order request and fails without advancing the cursor.
    """

    width: int
    height: int
    n_frames: int
    frames: List[dict]
    cursor: int = -1
    active: Set[int] = field(default_factory=set)
    window: Optional[int] = None

    @classmethod
    def from_dict(cls, doc) -> "ScriptModel":
        _require(isinstance(doc, dict), "script must be a JSON object")
        _require(doc.get("v") == 1, f"unsupported script version {doc.get('v')!r}")
        for key in ("width", "height", "n_frames"):
            _require(
                _is_int(doc.get(key)) and doc[key] > 0,
                f"{key} must be a positive integer",
            )
        frames = doc.get("frames")
        _require(isinstance(frames, list), "frames must be a list")
        _require(
            len(frames) <= doc["n_frames"],
            f"script has {len(frames)} frames but announces {doc['n_frames']}",
        )
        parsed: List[dict] = []
        for i, frame in enumerate(frames):
            where = f"frame {i}"
            _require(isinstance(frame, dict), f"{where}: must be an object")
            for det in frame.get("detections", []):
                _check_detection(det, where)
            tracks: Dict[int, dict] = {}
            raw_tracks = frame.get("tracks", {})
            _require(isinstance(raw_tracks, dict), f"{where}: tracks must be an object")
            for key, entry in raw_tracks.items():
                try:
                    tid = int(key)
                except ValueError:
                    raise ScriptError(f"{where}: track key {key!r} is not an id")
                _require(tid > 0, f"{where}: track id must be positive, got {tid}")
                _check_track(entry, f"{where}, track {tid}")
                tracks[tid] = entry
            parsed.append(
                {"detections": list(frame.get("detections", [])), "tracks": tracks}
            )
        return cls(
            width=doc["width"],
            height=doc["height"],
            n_frames=doc["n_frames"],
            frames=parsed,
        )

    @classmethod
    def from_file(cls, path: str) -> "ScriptModel":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScriptError(f"script is not valid json: {exc}") from exc
        return cls.from_dict(doc)

    # -- frame bookkeeping --------------------------------------------------

    def _frame(self, frame_index: int) -> dict:
        if not _is_int(frame_index) or frame_index < 0:
            raise ReplayError(
                f"frame_index must be a non-negative integer, got {frame_index!r}"
            )
        if frame_index not in (self.cursor, self.cursor + 1):
            raise ReplayError(
                f"out-of-order frame request: got {frame_index} while "
                f"serving frame {self.cursor}"
            )
        if frame_index >= len(self.frames):
            raise ReplayError(
                f"script exhausted: no responses recorded for frame {frame_index}"
            )
        self.cursor = frame_index
        return self.frames[frame_index]

    def _observation(self, track_id: int, entry: dict) -> dict:
        return {"track_id": track_id, "rle": entry["rle"], "score": entry["score"]}

    # -- protocol operations ------------------------------------------------

    def detect(self, frame_index: int) -> List[dict]:
        return list(self._frame(frame_index)["detections"])

    def add_prompt(self, frame_index: int, track_id: int, bbox) -> List[dict]:
        frame = self._frame(frame_index)
        entry = frame["tracks"].get(track_id)
        if entry is None:
            raise ReplayError(
                f"script has no observation for track {track_id} "
                f"at frame {frame_index}"
            )
        self.active.add(track_id)
        return [self._observation(track_id, entry)]

    def propagate(self, frame_index: int) -> List[dict]:
        frame = self._frame(frame_index)
        return [
            self._observation(tid, frame["tracks"][tid])
            for tid in sorted(self.active)
            if tid in frame["tracks"]
        ]

    def drop_track(self, track_id: int) -> None:
        if track_id not in self.active:
            raise ReplayError(f"track {track_id} is not active")
        self.active.discard(track_id)

    def set_window(self, t_w) -> None:
        if not _is_int(t_w) or t_w < 0:
            raise ReplayError(f"t_w must be a non-negative integer, got {t_w!r}")
        self.window = t_w
