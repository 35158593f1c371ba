"""Text formats: detection files, MOTS result lines, MOT box lines.

All writers are deterministic: stable sort keys, floats at six significant
digits with a '.' separator, one object per line, trailing newline when any
line is written. Readers report malformed input with 1-indexed line numbers.

Formats:

* detections: ``frame class_id score x1 y1 x2 y2``
* MOTS:       ``frame obj_id class_id img_height img_width rle`` where
              obj_id follows the class*1000+instance ground-truth convention
* MOT:        17 whitespace-separated fields per visible object: frame,
              track id, type, truncated, occluded, alpha, box left/top/right/
              bottom, six 3D placeholder fields, score. Placeholders are -1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .association import Detection
from .masks import BBox, MalformedRle, Rle, mask_to_bbox, rle_decode, rle_string_to_counts
from .metrics import SeqObject
from .pipeline import Trajectory

logger = logging.getLogger(__name__)

_MOT_TYPES = {1: "Car", 2: "Pedestrian", 10: "DontCare"}


class ParseError(ValueError):
    """A line could not be parsed; carries the 1-indexed line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class RleDimensionMismatch(ParseError):
    """A mask payload does not decode to the line's stated dimensions."""


def fmt_num(x: float) -> str:
    """Fixed numeric formatting for writers: 6 significant digits."""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".6g")


# ---------------------------------------------------------------------------
# detection files
# ---------------------------------------------------------------------------

def read_detections(path: str) -> Dict[int, List[Detection]]:
    """Parse a detection file into frame -> detections, frame-sorted.

    Line format: ``frame class_id score x1 y1 x2 y2``. Blank lines are
    skipped; anything else malformed raises ParseError with its line number.
    """
    out: Dict[int, List[Detection]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 7:
                raise ParseError(line_no, f"expected 7 fields, got {len(fields)}")
            try:
                frame = int(fields[0])
                class_id = int(fields[1])
                score = float(fields[2])
                x1, y1, x2, y2 = (float(v) for v in fields[3:7])
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
            if frame < 0:
                raise ParseError(line_no, f"negative frame {frame}")
            try:
                det = Detection(bbox=BBox(x1, y1, x2, y2), score=score, class_id=class_id)
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
            out.setdefault(frame, []).append(det)
    return dict(sorted(out.items()))


def write_detections(dets_by_frame: Dict[int, Sequence[Detection]]) -> str:
    """Inverse of read_detections; frames ascending, input order within."""
    lines = []
    for frame in sorted(dets_by_frame):
        for det in dets_by_frame[frame]:
            x1, y1, x2, y2 = det.bbox.as_tuple()
            lines.append(
                f"{frame} {det.class_id} {fmt_num(det.score)} "
                f"{fmt_num(x1)} {fmt_num(y1)} {fmt_num(x2)} {fmt_num(y2)}"
            )
    return "\n".join(lines) + "\n" if lines else ""


def detections_to_frame_list(dets_by_frame: Dict[int, Sequence[Detection]],
                             n_frames: Optional[int] = None) -> List[List[Detection]]:
    """Densify a frame map into a contiguous per-frame list starting at 0."""
    last = max(dets_by_frame, default=-1)
    if n_frames is None:
        n_frames = last + 1
    elif last >= n_frames:
        raise ValueError(f"detections reference frame {last} >= n_frames {n_frames}")
    return [list(dets_by_frame.get(i, ())) for i in range(n_frames)]


# ---------------------------------------------------------------------------
# MOTS lines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MotsLine:
    frame: int
    obj_id: int
    class_id: int
    img_height: int
    img_width: int
    rle: str

    def format(self) -> str:
        return (f"{self.frame} {self.obj_id} {self.class_id} "
                f"{self.img_height} {self.img_width} {self.rle}")

    @classmethod
    def parse(cls, text: str, line_no: int = 1) -> "MotsLine":
        fields = text.split()
        if len(fields) != 6:
            raise ParseError(line_no, f"expected 6 fields, got {len(fields)}")
        try:
            frame, obj_id, class_id, height, width = (int(v) for v in fields[:5])
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
        if frame < 0 or obj_id < 1 or height < 1 or width < 1:
            raise ParseError(line_no, "frame/object id/dimensions out of range")
        rle = fields[5]
        try:
            counts = rle_string_to_counts(rle)
        except MalformedRle as exc:
            raise ParseError(line_no, str(exc)) from None
        if sum(counts) != height * width:
            raise RleDimensionMismatch(
                line_no,
                f"mask covers {sum(counts)} px, dimensions say {height * width}",
            )
        return cls(frame=frame, obj_id=obj_id, class_id=class_id,
                   img_height=height, img_width=width, rle=rle)

    def to_object(self) -> SeqObject:
        return SeqObject(
            frame=self.frame,
            track_id=self.obj_id,
            class_id=self.class_id,
            mask=Rle.from_string(self.rle, self.img_height, self.img_width),
        )


def _check_disjoint(lines: Sequence[MotsLine]) -> None:
    by_frame: Dict[int, List[MotsLine]] = {}
    for line in lines:
        by_frame.setdefault(line.frame, []).append(line)
    for frame, group in by_frame.items():
        if len(group) < 2:
            continue
        acc = None
        for line in group:
            mask = rle_decode(Rle.from_string(line.rle, line.img_height, line.img_width))
            if acc is None:
                acc = mask.copy()
                continue
            if (acc & mask).any():
                raise ValueError(f"overlapping masks in frame {frame}")
            acc |= mask


def _remap_ids(keyed: Sequence[Tuple[int, int]]) -> Dict[int, int]:
    """Map internal track ids to class*1000+instance, instances numbered
    from 1 per class in the order given."""
    mapping: Dict[int, int] = {}
    counters: Dict[int, int] = {}
    for track_id, class_id in keyed:
        counters[class_id] = counters.get(class_id, 0) + 1
        mapping[track_id] = class_id * 1000 + counters[class_id]
    return mapping


def mots_lines_from_trajectories(trajectories: Sequence[Trajectory]) -> List[MotsLine]:
    ordered = sorted(trajectories, key=lambda t: t.id)
    mapping = _remap_ids([(t.id, t.class_id) for t in ordered])
    lines: List[MotsLine] = []
    for traj in ordered:
        for frame, rle, _score in traj.entries:
            lines.append(
                MotsLine(frame=frame, obj_id=mapping[traj.id], class_id=traj.class_id,
                         img_height=rle.height, img_width=rle.width,
                         rle=rle.to_string())
            )
    lines.sort(key=lambda ln: (ln.frame, ln.obj_id))
    return lines


def mots_lines_from_objects(objects: Sequence[SeqObject]) -> List[MotsLine]:
    """MOTS lines from per-frame objects (ground-truth export path)."""
    order: List[Tuple[int, int]] = []
    seen: set = set()
    for obj in sorted(objects, key=lambda o: (o.track_id, o.frame)):
        if obj.track_id not in seen:
            seen.add(obj.track_id)
            order.append((obj.track_id, obj.class_id))
    mapping = _remap_ids(order)
    lines: List[MotsLine] = []
    for obj in objects:
        if obj.mask is None:
            raise ValueError(f"object id {obj.track_id} frame {obj.frame} has no mask")
        lines.append(
            MotsLine(frame=obj.frame, obj_id=mapping[obj.track_id],
                     class_id=obj.class_id, img_height=obj.mask.height,
                     img_width=obj.mask.width, rle=obj.mask.to_string())
        )
    lines.sort(key=lambda ln: (ln.frame, ln.obj_id))
    return lines


def write_mots_results(trajectories: Sequence[Trajectory]) -> str:
    """MOTS result text: ids remapped to the GT convention, lines sorted by
    frame then object id, masks asserted disjoint per frame."""
    lines = mots_lines_from_trajectories(trajectories)
    _check_disjoint(lines)
    return "\n".join(ln.format() for ln in lines) + "\n" if lines else ""


def write_mots_objects(objects: Sequence[SeqObject]) -> str:
    lines = mots_lines_from_objects(objects)
    _check_disjoint(lines)
    return "\n".join(ln.format() for ln in lines) + "\n" if lines else ""


def read_mots(path: str) -> List[SeqObject]:
    """One side of an evaluation input from a MOTS file."""
    objects: List[SeqObject] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            objects.append(MotsLine.parse(line, line_no).to_object())
    return objects


# ---------------------------------------------------------------------------
# MOT lines
# ---------------------------------------------------------------------------

def mot_line(frame: int, track_id: int, class_id: int, bbox: BBox, score: float) -> str:
    kind = _MOT_TYPES.get(class_id)
    if kind is None:
        raise ValueError(f"no MOT type string for class {class_id}")
    x1, y1, x2, y2 = bbox.as_tuple()
    return (
        f"{frame} {track_id} {kind} -1 -1 -1 "
        f"{fmt_num(x1)} {fmt_num(y1)} {fmt_num(x2)} {fmt_num(y2)} "
        f"-1 -1 -1 -1 -1 -1 {fmt_num(score)}"
    )


def write_mot_results(trajectories: Sequence[Trajectory]) -> str:
    """MOT box text: a tight box per visible mask; empty masks emit no line."""
    rows: List[Tuple[int, int, str]] = []
    for traj in sorted(trajectories, key=lambda t: t.id):
        for frame, rle, score in traj.entries:
            if rle.area() == 0:
                continue
            bbox = mask_to_bbox(rle_decode(rle))
            if bbox is None:
                continue
            rows.append((frame, traj.id, mot_line(frame, traj.id, traj.class_id, bbox, score)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return "\n".join(r[2] for r in rows) + "\n" if rows else ""


@dataclass(frozen=True)
class MotRow:
    """One parsed MOT line: the fields a tracker produces, placeholders dropped."""

    frame: int
    track_id: int
    class_id: int
    bbox: BBox
    score: float


def read_mot_results(path: str) -> List[MotRow]:
    """Parse a MOT box file back into rows (inverse of write_mot_results)."""
    by_type = {name: cid for cid, name in _MOT_TYPES.items()}
    rows: List[MotRow] = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 17:
                raise ParseError(line_no, f"expected 17 fields, got {len(fields)}")
            class_id = by_type.get(fields[2])
            if class_id is None:
                raise ParseError(line_no, f"unknown object type {fields[2]!r}")
            try:
                rows.append(
                    MotRow(
                        frame=int(fields[0]),
                        track_id=int(fields[1]),
                        class_id=class_id,
                        bbox=BBox(*(float(v) for v in fields[6:10])),
                        score=float(fields[16]),
                    )
                )
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from exc
    return rows
