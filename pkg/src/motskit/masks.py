"""Binary mask primitives: RLE codec, unions, IoU, boxes, centroids.

Masks are 2D numpy bool arrays of shape (height, width). The RLE wire
format is the compressed column-major run-length string used by the
common MOTS benchmarks: runs alternate zero/one starting with a zero
run, counts from the fourth run onward are delta-encoded against the
count two positions back, and each value is serialized as little-endian
5-bit chunks with 0x20 as the continuation bit, mapped to chr(code + 48).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

BinaryMask = npt.NDArray[np.bool_]

_CHAR_BASE = 48
_CHAR_MAX = 48 + 63


class MalformedRle(ValueError):
    """Raised when an RLE payload cannot represent a mask of the stated size."""


class DimensionMismatch(ValueError):
    """Raised when an operation receives masks of different shapes."""


@dataclass(frozen=True)
class Rle:
    """Run-length encoded mask.

    counts holds non-negative run lengths in column-major pixel order,
    the first run counting zeros (possibly zero-length).
    """

    height: int
    width: int
    counts: Tuple[int, ...]

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise MalformedRle(f"invalid mask size {self.height}x{self.width}")
        if any(c < 0 for c in self.counts):
            raise MalformedRle("negative run length")
        total = sum(self.counts)
        if total != self.height * self.width:
            raise MalformedRle(
                f"run lengths sum to {total}, expected {self.height * self.width}"
            )

    def to_string(self) -> str:
        return rle_counts_to_string(self.counts)

    @classmethod
    def from_string(cls, text: str, height: int, width: int) -> "Rle":
        return cls(height, width, tuple(rle_string_to_counts(text)))

    def area(self) -> int:
        """Number of set pixels, computable without decoding."""
        return sum(self.counts[1::2])


def _require_mask(mask: BinaryMask) -> BinaryMask:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a 2D mask, got shape {arr.shape}")
    if arr.dtype != np.bool_:
        arr = arr.astype(bool)
    return arr


def rle_counts_to_string(counts: Sequence[int]) -> str:
    """Serialize run lengths to the compressed character string."""
    chars = []
    for i, count in enumerate(counts):
        x = int(count)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            chunk = x & 0x1F
            x >>= 5
            more = (x != -1) if (chunk & 0x10) else (x != 0)
            if more:
                chunk |= 0x20
            chars.append(chr(chunk + _CHAR_BASE))
    return "".join(chars)


def rle_string_to_counts(text: str) -> list[int]:
    """Parse a compressed character string back into run lengths."""
    counts: list[int] = []
    pos = 0
    length = len(text)
    while pos < length:
        x = 0
        k = 0
        more = True
        while more:
            if pos >= length:
                raise MalformedRle("truncated RLE string")
            code = ord(text[pos]) - _CHAR_BASE
            if code < 0 or ord(text[pos]) > _CHAR_MAX:
                raise MalformedRle(f"invalid RLE character {text[pos]!r} at {pos}")
            x |= (code & 0x1F) << (5 * k)
            more = bool(code & 0x20)
            pos += 1
            k += 1
            if not more and (code & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        if x < 0:
            raise MalformedRle("negative run length after delta decoding")
        counts.append(x)
    return counts


def rle_encode(mask: BinaryMask) -> Rle:
    mask = _require_mask(mask)
    flat = mask.reshape(-1, order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return Rle(mask.shape[0], mask.shape[1], tuple(int(r) for r in runs))


def rle_decode(rle: Rle) -> BinaryMask:
    total = rle.height * rle.width
    counts = np.asarray(rle.counts, dtype=np.int64)
    if counts.sum() != total:
        raise MalformedRle("run lengths do not cover the mask")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape((rle.height, rle.width), order="F")


def union_masks(
    masks: Sequence[BinaryMask],
    shape: Optional[Tuple[int, int]] = None,
) -> BinaryMask:
    """Per-pixel OR of masks; `shape` is required for an empty sequence."""
    masks = [_require_mask(m) for m in masks]
    if not masks:
        if shape is None:
            raise ValueError("shape is required to union an empty mask sequence")
        return np.zeros(shape, dtype=bool)
    first = masks[0].shape
    for m in masks[1:]:
        if m.shape != first:
            raise DimensionMismatch(f"mask shapes differ: {first} vs {m.shape}")
    if shape is not None and first != tuple(shape):
        raise DimensionMismatch(f"masks have shape {first}, expected {tuple(shape)}")
    out = masks[0].copy()
    for m in masks[1:]:
        np.logical_or(out, m, out=out)
    return out


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, half-open on the max side: [x1, x2) x [y1, y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})")

    def center(self) -> Tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def pixel_rect(self, height: int, width: int) -> Tuple[int, int, int, int]:
        """Integer pixel rectangle: floor on the min side, ceil on the max
        side, clamped to the frame. May be empty after clamping."""
        x1 = max(0, math.floor(self.x1))
        y1 = max(0, math.floor(self.y1))
        x2 = min(width, math.ceil(self.x2))
        y2 = min(height, math.ceil(self.y2))
        return x1, y1, max(x1, x2), max(y1, y2)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def rect_mask(box: BBox, height: int, width: int) -> BinaryMask:
    """Rasterize a box as a filled pixel rectangle."""
    x1, y1, x2, y2 = box.pixel_rect(height, width)
    out = np.zeros((height, width), dtype=bool)
    out[y1:y2, x1:x2] = True
    return out


def bbox_iou(a: BBox, b: BBox) -> float:
    """Plain box-vs-box IoU on continuous coordinates."""
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter / (area_a + area_b - inter)


def bbox_mask_iou(box: BBox, mask: BinaryMask, local: bool = False) -> float:
    """IoU between a rasterized box and a mask, both as pixel sets.

    With local=True the denominator is the box area alone (intersection
    over box), a variant useful when the mask is a union over many
    objects and the global union would dilute the ratio. Returns 0.0
    when both pixel sets are empty.
    """
    mask = _require_mask(mask)
    height, width = mask.shape
    x1, y1, x2, y2 = box.pixel_rect(height, width)
    box_area = (x2 - x1) * (y2 - y1)
    inter = int(mask[y1:y2, x1:x2].sum()) if box_area else 0
    if local:
        return inter / box_area if box_area else 0.0
    mask_area = int(mask.sum())
    union = box_area + mask_area - inter
    return inter / union if union else 0.0


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    a = _require_mask(a)
    b = _require_mask(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.logical_and(a, b).sum())
    union = int(a.sum()) + int(b.sum()) - inter
    return inter / union if union else 0.0


def mask_to_bbox(mask: BinaryMask) -> Optional[BBox]:
    """Tight half-open box around the set pixels, or None for an empty mask."""
    mask = _require_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return BBox(float(cols[0]), float(rows[0]), float(cols[-1] + 1), float(rows[-1] + 1))


def mask_centroid(mask: BinaryMask) -> Optional[Tuple[float, float]]:
    """Mean of set-pixel centers ((col + 0.5, row + 0.5)), or None if empty."""
    mask = _require_mask(mask)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return None
    return (float(cols.mean()) + 0.5, float(rows.mean()) + 0.5)
