"""Client for segmenter/detector subprocesses speaking line-delimited JSON.

A model host runs as a child process and talks over its standard streams:
one JSON object per line, one response line per request line, answered in
request order. The first exchange is a versioned handshake:

    -> {"op": "hello", "v": 1}
    <- {"ok": true, "v": 1, "width": 320, "height": 240, "n_frames": 120}

The client may announce width/height/n_frames in the hello when it already
knows them; the host must then echo them exactly. When the client sends
none, the host's reply is authoritative. After the handshake the ops are
detect, add_prompt, propagate, drop_track, set_window, and shutdown. Masks
travel as compressed RLE strings at the handshake dimensions.

A response with ok=false, a malformed response line, or a closed stream
raises AdapterFault, which the frame loop treats like any other segmenter
failure: the run stops and partial results are kept. A mask whose run
counts do not cover the handshake dimensions raises RleDimensionMismatch.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
from typing import Dict, List, Optional, Sequence, Union

from .association import Detection
from .io_formats import RleDimensionMismatch
from .masks import BBox, MalformedRle, Rle, rle_decode, rle_string_to_counts
from .pipeline import SegmenterFailure
from .tracking import MaskObservation

__all__ = [
    "PROTOCOL_VERSION",
    "AdapterFault",
    "AdapterProcess",
    "AdapterSegmenter",
]

PROTOCOL_VERSION = 1

log = logging.getLogger(__name__)


class AdapterFault(SegmenterFailure):
    """The adapter broke the protocol or reported an error."""


class AdapterProcess:
    """One child process plus the request/response bookkeeping.

    The constructor spawns the command, performs the hello handshake, and
    pins the frame geometry for the session. Use as a context manager so
    the child is always shut down, even after a fault.
    """

    def __init__(
        self,
        cmd: Union[str, Sequence[str]],
        width: Optional[int] = None,
        height: Optional[int] = None,
        n_frames: Optional[int] = None,
    ) -> None:
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        if not argv:
            raise AdapterFault("empty adapter command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterFault(f"cannot start adapter {argv[0]!r}: {exc}") from exc
        self._responses_read = 0
        self.width = 0
        self.height = 0
        self.n_frames = 0
        self._hello(width, height, n_frames)

    # -- lifecycle -----------------------------------------------------

    def __enter__(self) -> "AdapterProcess":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    @property
    def returncode(self) -> Optional[int]:
        """Child exit code, or None while it is still running."""
        return self._proc.poll()

    def close(self) -> None:
        """Ask the child to exit; kill it if it will not."""
        if self._proc.poll() is None:
            try:
                self._send({"op": "shutdown"})
                self._proc.stdin.close()
            except (OSError, AdapterFault):
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                log.warning("adapter ignored shutdown; killing it")
                self._proc.kill()
                self._proc.wait()

    # -- wire ----------------------------------------------------------

    def _send(self, obj: dict) -> None:
        line = json.dumps(obj, separators=(",", ":"))
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise AdapterFault(f"adapter stdin closed: {exc}") from exc

    def _recv(self) -> dict:
        line = self._proc.stdout.readline()
        if line == "":
            code = self._proc.poll()
            raise AdapterFault(
                f"adapter closed its stream (exit code {code})"
            )
        self._responses_read += 1
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterFault(
                f"response {self._responses_read} is not valid JSON: {exc}"
            ) from exc
        if not isinstance(resp, dict) or not isinstance(resp.get("ok"), bool):
            raise AdapterFault(
                f"response {self._responses_read} lacks a boolean 'ok' field"
            )
        return resp

    def request(
        self,
        op: str,
        frame_index: Optional[int] = None,
        payload: Optional[dict] = None,
    ) -> dict:
        """One request/response round trip; raises AdapterFault on ok=false."""
        msg: Dict[str, object] = {"op": op}
        if frame_index is not None:
            msg["frame_index"] = frame_index
        if payload is not None:
            msg["payload"] = payload
        self._send(msg)
        resp = self._recv()
        if not resp["ok"]:
            raise AdapterFault(f"{op}: {resp.get('error', 'unspecified error')}")
        return resp

    # -- handshake -------------------------------------------------------

    def _hello(
        self,
        width: Optional[int],
        height: Optional[int],
        n_frames: Optional[int],
    ) -> None:
        msg: Dict[str, object] = {"op": "hello", "v": PROTOCOL_VERSION}
        announced = {"width": width, "height": height, "n_frames": n_frames}
        for key, value in announced.items():
            if value is not None:
                msg[key] = value
        self._send(msg)
        resp = self._recv()
        if not resp["ok"]:
            raise AdapterFault(
                f"hello rejected: {resp.get('error', 'unspecified error')}"
            )
        if resp.get("v") != PROTOCOL_VERSION:
            raise AdapterFault(
                f"adapter speaks protocol version {resp.get('v')!r}, "
                f"need {PROTOCOL_VERSION}"
            )
        for key in ("width", "height", "n_frames"):
            value = resp.get(key)
            if not isinstance(value, int) or value <= 0:
                raise AdapterFault(f"hello response has bad {key}: {value!r}")
            if announced[key] is not None and value != announced[key]:
                raise AdapterFault(
                    f"adapter {key} {value} does not match announced "
                    f"{announced[key]}"
                )
        self.width = resp["width"]
        self.height = resp["height"]
        self.n_frames = resp["n_frames"]

    # -- payload parsing -------------------------------------------------

    def _decode_mask(self, rle_str: object):
        if not isinstance(rle_str, str):
            raise AdapterFault(f"mask rle must be a string, got {type(rle_str)}")
        try:
            counts = rle_string_to_counts(rle_str)
        except MalformedRle as exc:
            raise AdapterFault(f"undecodable rle payload: {exc}") from exc
        try:
            rle = Rle(height=self.height, width=self.width, counts=counts)
        except MalformedRle as exc:
            raise RleDimensionMismatch(
                self._responses_read,
                f"mask does not cover the {self.height}x{self.width} "
                f"frame announced in the handshake: {exc}",
            ) from exc
        return rle_decode(rle)

    def _observation(self, entry: object) -> MaskObservation:
        if not isinstance(entry, dict):
            raise AdapterFault(f"observation must be an object, got {entry!r}")
        track_id = entry.get("track_id")
        score = entry.get("score")
        if not isinstance(track_id, int) or isinstance(track_id, bool):
            raise AdapterFault(f"observation has bad track_id: {track_id!r}")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise AdapterFault(f"observation has bad score: {score!r}")
        mask = self._decode_mask(entry.get("rle"))  # dimension errors surface as-is
        try:
            return MaskObservation(
                mask=mask,
                score=float(score),
                embedding=b"",
                track_id=track_id,
            )
        except ValueError as exc:
            raise AdapterFault(f"invalid observation: {exc}") from exc

    def observations(self, resp: dict) -> List[MaskObservation]:
        raw = resp.get("observations", [])
        if not isinstance(raw, list):
            raise AdapterFault("'observations' must be a list")
        return [self._observation(entry) for entry in raw]

    def detect(self, frame_index: int) -> List[Detection]:
        """Run the host's detector on one frame."""
        resp = self.request("detect", frame_index=frame_index)
        raw = resp.get("detections", [])
        if not isinstance(raw, list):
            raise AdapterFault("'detections' must be a list")
        out: List[Detection] = []
        for entry in raw:
            if not isinstance(entry, dict):
                raise AdapterFault(f"detection must be an object, got {entry!r}")
            bbox = entry.get("bbox")
            if not (isinstance(bbox, list) and len(bbox) == 4):
                raise AdapterFault(f"detection has bad bbox: {bbox!r}")
            try:
                out.append(
                    Detection(
                        bbox=BBox(*(float(v) for v in bbox)),
                        score=float(entry.get("score")),
                        class_id=int(entry.get("class_id")),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise AdapterFault(f"invalid detection: {exc}") from exc
        return out


class AdapterSegmenter:
    """Segmenter contract implemented by forwarding to an AdapterProcess."""

    def __init__(self, proc: AdapterProcess) -> None:
        self._proc = proc

    def add_prompt(
        self, frame_index: int, bbox: BBox, track_id: int
    ) -> MaskObservation:
        resp = self._proc.request(
            "add_prompt",
            frame_index=frame_index,
            payload={"track_id": track_id, "bbox": list(bbox.as_tuple())},
        )
        obs = self._proc.observations(resp)
        if len(obs) != 1 or obs[0].track_id != track_id:
            raise AdapterFault(
                f"add_prompt for track {track_id} answered with "
                f"{[o.track_id for o in obs]}"
            )
        return obs[0]

    def propagate(self, frame_index: int) -> List[MaskObservation]:
        resp = self._proc.request("propagate", frame_index=frame_index)
        return self._proc.observations(resp)

    def drop_track(self, track_id: int) -> None:
        self._proc.request("drop_track", payload={"track_id": track_id})

    def set_memory_window(self, t_w: int) -> None:
        self._proc.request("set_window", payload={"t_w": t_w})
