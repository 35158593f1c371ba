"""Line-delimited JSON protocol server on standard streams.

One request per line in, one response per line out, answered strictly
in request order. Two failure tiers:

  - Semantic failures (unknown track, exhausted script, out-of-order
    frame, unusable payload) answer in-band with {"ok": false, "error":
    ...} and the process keeps serving.
  - Protocol violations (a line that is not a JSON object, a first
    request that is not hello, a version or dimension mismatch in the
    handshake, or the stream ending without shutdown) answer with a
    final error line where possible and terminate with exit code 2.

A shutdown request is acknowledged and the process exits 0. Every line
written is one complete JSON object followed by a newline, flushed
before the next read.
"""

import argparse
import json
import sys
from typing import Optional, TextIO

from .replay import ReplayError, ScriptError, ScriptModel

PROTOCOL_VERSION = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _write(out: TextIO, obj: dict) -> None:
    out.write(json.dumps(obj, separators=(",", ":")) + "\n")
    out.flush()


def _fail(out: TextIO, message: str) -> int:
    """Answer a protocol violation and signal termination."""
    _write(out, {"ok": False, "error": message})
    return 2


def _int_field(msg: dict, key: str):
    value = msg.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ReplayError(f"{key} must be an integer, got {value!r}")
    return value


def _handshake(model, msg: dict, out: TextIO) -> Optional[int]:
    """Validate the hello and reply; returns an exit code on violation."""
    if msg.get("op") != "hello":
        return _fail(out, f"expected hello, got {msg.get('op')!r}")
    if msg.get("v") != PROTOCOL_VERSION:
        return _fail(
            out,
            f"unsupported protocol version {msg.get('v')!r}, "
            f"this host speaks v{PROTOCOL_VERSION}",
        )
    ours = {"width": model.width, "height": model.height, "n_frames": model.n_frames}
    for key, value in ours.items():
        if key in msg and msg[key] != value:
            return _fail(
                out, f"{key} mismatch: client announced {msg[key]!r}, "
                     f"this model serves {value}"
            )
    _write(out, {"ok": True, "v": PROTOCOL_VERSION, **ours})
    return None


def _dispatch(model, op: str, msg: dict) -> dict:
    payload = msg.get("payload") or {}
    if not isinstance(payload, dict):
        raise ReplayError(f"payload must be an object, got {payload!r}")
    if op == "detect":
        return {"detections": model.detect(_int_field(msg, "frame_index"))}
    if op == "add_prompt":
        bbox = payload.get("bbox")
        return {
            "observations": model.add_prompt(
                _int_field(msg, "frame_index"), _int_field(payload, "track_id"), bbox
            )
        }
    if op == "propagate":
        return {"observations": model.propagate(_int_field(msg, "frame_index"))}
    if op == "drop_track":
        model.drop_track(_int_field(payload, "track_id"))
        return {}
    if op == "set_window":
        model.set_window(_int_field(payload, "t_w"))
        return {}
    raise ReplayError(f"unknown op {op!r}")


def serve(model, lines: TextIO = None, out: TextIO = None) -> int:
    """Run the request loop until shutdown, EOF, or a protocol violation."""
    lines = sys.stdin if lines is None else lines
    out = sys.stdout if out is None else out

    first = lines.readline()
    if first == "":
        return 2
    try:
        msg = json.loads(first)
    except json.JSONDecodeError as exc:
        return _fail(out, f"request is not valid json: {exc}")
    if not isinstance(msg, dict):
        return _fail(out, "request must be a JSON object")
    violation = _handshake(model, msg, out)
    if violation is not None:
        return violation

    while True:
        line = lines.readline()
        if line == "":
            return 2  # stream ended without shutdown
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            return _fail(out, f"request is not valid json: {exc}")
        if not isinstance(msg, dict) or not isinstance(msg.get("op"), str):
            return _fail(out, "request must be a JSON object with a string 'op'")
        op = msg["op"]
        if op == "shutdown":
            _write(out, {"ok": True})
            return 0
        try:
            body = _dispatch(model, op, msg)
        except ReplayError as exc:
            _write(out, {"ok": False, "error": str(exc)})
            continue
        except Exception as exc:  # a model bug must not kill the stream
            _write(out, {"ok": False, "error": f"{type(exc).__name__}: {exc}"})
            continue
        _write(out, {"ok": True, **body})


def main(argv=None) -> int:
    parser = _Parser(
        prog="motsbridge",
        description="Serve a recorded replay script over the adapter protocol.",
    )
    parser.add_argument("--script", required=True, help="replay script (JSON)")
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        model = ScriptModel.from_file(args.script)
    except (OSError, ScriptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return serve(model)


if __name__ == "__main__":
    sys.exit(main())
