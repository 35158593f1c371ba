"""Subprocess bridge between inference backends and a tracking pipeline.

The pipeline talks to a model host over line-delimited JSON on standard
streams: one request per line in, one response per line out, strictly in
order. This package is the host side. The shipped backend replays a
recorded script deterministically, which is enough to exercise every
corner of the protocol without weights or a GPU; a live backend plugs in
by implementing the same five-method surface and handing the object to
serve().
"""

from .replay import ReplayError, ScriptError, ScriptModel
from .server import PROTOCOL_VERSION, main, serve

__all__ = [
    "PROTOCOL_VERSION",
    "ReplayError",
    "ScriptError",
    "ScriptModel",
    "main",
    "serve",
]
