"""Drive the pipeline through an out-of-process model host.

Any detector/segmenter pair can serve the pipeline from a subprocess
speaking line-delimited JSON. Here the host is the replay server from
the companion motsbridge package, fed a three-frame script written on
the spot, and the tracker consumes it exactly as it would a live model.
"""

import json
import shlex
import sys
import tempfile

import numpy as np

from motskit.adapter_client import PROTOCOL_VERSION, AdapterProcess, AdapterSegmenter
from motskit.io_formats import write_mots_results
from motskit.masks import rle_counts_to_string, rle_encode
from motskit.pipeline import run_sequence
from motskit.tracking import TrackerConfig

HEIGHT, WIDTH = 48, 64


def rect_rle(y1, y2, x1, x2):
    mask = np.zeros((HEIGHT, WIDTH), dtype=bool)
    mask[y1:y2, x1:x2] = True
    return rle_counts_to_string(rle_encode(mask).counts)


script = {
    "v": 1,
    "width": WIDTH,
    "height": HEIGHT,
    "n_frames": 3,
    "frames": [
        {
            "detections": [
                {"class_id": 1, "score": 0.9, "bbox": [8.0, 10.0, 20.0, 20.0]}
            ],
            "tracks": {"1": {"rle": rect_rle(10, 20, 8, 20), "score": 0.95}},
        },
        {
            "detections": [],
            "tracks": {"1": {"rle": rect_rle(10, 20, 10, 22), "score": 0.95}},
        },
        {
            "detections": [],
            "tracks": {"1": {"rle": rect_rle(10, 20, 12, 24), "score": 0.95}},
        },
    ],
}

with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
    json.dump(script, fh)
    script_path = fh.name

cmd = f"{shlex.quote(sys.executable)} -m motsbridge --script {shlex.quote(script_path)}"
print(f"host command: {cmd}")

with AdapterProcess(cmd) as proc:
    print(f"handshake: {proc.width}x{proc.height}, {proc.n_frames} frames, "
          f"protocol v{PROTOCOL_VERSION}")
    detections = (proc.detect(i) for i in range(proc.n_frames))
    trajectories, stats = run_sequence(
        detections,
        AdapterSegmenter(proc),
        TrackerConfig(),
        (proc.height, proc.width),
    )

print(f"tracked {stats.frames} frames into {len(trajectories)} trajectories")
print()
print("tracking output:")
print(write_mots_results(trajectories), end="")
