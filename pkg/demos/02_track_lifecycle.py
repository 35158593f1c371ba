"""The per-track quality state machine.

Each frame, a track's mask confidence classifies it High, Uncertain, or
Low. High refreshes the track's memory, Uncertain coasts, and a run of
consecutive Lows retires the track. This walks one track through a
dip-and-recover script and then through removal.
"""

import numpy as np

from motskit.tracking import (
    MaskObservation,
    Track,
    TrackerConfig,
    apply_observation,
)

cfg = TrackerConfig()
print(f"thresholds: high > {cfg.tau_h}, low <= {cfg.tau_l}, "
      f"removal after {cfg.n_tries} consecutive lows, "
      f"memory window {cfg.t_w} frames")
print()


def run_script(label, scores):
    track = Track(id=1, class_id=1, born_frame=0)
    mask = np.ones((4, 4), dtype=bool)
    print(label)
    for frame, score in enumerate(scores):
        obs = MaskObservation(mask=mask, score=score, embedding=b"", track_id=1)
        update = apply_observation(track, obs, frame, cfg)
        note = []
        if update.memory_pushed:
            note.append("memory push")
        if update.removed:
            note.append("track removed")
        suffix = f"  ({', '.join(note)})" if note else ""
        print(f"  frame {frame}: score {score:.2f} -> "
              f"{update.new_state.value}{suffix}")
        if update.removed:
            break
    print()


run_script("dip and recover:", [0.95, 0.88, 0.40, 0.05, 0.05, 0.91, 0.93])
run_script("lost for good:", [0.92, 0.08, 0.09, 0.05, 0.02, 0.04, 0.06])
