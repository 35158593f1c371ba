"""What the quality gates buy, and what the memory window costs.

Part one reruns two adversarial scenes with the track-quality and
association gates toggled and compares HOTA. Part two sweeps the
propagation memory window on a long scene and watches the retained
state shrink while the output stays put.
"""

from motskit.metrics import (
    EvalInput,
    combine_inputs,
    evaluate,
    seq_objects_from_trajectories,
)
from motskit.pipeline import ablation_variants, run_sequence
from motskit.synthsim import (
    SynthSegmenter,
    corpus_tracker_config,
    generate_scene,
    gt_to_eval_objects,
    scene_by_name,
    synth_detect,
)


def run_scene(spec, cfg):
    gt = generate_scene(spec)
    frames = [
        synth_detect(gt.frames[i], spec.noise, spec.seed, i,
                     frame_shape=(gt.height, gt.width))
        for i in range(gt.n_frames)
    ]
    trajectories, stats = run_sequence(
        frames, SynthSegmenter(gt), cfg, (gt.height, gt.width))
    inp = EvalInput.build(
        gt=gt_to_eval_objects(gt),
        pred=seq_objects_from_trajectories(trajectories),
    )
    return inp, stats


# -- gates on, gates off ----------------------------------------------------

scenes = [scene_by_name("long_occlusion"), scene_by_name("false_positive_storm")]
print("ablation over", ", ".join(s.name for s in scenes))
print(f"{'variant':8s} {'HOTA(car)':>10s} {'HOTA(ped)':>10s}")
for name, cfg in ablation_variants(corpus_tracker_config()):
    pooled = combine_inputs([run_scene(spec, cfg)[0] for spec in scenes])
    classes = evaluate(pooled, classes=[1, 2]).classes
    print(f"{name:8s} {classes[1].hota:10.4f} {classes[2].hota:10.4f}")
print()

# -- memory window sweep ----------------------------------------------------

probe = scene_by_name("memory_probe")
print(f"memory window sweep on {probe.name!r} ({probe.n_frames} frames)")
print("memory is counted in retained state entries, not bytes")
print(f"{'t_w':>9s} {'peak entries':>13s}")
baseline = None
for t_w in (0, 4, 8, 16, 64):
    _, stats = run_scene(probe, corpus_tracker_config(t_w=t_w))
    if baseline is None:
        baseline = stats.peak_memory_entries
        note = "baseline"
    else:
        note = f"-{1.0 - stats.peak_memory_entries / baseline:.1%}"
    label = "unbounded" if t_w == 0 else str(t_w)
    print(f"{label:>9s} {stats.peak_memory_entries:13d}  ({note})")
