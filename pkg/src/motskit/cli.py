"""Command-line surface for the tracking toolkit.

Subcommands:
    track         run the tracker over a scene or a detection stream
    eval          score a prediction file against ground truth
    synth         write synthetic scene specs, ground truth, and detections
    ablate        metric table over the quality-gate / association toggles
    sweep-window  memory and accuracy versus the propagation window size

Shared flags: --config (tracker config JSON), --seed (detector noise
override), --out-dir (where output files land). Exit codes: 0 success,
1 usage error, 2 data error. Set MOTSKIT_LOG_LEVEL to change verbosity.

When no --config is given, the commands that drive synthetic scenes
(track --segmenter synth, ablate, sweep-window) default to
corpus_tracker_config(), whose overlap gate compares each detection box
against the union mask by overlap ratio; adapter-backed runs default to
the stock TrackerConfig().

Memory is counted in retained segmenter state entries (one entry = one
stored frame of one track's state), a hardware-independent proxy. It is
reported as peak_memory_entries in run stats and window sweeps; wall-clock
fields are the only outputs that vary between reruns of the same command.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .adapter_client import AdapterFault, AdapterProcess, AdapterSegmenter
from .io_formats import (
    ParseError,
    detections_to_frame_list,
    read_detections,
    read_mots,
    write_detections,
    write_mot_results,
    write_mots_objects,
    write_mots_results,
)
from .masks import DimensionMismatch, MalformedRle
from .metrics import (
    ClassReport,
    EvalInput,
    combine_inputs,
    evaluate,
    seq_objects_from_trajectories,
)
from .pipeline import RunStats, Trajectory, ablation_variants, run_sequence
from .synthsim import (
    GtSequence,
    InvalidSpec,
    SceneSpec,
    SynthSegmenter,
    corpus_tracker_config,
    generate_scene,
    gt_to_eval_objects,
    perfect_corpus,
    scene_by_name,
    standard_corpus,
    synth_detect,
)
from .tracking import TrackerConfig

__all__ = ["main", "build_parser", "run_synth_scene", "UsageError", "DataError"]

log = logging.getLogger(__name__)

CLASS_IDS: Tuple[int, ...] = (1, 2)
_CLASS_NAMES = {1: "Car", 2: "Pedestrian"}

MEMORY_MODEL_NOTE = (
    "memory counted in retained segmenter state entries "
    "(one entry = one stored frame of one track's state), not bytes"
)

_SWEEP_FIELDS = [
    "t_w",
    "hota_car",
    "hota_pedestrian",
    "peak_memory_entries",
    "wall_time_s",
    "hota_car_delta_pct",
    "hota_pedestrian_delta_pct",
    "peak_memory_delta_pct",
]


class UsageError(Exception):
    """Bad invocation: flags, combinations, or config values. Exit 1."""


class DataError(Exception):
    """Unreadable or inconsistent input data. Exit 2."""


_DATA_ERRORS = (
    DataError,
    ParseError,
    InvalidSpec,
    MalformedRle,
    DimensionMismatch,
    AdapterFault,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """argparse reports errors via SystemExit(2); remap them to exit 1."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="tracker config JSON file")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the detector noise seed")
    common.add_argument("--out-dir", metavar="DIR", default=".",
                        help="directory for output files (default: .)")

    parser = _Parser(prog="motskit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("track", parents=[common],
                       help="run the tracker and write MOTS/MOT results")
    p.add_argument("--segmenter", choices=("synth", "adapter"),
                   default="synth",
                   help="mask source: scene-bound synthetic or subprocess")
    p.add_argument("--detections", metavar="PATH",
                   help="detection stream file; omitted, the segmenter "
                        "source's own detector is used")
    p.add_argument("--adapter", metavar="CMD",
                   help="command line of the adapter subprocess")
    p.add_argument("--scene", metavar="NAME|PATH",
                   help="scene name or .scene.json path (synth segmenter)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", parents=[common],
                       help="score predictions against ground truth")
    p.add_argument("--gt", required=True, metavar="PATH",
                   help="ground-truth MOTS file")
    p.add_argument("--pred", required=True, metavar="PATH",
                   help="predicted MOTS file")
    p.add_argument("--mode", choices=("mask", "bbox"), default="mask",
                   help="similarity used for matching (default: mask)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common],
                       help="write scene specs, ground truth, and detections")
    p.add_argument("--scene", metavar="NAME|PATH",
                   help="one scene by name or spec file")
    p.add_argument("--corpus", choices=("standard", "perfect"),
                   help="write a whole bundled corpus")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ablate", parents=[common],
                       help="metric table over TQA/OAF toggle combinations")
    p.add_argument("--scene-corpus", required=True, metavar="DIR",
                   help="directory of *.scene.json files")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep-window", parents=[common],
                       help="memory/accuracy sweep over window sizes")
    p.add_argument("--scene-corpus", required=True, metavar="DIR",
                   help="directory of *.scene.json files")
    p.add_argument("--windows", required=True, metavar="LIST",
                   help="comma-separated window sizes, 0 = unbounded")
    p.set_defaults(func=cmd_sweep)

    return parser


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _ensure_out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args: argparse.Namespace,
                 default: TrackerConfig) -> TrackerConfig:
    if not args.config:
        return default
    try:
        return TrackerConfig.from_file(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def _spec_from_file(path: Path) -> SceneSpec:
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read scene spec {path}: {exc}") from exc
    try:
        return SceneSpec.from_json(text)
    except InvalidSpec:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"bad scene spec {path}: {exc}") from exc


def _resolve_scene(arg: str) -> SceneSpec:
    path = Path(arg)
    if arg.endswith(".json") or path.exists():
        return _spec_from_file(path)
    return scene_by_name(arg)


def _corpus_specs(dir_arg: str) -> List[SceneSpec]:
    root = Path(dir_arg)
    if not root.is_dir():
        raise DataError(f"scene corpus {root} is not a directory")
    files = sorted(root.glob("*.scene.json"))
    if not files:
        raise DataError(f"no *.scene.json files in {root}")
    return [_spec_from_file(f) for f in files]


def run_synth_scene(
    spec: SceneSpec,
    cfg: TrackerConfig,
    seed: Optional[int] = None,
) -> Tuple[GtSequence, List[Trajectory], RunStats]:
    """Generate a scene, track it end to end, return (gt, trajectories, stats).

    Detections come from the synthetic detector; `seed` overrides the
    scene's own noise seed when given.
    """
    gt = generate_scene(spec)
    det_seed = spec.seed if seed is None else seed
    frames = [
        synth_detect(gt.frames[i], spec.noise, det_seed, i,
                     frame_shape=(gt.height, gt.width))
        for i in range(gt.n_frames)
    ]
    trajectories, stats = run_sequence(
        frames, SynthSegmenter(gt), cfg, (gt.height, gt.width))
    return gt, trajectories, stats


def _eval_input(gt: GtSequence, trajectories: List[Trajectory]) -> EvalInput:
    return EvalInput.build(
        gt=gt_to_eval_objects(gt),
        pred=seq_objects_from_trajectories(trajectories),
    )


def _pooled_report(inputs: List[EvalInput]):
    pooled = combine_inputs(inputs) if len(inputs) > 1 else inputs[0]
    return evaluate(pooled, classes=CLASS_IDS)


def _report_dict(r: ClassReport) -> Dict[str, object]:
    return {
        "HOTA": r.hota,
        "DetA": r.det_a,
        "AssA": r.ass_a,
        "LocA": r.loc_a,
        "MOTA": r.mota,
        "IDs": r.id_switches,
    }


def _stats_payload(trajectories: List[Trajectory], stats: RunStats) -> dict:
    return {
        "frames": stats.frames,
        "n_tracks": len(trajectories),
        "peak_memory_entries": stats.peak_memory_entries,
        "memory_model": MEMORY_MODEL_NOTE,
        "aborted": stats.aborted,
        "failed_frame": stats.failed_frame,
        "wall_time_s": sum(stats.frame_times_s),
        "frame_times_s": [round(t, 6) for t in stats.frame_times_s],
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------

def cmd_track(args: argparse.Namespace) -> int:
    out = _ensure_out_dir(args)
    if args.segmenter == "synth":
        trajectories, stats = _track_synth(args)
    else:
        trajectories, stats = _track_adapter(args)

    (out / "results.mots.txt").write_text(write_mots_results(trajectories))
    (out / "results.mot.txt").write_text(write_mot_results(trajectories))
    _write_json(out / "run_stats.json", _stats_payload(trajectories, stats))

    if stats.aborted:
        log.error("run aborted at frame %s; partial results written",
                  stats.failed_frame)
        print(f"error: segmenter failed at frame {stats.failed_frame}; "
              f"partial results in {out}", file=sys.stderr)
        return 2
    print(f"tracked {stats.frames} frames, {len(trajectories)} tracks -> {out}")
    return 0


def _track_synth(args: argparse.Namespace):
    if not args.scene:
        raise UsageError("--segmenter synth requires --scene")
    cfg = _load_config(args, corpus_tracker_config())
    spec = _resolve_scene(args.scene)
    gt = generate_scene(spec)
    if args.detections:
        try:
            frames = detections_to_frame_list(
                read_detections(args.detections), gt.n_frames)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    else:
        seed = spec.seed if args.seed is None else args.seed
        frames = [
            synth_detect(gt.frames[i], spec.noise, seed, i,
                         frame_shape=(gt.height, gt.width))
            for i in range(gt.n_frames)
        ]
    return run_sequence(frames, SynthSegmenter(gt), cfg,
                        (gt.height, gt.width))


def _track_adapter(args: argparse.Namespace):
    if not args.adapter:
        raise UsageError(
            "--segmenter adapter requires --adapter CMD to supply masks "
            "(and detections, unless --detections is given)")
    cfg = _load_config(args, TrackerConfig())
    with AdapterProcess(args.adapter) as proc:
        if args.detections:
            try:
                frames: Sequence = detections_to_frame_list(
                    read_detections(args.detections), proc.n_frames)
            except ValueError as exc:
                raise DataError(str(exc)) from exc
        else:
            frames = (proc.detect(i) for i in range(proc.n_frames))
        return run_sequence(frames, AdapterSegmenter(proc), cfg,
                            (proc.height, proc.width))


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args: argparse.Namespace) -> int:
    out = _ensure_out_dir(args)
    gt = read_mots(args.gt)
    pred = read_mots(args.pred)
    try:
        inp = EvalInput.build(gt=gt, pred=pred, mode=args.mode)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    report = evaluate(inp)
    print(report.format_table())
    (out / "metrics.json").write_text(report.to_json() + "\n")
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    if bool(args.scene) == bool(args.corpus):
        raise UsageError("give exactly one of --scene or --corpus")
    out = _ensure_out_dir(args)
    if args.scene:
        specs = [_resolve_scene(args.scene)]
    elif args.corpus == "standard":
        specs = standard_corpus()
    else:
        specs = perfect_corpus()

    for spec in specs:
        gt = generate_scene(spec)
        seed = spec.seed if args.seed is None else args.seed
        dets = {
            i: synth_detect(gt.frames[i], spec.noise, seed, i,
                            frame_shape=(gt.height, gt.width))
            for i in range(gt.n_frames)
        }
        (out / f"{spec.name}.scene.json").write_text(spec.to_json() + "\n")
        (out / f"{spec.name}.gt.mots.txt").write_text(
            write_mots_objects(gt_to_eval_objects(gt)))
        (out / f"{spec.name}.dets.txt").write_text(write_detections(dets))
        print(f"{spec.name}: {gt.n_frames} frames -> {out}")
    return 0


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------

def cmd_ablate(args: argparse.Namespace) -> int:
    out = _ensure_out_dir(args)
    specs = _corpus_specs(args.scene_corpus)
    cfg = _load_config(args, corpus_tracker_config())

    variants = ablation_variants(cfg)
    reports = {}
    for name, vcfg in variants:
        inputs = []
        for spec in specs:
            gt, trajectories, _ = run_synth_scene(spec, vcfg, args.seed)
            inputs.append(_eval_input(gt, trajectories))
        reports[name] = _pooled_report(inputs)

    for cid in CLASS_IDS:
        print(f"class {cid} ({_CLASS_NAMES[cid]})")
        print(f"{'variant':>8} {'HOTA':>8} {'DetA':>8} {'AssA':>8} "
              f"{'LocA':>8} {'MOTA':>8} {'IDs':>6}")
        for name, _ in variants:
            r = reports[name].classes[cid]
            print(f"{name:>8} {r.hota:>8.4f} {r.det_a:>8.4f} "
                  f"{r.ass_a:>8.4f} {r.loc_a:>8.4f} {r.mota:>8.4f} "
                  f"{r.id_switches:>6}")
        print()

    payload = {
        "order": [name for name, _ in variants],
        "scenes": [spec.name for spec in specs],
        "classes": {
            str(cid): {
                name: _report_dict(reports[name].classes[cid])
                for name, _ in variants
            }
            for cid in CLASS_IDS
        },
    }
    _write_json(out / "ablate.json", payload)
    return 0


# ---------------------------------------------------------------------------
# sweep-window
# ---------------------------------------------------------------------------

def _parse_windows(text: str) -> List[int]:
    out: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = int(part)
        except ValueError:
            raise UsageError(f"bad window {part!r}: must be an integer")
        if value < 0:
            raise UsageError(f"bad window {value}: must be >= 0 "
                             f"(0 = unbounded)")
        out.append(value)
    if not out:
        raise UsageError("--windows names no window sizes")
    return out


def _pct_delta(value: float, base: float) -> float:
    if base == 0:
        return 0.0
    return (value - base) / base * 100.0


def _sweep_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            "t_w": row["t_w"],
            "hota_car": f"{row['hota_car']:.6f}",
            "hota_pedestrian": f"{row['hota_pedestrian']:.6f}",
            "peak_memory_entries": row["peak_memory_entries"],
            "wall_time_s": f"{row['wall_time_s']:.4f}",
            "hota_car_delta_pct": f"{row['hota_car_delta_pct']:.3f}",
            "hota_pedestrian_delta_pct":
                f"{row['hota_pedestrian_delta_pct']:.3f}",
            "peak_memory_delta_pct": f"{row['peak_memory_delta_pct']:.3f}",
        })
    return buf.getvalue()


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _ensure_out_dir(args)
    specs = _corpus_specs(args.scene_corpus)
    cfg = _load_config(args, corpus_tracker_config())
    windows = _parse_windows(args.windows)

    to_run = list(dict.fromkeys(windows))
    if 0 not in to_run:
        to_run.append(0)

    runs: Dict[int, dict] = {}
    for t_w in to_run:
        started = time.perf_counter()
        wcfg = replace(cfg, t_w=t_w,
                       tau_v_by_class=dict(cfg.tau_v_by_class))
        peak = 0
        inputs = []
        for spec in specs:
            gt, trajectories, stats = run_synth_scene(spec, wcfg, args.seed)
            peak += stats.peak_memory_entries
            inputs.append(_eval_input(gt, trajectories))
        report = _pooled_report(inputs)
        runs[t_w] = {
            "t_w": t_w,
            "hota_car": report.classes[1].hota,
            "hota_pedestrian": report.classes[2].hota,
            "peak_memory_entries": peak,
            "wall_time_s": time.perf_counter() - started,
        }

    base = runs[0]
    rows = []
    for t_w in dict.fromkeys(windows):
        row = dict(runs[t_w])
        row["hota_car_delta_pct"] = _pct_delta(
            row["hota_car"], base["hota_car"])
        row["hota_pedestrian_delta_pct"] = _pct_delta(
            row["hota_pedestrian"], base["hota_pedestrian"])
        row["peak_memory_delta_pct"] = _pct_delta(
            row["peak_memory_entries"], base["peak_memory_entries"])
        rows.append(row)

    csv_text = _sweep_csv(rows)
    print(csv_text, end="")
    (out / "sweep.csv").write_text(csv_text)
    _write_json(out / "sweep.json", {
        "memory_model": MEMORY_MODEL_NOTE,
        "scenes": [spec.name for spec in specs],
        "baseline": base,
        "rows": rows,
    })
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _init_logging() -> None:
    name = os.environ.get("MOTSKIT_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _init_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
