"""Deterministic synthetic detection streams with ground truth for
end-to-end pipeline testing: each runner crosses left to right in its own
lane, bbox width oscillates sinusoidally with the stride period, and crops
are solid-color bodies with a shoe patch on a black background.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .data_model import (
    CropImage,
    DetectionRecord,
    LabelInterval,
    LabelSet,
    ShoeBox,
    save_crop,
    write_detections,
    write_labels,
)
from .errors import MissingFile, SchemaError, SpecInvalid

WIDTH_AMPLITUDE = 0.25  # fractional bbox-width swing over one step
LOWER_BODY_COLOR = (96, 96, 96)  # shared "shorts and legs" color


@dataclass(frozen=True)
class RunnerSpec:
    runner_id: str
    body_color: tuple[int, int, int]
    shoe_color: tuple[int, int, int]
    stride_period: int
    speed: float


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    runners: tuple[RunnerSpec, ...]
    laps_per_runner: int = 1
    lap_gap: int = 1500
    frame_size: tuple[int, int] = (960, 900)
    noise: float = 0.02
    runner_stagger: int = 0  # 0 = auto: one crossing plus a margin
    distractors: int = 2
    body_size: tuple[int, int] = (64, 160)  # nominal (w, h) in pixels

    def __post_init__(self):
        if not self.runners:
            raise SpecInvalid("need at least one runner")
        ids = [r.runner_id for r in self.runners]
        if len(set(ids)) != len(ids):
            raise SpecInvalid("runner ids must be unique")
        for r in self.runners:
            if r.speed <= 0:
                raise SpecInvalid(f"runner {r.runner_id!r}: speed must be positive")
            if r.stride_period < 2:
                raise SpecInvalid(f"runner {r.runner_id!r}: stride_period must be >= 2")
            for color in (r.body_color, r.shoe_color):
                if len(color) != 3 or any(not (0 <= c <= 255) for c in color):
                    raise SpecInvalid(f"runner {r.runner_id!r}: bad color {color!r}")
        if self.laps_per_runner < 1 or self.lap_gap < 1:
            raise SpecInvalid("laps_per_runner and lap_gap must be >= 1")
        if self.noise < 0:
            raise SpecInvalid("noise must be non-negative")
        w0, h0 = self.body_size
        lanes = len(self.runners) * (h0 + 8)
        if self.frame_size[1] < lanes:
            raise SpecInvalid(f"frame height {self.frame_size[1]} cannot fit {len(self.runners)} lanes")
        if self.frame_size[0] < 4 * w0:
            raise SpecInvalid("frame width too small for a crossing")
        for r in self.runners:
            if self.crossing_frames(r) < 2 * r.stride_period + 2:
                raise SpecInvalid(
                    f"runner {r.runner_id!r}: crossing too short for two steps "
                    f"({self.crossing_frames(r)} frames, period {r.stride_period})"
                )

    def crossing_frames(self, runner: RunnerSpec) -> int:
        w_max = self.body_size[0] * (1 + WIDTH_AMPLITUDE)
        travel = self.frame_size[0] - w_max - 2
        return int(travel / runner.speed) + 1

    def stagger(self) -> int:
        if self.runner_stagger > 0:
            return self.runner_stagger
        return max(self.crossing_frames(r) for r in self.runners) + 60


@dataclass(frozen=True)
class SynthDataset:
    video_id: str
    detections: tuple[DetectionRecord, ...]
    crops: dict  # crop_ref -> CropImage
    labels: LabelSet
    det_runner_ids: tuple[str, ...]  # parallel to detections


def _paint_crop(width: int, height: int, body_color, shoe_color,
                with_shoe: bool) -> tuple[CropImage, tuple[float, float, float, float]]:
    """Solid-color torso over black background; returns the crop and the
    shoe box in crop-local coordinates."""
    px = np.zeros((height, width, 3), dtype=np.uint8)
    x0, x1 = int(width * 0.3), max(int(width * 0.7), int(width * 0.3) + 1)
    top, mid, bottom = int(height * 0.05), int(height * 0.5), int(height * 0.95)
    px[top:mid, x0:x1] = body_color
    px[mid:bottom, x0:x1] = LOWER_BODY_COLOR
    sx0, sx1 = int(width * 0.35), max(int(width * 0.65), int(width * 0.35) + 1)
    sy0, sy1 = int(height * 0.88), max(int(height * 0.97), int(height * 0.88) + 1)
    if with_shoe:
        px[sy0:sy1, sx0:sx1] = shoe_color
    shoe_box = (float(sx0), float(sy0), float(sx1 - sx0), float(sy1 - sy0))
    return CropImage(px), shoe_box


def generate(spec: SynthSpec) -> SynthDataset:
    """Deterministic in the seed: identical specs give identical outputs."""
    rng = np.random.default_rng(spec.seed)
    video_id = f"synth-{spec.seed}"
    w0, h0 = spec.body_size
    stagger = spec.stagger()

    entries = []  # (frame_idx, order, DetectionRecord, runner_id)
    crops: dict[str, CropImage] = {}
    intervals = []
    order = 0

    for ri, runner in enumerate(spec.runners):
        lane_y = 4 + ri * (h0 + 8)
        phase = float(rng.uniform(0, 2 * math.pi))
        n_frames = spec.crossing_frames(runner)
        for lap in range(spec.laps_per_runner):
            t0 = ri * stagger + lap * spec.lap_gap
            intervals.append(LabelInterval(video_id, runner.runner_id, t0, t0 + n_frames - 1))
            for s in range(n_frames):
                frame = t0 + s
                w = w0 * (1 + WIDTH_AMPLITUDE * math.sin(2 * math.pi * s / runner.stride_period + phase))
                w += float(rng.normal(0, 0.2))
                x = s * runner.speed + float(rng.normal(0, 0.3))
                y = lane_y + float(rng.normal(0, 0.3))
                x = min(max(x, 0.0), spec.frame_size[0] - w - 1)
                bbox = (x, y, w, float(h0))

                if rng.random() < 0.06:
                    det_score = float(np.clip(0.3 + rng.normal(0, 0.05), 0.12, 0.45))
                else:
                    det_score = float(np.clip(0.9 + rng.normal(0, spec.noise), 0.65, 0.999))
                runner_prob = float(np.clip(0.9 + rng.normal(0, 0.03), 0.55, 0.999))

                with_shoe = bool(rng.random() < 0.7)
                shoe_conf = float(rng.uniform(0.5, 0.95)) if with_shoe else 0.0
                crop_w, crop_h = max(int(round(w)), 8), h0
                crop, local_shoe = _paint_crop(crop_w, crop_h, runner.body_color,
                                               runner.shoe_color, with_shoe)
                crop_ref = f"crops/{runner.runner_id}_l{lap}_f{frame:06d}.png"
                crops[crop_ref] = crop
                shoe_boxes = ()
                if with_shoe:
                    shoe_boxes = (ShoeBox(
                        (bbox[0] + local_shoe[0], bbox[1] + local_shoe[1],
                         local_shoe[2], local_shoe[3]),
                        shoe_conf,
                    ),)
                det = DetectionRecord(
                    video_id=video_id, frame_idx=frame, bbox=bbox,
                    det_score=det_score, runner_prob=runner_prob,
                    crop_ref=crop_ref, shoe_boxes=shoe_boxes,
                )
                entries.append((frame, order, det, runner.runner_id))
                order += 1

    if entries:
        last_frame = max(e[0] for e in entries)
        for di in range(spec.distractors):
            ref = f"crops/distractor_{di}.png"
            crops[ref] = CropImage(np.full((80, 40, 3), 120 + 10 * di, dtype=np.uint8))
            dx = 30.0 + di * 90.0
            dy = float(spec.frame_size[1] - 90)
            for frame in range(di * 7, last_frame + 1, 25):
                det = DetectionRecord(
                    video_id=video_id, frame_idx=frame, bbox=(dx, dy, 40.0, 80.0),
                    det_score=0.8, runner_prob=float(rng.uniform(0.05, 0.3)),
                    crop_ref=ref,
                )
                entries.append((frame, order, det, "_distractor"))
                order += 1

    entries.sort(key=lambda e: (e[0], e[1]))
    return SynthDataset(
        video_id=video_id,
        detections=tuple(e[2] for e in entries),
        crops=crops,
        labels=LabelSet(intervals=tuple(intervals)),
        det_runner_ids=tuple(e[3] for e in entries),
    )


def write_dataset(ds: SynthDataset, out_dir, config: Optional[dict] = None) -> None:
    out = Path(out_dir)
    write_detections(ds.detections, out / "detections.jsonl")
    for ref in sorted(ds.crops):
        save_crop(ds.crops[ref], out / ref)
    extra = {"det_runner_ids": list(ds.det_runner_ids)}
    if config is not None:
        extra["config"] = config
    write_labels(ds.labels, out / "labels.json", extra=extra)


def read_spec(path) -> SynthSpec:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path) as f:
        doc = yaml.safe_load(f)
    try:
        runners = tuple(
            RunnerSpec(
                runner_id=str(r["runner_id"]),
                body_color=tuple(int(c) for c in r["body_color"]),
                shoe_color=tuple(int(c) for c in r["shoe_color"]),
                stride_period=int(r["stride_period"]),
                speed=float(r["speed"]),
            )
            for r in doc["runners"]
        )
        kwargs = {}
        for key in ("laps_per_runner", "lap_gap", "runner_stagger", "distractors"):
            if key in doc:
                kwargs[key] = int(doc[key])
        if "noise" in doc:
            kwargs["noise"] = float(doc["noise"])
        if "frame_size" in doc:
            kwargs["frame_size"] = tuple(int(v) for v in doc["frame_size"])
        if "body_size" in doc:
            kwargs["body_size"] = tuple(int(v) for v in doc["body_size"])
        return SynthSpec(seed=int(doc["seed"]), runners=runners, **kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed synth spec: {exc}") from exc
