"""Turns finished tracks into validated running scenes.

Non-runner and incomplete tracks are filtered on length, shape and net
left-to-right displacement; the stride period is estimated from the bbox
width signal (leg extension widens the box once per step); the two-step
subsequence and the best shoe crop are attached to each surviving scene.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data_model import (
    CropImage,
    SceneFrame,
    SceneRecord,
    ShoeCrop,
    TrackRecord,
    load_crop,
    save_crop,
)
from .errors import ConfigError, MissingFile, NoPeriodicity, TooShort

FLAG_NO_PERIODICITY = "no_periodicity"
FLAG_TOO_SHORT_FOR_TWO_STEPS = "too_short_for_two_steps"
FLAG_SHOE_CROP_FAILED = "shoe_crop_failed"


@dataclass(frozen=True)
class SceneConfig:
    min_track_frames: int = 30
    aspect_min: float = 1.2
    aspect_max: float = 5.0
    min_net_displacement_frac: float = 0.5
    two_step_len: int = 16
    period_min_lag: int = 8
    period_max_lag: int = 90
    period_min_peak: float = 0.2

    def __post_init__(self):
        if self.period_min_lag < 2:
            raise ConfigError("period_min_lag must be >= 2")
        if self.period_max_lag <= self.period_min_lag:
            raise ConfigError("period_max_lag must exceed period_min_lag")
        if self.two_step_len < 4:
            raise ConfigError("two_step_len must be >= 4")


def filter_tracks(tracks: Sequence[TrackRecord], cfg: SceneConfig,
                  frame_width: float) -> list[TrackRecord]:
    """Keep tracks that look like one full left-to-right runner passage."""
    kept = []
    for t in tracks:
        if len(t.frames) < cfg.min_track_frames:
            continue
        aspects = [f.bbox[3] / f.bbox[2] for f in t.frames]
        med = float(np.median(aspects))
        if not (cfg.aspect_min <= med <= cfg.aspect_max):
            continue
        cx0 = t.frames[0].bbox[0] + t.frames[0].bbox[2] / 2
        cx1 = t.frames[-1].bbox[0] + t.frames[-1].bbox[2] / 2
        displacement = cx1 - cx0
        if displacement <= 0 or displacement < cfg.min_net_displacement_frac * frame_width:
            continue
        kept.append(t)
    return kept


def estimate_stride_period(widths: Sequence[float], min_lag: int = 8, max_lag: int = 90,
                           min_peak: float = 0.2) -> int:
    """Lag of the best normalized autocorrelation peak of the detrended
    width series; one width oscillation corresponds to one step."""
    arr = np.asarray(widths, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("width series must be finite")
    n = arr.size
    if n < 2 * min_lag:
        raise TooShort(f"need at least {2 * min_lag} samples, got {n}")
    t = np.arange(n)
    slope, intercept = np.polyfit(t, arr, 1)
    y = arr - (slope * t + intercept)
    energy = float(y @ y)
    if energy <= 0 or np.ptp(arr) == 0:
        raise NoPeriodicity("width series is constant")
    hi = min(max_lag, n - 2)
    best_lag, best_r = 0, -np.inf
    for lag in range(min_lag, hi + 1):
        r = float(y[:-lag] @ y[lag:]) / energy
        if r > best_r:
            best_lag, best_r = lag, r
    if best_r < min_peak:
        raise NoPeriodicity(f"peak autocorrelation {best_r:.3f} below {min_peak}")
    return best_lag


def extract_two_step_sequence(track: TrackRecord, period: int, n: int) -> tuple[int, ...]:
    """Indices into track.frames covering two steps, resampled to n frames.

    The 2*period window is centered on the track midpoint, where the runner
    is most fully visible; resampling picks the nearest frame at uniform
    fractional positions.
    """
    length = len(track.frames)
    window = 2 * period
    if length < window:
        raise TooShort(f"track has {length} frames, two steps need {window}")
    if window < n:
        raise TooShort(f"two-step window of {window} frames cannot yield {n} samples")
    start = min(max(length // 2 - period, 0), length - window)
    if n == 1:
        return (start,)
    step = (window - 1) / (n - 1)
    return tuple(start + int(math.floor(i * step + 0.5)) for i in range(n))


@dataclass(frozen=True)
class ShoeSelection:
    frame_pos: int  # index into track.frames
    frame_idx: int
    bbox: tuple[float, float, float, float]
    conf: float


def select_shoe(track: TrackRecord) -> Optional[ShoeSelection]:
    """The shoe box with the globally highest confidence over the track;
    ties go to the earliest frame, then the smallest box x."""
    best = None
    for pos, frame in enumerate(track.frames):
        for shoe in frame.shoe_boxes:
            key = (-shoe.conf, pos, shoe.bbox[0])
            if best is None or key < best[0]:
                best = (key, ShoeSelection(pos, frame.frame_idx, shoe.bbox, shoe.conf))
    return best[1] if best else None


def cut_shoe_crop(crop: CropImage, person_bbox, shoe_bbox) -> Optional[CropImage]:
    """Cut the shoe region out of a person crop; shoe boxes are in frame
    coordinates, the crop's origin is the person box corner."""
    px, py = person_bbox[0], person_bbox[1]
    sx = int(round(shoe_bbox[0] - px))
    sy = int(round(shoe_bbox[1] - py))
    sw = int(round(shoe_bbox[2]))
    sh = int(round(shoe_bbox[3]))
    x0, y0 = max(sx, 0), max(sy, 0)
    x1, y1 = min(sx + sw, crop.width), min(sy + sh, crop.height)
    if x1 <= x0 or y1 <= y0:
        return None
    return CropImage(crop.pixels[y0:y1, x0:x1])


def _safe_name(scene_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in scene_id)


def build_scenes(tracks: Sequence[TrackRecord], cfg: SceneConfig, frame_width: float,
                 data_root: Optional[Path] = None) -> list[SceneRecord]:
    """One SceneRecord per surviving track, ordered by (video_id, track_id).

    When data_root is given, shoe crops are cut from the body crops and
    written as PNGs under <data_root>/shoe_crops/.
    """
    scenes = []
    for track in sorted(filter_tracks(tracks, cfg, frame_width),
                        key=lambda t: (t.video_id, t.track_id)):
        scene_id = f"{track.video_id}:{track.track_id}"
        flags = []
        period = None
        indices = None
        try:
            period = estimate_stride_period(
                [f.bbox[2] for f in track.frames],
                min_lag=cfg.period_min_lag, max_lag=cfg.period_max_lag,
                min_peak=cfg.period_min_peak,
            )
            indices = extract_two_step_sequence(track, period, cfg.two_step_len)
        except NoPeriodicity:
            flags.append(FLAG_NO_PERIODICITY)
        except TooShort:
            flags.append(FLAG_TOO_SHORT_FOR_TWO_STEPS)

        shoe_crop = None
        selection = select_shoe(track)
        if selection is not None and data_root is not None:
            frame = track.frames[selection.frame_pos]
            try:
                body = load_crop(Path(data_root) / frame.crop_ref)
                shoe_img = cut_shoe_crop(body, frame.bbox, selection.bbox)
            except MissingFile:
                shoe_img = None
            if shoe_img is None:
                flags.append(FLAG_SHOE_CROP_FAILED)
            else:
                ref = f"shoe_crops/{_safe_name(scene_id)}.png"
                save_crop(shoe_img, Path(data_root) / ref)
                shoe_crop = ShoeCrop(crop_ref=ref, conf=selection.conf)

        scenes.append(SceneRecord(
            scene_id=scene_id,
            video_id=track.video_id,
            track_id=track.track_id,
            start_frame=track.frames[0].frame_idx,
            end_frame=track.frames[-1].frame_idx,
            frames=tuple(SceneFrame(f.frame_idx, f.bbox, f.crop_ref) for f in track.frames),
            two_step_indices=indices,
            shoe_crop=shoe_crop,
            period=period,
            flags=tuple(flags),
        ))
    return scenes
