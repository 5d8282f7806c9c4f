import math

import numpy as np
import pytest

from relap.data_model import (
    CropImage,
    DetectionRecord,
    SceneFrame,
    SceneRecord,
    ShoeBox,
    TrackFrame,
    TrackRecord,
)


def make_crop(width, height, color=(200, 40, 40), background_rows=0):
    """Solid-color crop; the first `background_rows` rows stay black."""
    px = np.zeros((height, width, 3), dtype=np.uint8)
    px[background_rows:] = color
    return CropImage(px)


def make_detection(frame_idx, bbox, video_id="v0", det_score=0.9, runner_prob=0.9,
                   crop_ref="crops/x.png", shoe_boxes=()):
    return DetectionRecord(
        video_id=video_id, frame_idx=frame_idx, bbox=tuple(float(v) for v in bbox),
        det_score=det_score, runner_prob=runner_prob, crop_ref=crop_ref,
        shoe_boxes=tuple(ShoeBox(tuple(map(float, b)), c) for b, c in shoe_boxes),
    )


def make_track_record(track_id=1, video_id="v0", n_frames=40, x0=0.0, speed=8.0,
                      w0=40.0, h0=100.0, period=None, amp=0.25, start_frame=0,
                      shoe_confs=None):
    """Synthetic left-to-right track; width oscillates when period is set.

    shoe_confs: optional {frame position: confidence} for shoe boxes.
    """
    frames = []
    for i in range(n_frames):
        w = w0 if period is None else w0 * (1 + amp * math.sin(2 * math.pi * i / period))
        bbox = (x0 + i * speed, 50.0, w, h0)
        shoes = ()
        if shoe_confs and i in shoe_confs:
            shoes = (ShoeBox((bbox[0] + 10, bbox[1] + h0 * 0.9, 12.0, 8.0), shoe_confs[i]),)
        frames.append(TrackFrame(start_frame + i, bbox, f"crops/t{track_id}_{i}.png", shoes))
    return TrackRecord(track_id=track_id, video_id=video_id, frames=tuple(frames))


def make_scene(scene_id="v0:1", video_id="v0", start_frame=0, n_frames=3):
    frames = tuple(
        SceneFrame(start_frame + i, (float(i), 0.0, 10.0, 20.0), f"crops/{scene_id}_{i}.png")
        for i in range(n_frames)
    )
    return SceneRecord(
        scene_id=scene_id, video_id=video_id, track_id=1,
        start_frame=start_frame, end_frame=start_frame + n_frames - 1, frames=frames,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
