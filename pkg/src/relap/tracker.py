"""Tracking-by-detection: constant-velocity Kalman prediction, IoU costs and
two-stage minimum-cost association over high/low score detections.

A runner gets one track per passage; a runner that leaves the frame and
reappears later gets a new track id on purpose (cross-passage identity is the
similarity module's job).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data_model import Bbox, DetectionRecord, TrackFrame, TrackRecord
from .errors import ConfigError, DegenerateBox, MixedFrameInput, NonFiniteCost

TENTATIVE = "tentative"
ACTIVE = "active"
LOST = "lost"
FINISHED = "finished"


@dataclass(frozen=True)
class KalmanState:
    """8-d state (cx, cy, a, h, vcx, vcy, va, vh) with a = w/h."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(8)
        cov = np.asarray(self.covariance, dtype=np.float64).reshape(8, 8)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("non-finite Kalman state")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def bbox(self) -> Bbox:
        cx, cy, a, h = self.mean[:4]
        w = a * h
        return (float(cx - w / 2), float(cy - h / 2), float(w), float(h))


def _bbox_to_measurement(bbox: Bbox) -> np.ndarray:
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise DegenerateBox(f"box must have positive width and height, got {bbox!r}")
    return np.array([x + w / 2, y + h / 2, w / h, h], dtype=np.float64)


class KalmanFilter:
    """Constant-velocity filter over (cx, cy, a, h); process and measurement
    noise scale with the box height so behavior is camera-distance invariant."""

    def __init__(self, pos_weight: float = 1.0 / 20, vel_weight: float = 1.0 / 160,
                 meas_weight: Optional[float] = None):
        self.pos_weight = pos_weight
        self.vel_weight = vel_weight
        self.meas_weight = pos_weight if meas_weight is None else meas_weight
        self._motion = np.eye(8)
        self._motion[:4, 4:] = np.eye(4)
        self._observe = np.eye(4, 8)

    def initiate(self, bbox: Bbox) -> KalmanState:
        z = _bbox_to_measurement(bbox)
        mean = np.concatenate([z, np.zeros(4)])
        h = z[3]
        std = np.array([
            2 * self.pos_weight * h, 2 * self.pos_weight * h, 1e-2, 2 * self.pos_weight * h,
            10 * self.vel_weight * h, 10 * self.vel_weight * h, 1e-5, 10 * self.vel_weight * h,
        ])
        return KalmanState(mean, np.diag(std ** 2))

    def _process_noise(self, h: float) -> np.ndarray:
        std = np.array([
            self.pos_weight * h, self.pos_weight * h, 1e-2, self.pos_weight * h,
            self.vel_weight * h, self.vel_weight * h, 1e-5, self.vel_weight * h,
        ])
        return np.diag(std ** 2)

    def predict(self, state: KalmanState, freeze_velocity: bool = False) -> KalmanState:
        mean = state.mean.copy()
        if freeze_velocity:
            mean[4:] = 0.0
        h = mean[3]
        mean = self._motion @ mean
        cov = self._motion @ state.covariance @ self._motion.T + self._process_noise(h)
        return KalmanState(mean, _symmetrize(cov))

    def update(self, state: KalmanState, bbox: Bbox) -> KalmanState:
        z = _bbox_to_measurement(bbox)
        h = state.mean[3]
        std = np.array([self.meas_weight * h, self.meas_weight * h, 1e-1, self.meas_weight * h])
        meas_cov = np.diag(std ** 2)
        H = self._observe
        innovation = z - H @ state.mean
        s = H @ state.covariance @ H.T + meas_cov
        gain = np.linalg.solve(s.T, (state.covariance @ H.T).T).T
        mean = state.mean + gain @ innovation
        # Joseph form keeps the covariance PSD across long sequences
        ikh = np.eye(8) - gain @ H
        cov = ikh @ state.covariance @ ikh.T + gain @ meas_cov @ gain.T
        return KalmanState(mean, _symmetrize(cov))


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    return (cov + cov.T) / 2


_DEFAULT_KF = KalmanFilter()


def kalman_predict(state: KalmanState, kf: Optional[KalmanFilter] = None) -> KalmanState:
    return (kf or _DEFAULT_KF).predict(state)


def kalman_update(state: KalmanState, bbox: Bbox, kf: Optional[KalmanFilter] = None) -> KalmanState:
    return (kf or _DEFAULT_KF).update(state, bbox)


def iou(a: Bbox, b: Bbox) -> float:
    """Intersection over union of two (x, y, w, h) boxes."""
    if a[2] <= 0 or a[3] <= 0 or b[2] <= 0 or b[3] <= 0:
        raise DegenerateBox(f"boxes must have positive size: {a!r}, {b!r}")
    ax2, ay2 = a[0] + a[2], a[1] + a[3]
    bx2, by2 = b[0] + b[2], b[1] + b[3]
    inter = max(0.0, min(ax2, bx2) - max(a[0], b[0])) * max(0.0, min(ay2, by2) - max(a[1], b[1]))
    # areas from the same rounded extents so iou(a, a) is exactly 1
    area_a = (ax2 - a[0]) * (ay2 - a[1])
    area_b = (bx2 - b[0]) * (by2 - b[1])
    return inter / (area_a + area_b - inter)


def assign(cost: np.ndarray, max_cost: float):
    """Minimum-total-cost one-to-one assignment with post-hoc gating.

    Returns (matches, unmatched_rows, unmatched_cols); matches whose cost
    exceeds max_cost are dropped back to unmatched.
    """
    cost = np.atleast_2d(np.asarray(cost, dtype=np.float64))
    if cost.size and not np.all(np.isfinite(cost)):
        raise NonFiniteCost("cost matrix contains non-finite entries")
    n_rows, n_cols = cost.shape
    if cost.size == 0:
        return [], list(range(n_rows)), list(range(n_cols))
    rows, cols = linear_sum_assignment(cost)
    matches = []
    for r, c in zip(rows, cols):
        if cost[r, c] <= max_cost:
            matches.append((int(r), int(c)))
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    unmatched_rows = [r for r in range(n_rows) if r not in matched_rows]
    unmatched_cols = [c for c in range(n_cols) if c not in matched_cols]
    return sorted(matches), unmatched_rows, unmatched_cols


@dataclass(frozen=True)
class TrackerConfig:
    high_thresh: float = 0.6
    low_thresh: float = 0.1
    match_iou_min: float = 0.2
    max_age: int = 30
    min_hits_to_confirm: int = 3
    runner_prob_min: float = 0.5

    def __post_init__(self):
        if not (0 <= self.low_thresh < self.high_thresh <= 1):
            raise ConfigError("need 0 <= low_thresh < high_thresh <= 1")
        if not (0 < self.match_iou_min < 1):
            raise ConfigError("match_iou_min must be in (0, 1)")
        if self.max_age < 1 or self.min_hits_to_confirm < 1:
            raise ConfigError("max_age and min_hits_to_confirm must be >= 1")


class Track:
    """Mutable per-runner track state while a video is being processed."""

    def __init__(self, track_id: int, video_id: str, det: DetectionRecord,
                 state: KalmanState):
        self.track_id = track_id
        self.video_id = video_id
        self.state = state
        self.status = TENTATIVE
        self.history: list[TrackFrame] = [_det_frame(det)]
        self.hits = 1
        self.frames_since_update = 0

    def mark_update(self, det: DetectionRecord, state: KalmanState, min_hits: int) -> None:
        self.state = state
        self.history.append(_det_frame(det))
        self.hits += 1
        self.frames_since_update = 0
        if self.status == LOST or (self.status == TENTATIVE and self.hits >= min_hits):
            self.status = ACTIVE

    def to_record(self) -> TrackRecord:
        return TrackRecord(track_id=self.track_id, video_id=self.video_id,
                           frames=tuple(self.history))


def _det_frame(det: DetectionRecord) -> TrackFrame:
    return TrackFrame(det.frame_idx, det.bbox, det.crop_ref, det.shoe_boxes)


def track_frame(tracks: list[Track], dets: Sequence[DetectionRecord], cfg: TrackerConfig,
                frame_idx: Optional[int] = None, kf: Optional[KalmanFilter] = None) -> list[Track]:
    """Advance the tracker by one frame.

    Stage 1 associates live and lost tracks with high-score detections;
    stage 2 associates the remaining live tracks with low-score detections.
    Tentative tracks that miss a frame before confirming are discarded.
    """
    kf = kf or _DEFAULT_KF
    if dets:
        frames = {d.frame_idx for d in dets}
        videos = {d.video_id for d in dets}
        if len(frames) > 1 or len(videos) > 1:
            raise MixedFrameInput(f"detections span frames {sorted(frames)} videos {sorted(videos)}")
        if frame_idx is not None and frame_idx not in frames:
            raise MixedFrameInput(f"frame_idx {frame_idx} does not match detections")

    finished = [t for t in tracks if t.status == FINISHED]
    live = sorted((t for t in tracks if t.status in (TENTATIVE, ACTIVE)), key=lambda t: t.track_id)
    lost = sorted((t for t in tracks if t.status == LOST), key=lambda t: t.track_id)
    next_id = max((t.track_id for t in tracks), default=0) + 1

    for t in live + lost:
        t.state = kf.predict(t.state, freeze_velocity=(t.status == LOST))
        t.frames_since_update += 1

    dets = list(dets)
    high = [d for d in dets if d.det_score >= cfg.high_thresh]
    low = [d for d in dets if cfg.low_thresh <= d.det_score < cfg.high_thresh]
    gate = 1.0 - cfg.match_iou_min

    pool = live + lost
    cost = np.array([[1.0 - iou(t.state.bbox(), d.bbox) for d in high] for t in pool])
    cost = cost.reshape(len(pool), len(high))
    matches, u_track, u_det = assign(cost, gate)
    for ti, di in matches:
        t = pool[ti]
        t.mark_update(high[di], kf.update(t.state, high[di].bbox), cfg.min_hits_to_confirm)

    remaining = [pool[i] for i in u_track if pool[i].status in (TENTATIVE, ACTIVE)]
    cost2 = np.array([[1.0 - iou(t.state.bbox(), d.bbox) for d in low] for t in remaining])
    cost2 = cost2.reshape(len(remaining), len(low))
    matches2, u_track2, _ = assign(cost2, gate)
    for ti, di in matches2:
        t = remaining[ti]
        t.mark_update(low[di], kf.update(t.state, low[di].bbox), cfg.min_hits_to_confirm)

    out = list(finished)
    dropped = set()
    for i in u_track2:
        t = remaining[i]
        if t.status == TENTATIVE:
            dropped.add(id(t))  # never confirmed; discard as noise
        else:
            t.status = LOST
    for t in pool:
        if id(t) in dropped:
            continue
        if t.status == LOST and t.frames_since_update > cfg.max_age:
            t.status = FINISHED
        out.append(t)

    for di in u_det:
        det = high[di]
        out.append(Track(next_id, det.video_id, det, kf.initiate(det.bbox)))
        next_id += 1
    return out


def _flush(tracks: list[Track], cfg: TrackerConfig) -> list[Track]:
    """End of a video: confirmed tracks finish, unconfirmed ones are dropped."""
    out = []
    for t in tracks:
        if t.status in (ACTIVE, LOST):
            t.status = FINISHED
        if t.status == FINISHED:
            out.append(t)
    return out


def run_tracker(dets: Sequence[DetectionRecord], cfg: TrackerConfig,
                kf: Optional[KalmanFilter] = None) -> list[Track]:
    """Track all videos in a detection stream; returns finished tracks.

    Deterministic: identical input gives identical track ids and histories.
    Only detections with runner_prob >= cfg.runner_prob_min participate.
    """
    kf = kf or _DEFAULT_KF
    dets = [d for d in dets if d.runner_prob >= cfg.runner_prob_min]
    by_video: dict[str, list[DetectionRecord]] = {}
    for d in dets:
        by_video.setdefault(d.video_id, []).append(d)

    tracks: list[Track] = []
    for video_id in sorted(by_video):
        vdets = by_video[video_id]
        idxs = [d.frame_idx for d in vdets]
        if any(b < a for a, b in zip(idxs, idxs[1:])):
            raise MixedFrameInput(f"video {video_id!r}: detections not sorted by frame_idx")
        by_frame: dict[int, list[DetectionRecord]] = {}
        for d in vdets:
            by_frame.setdefault(d.frame_idx, []).append(d)
        for frame in range(idxs[0], idxs[-1] + 1):
            frame_dets = by_frame.get(frame, [])
            if not frame_dets and not any(t.status in (TENTATIVE, ACTIVE, LOST) for t in tracks):
                continue
            tracks = track_frame(tracks, frame_dets, cfg, frame_idx=frame, kf=kf)
        tracks = _flush(tracks, cfg)
    return sorted(tracks, key=lambda t: t.track_id)
