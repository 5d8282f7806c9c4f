"""Interchange types and the on-disk formats that connect the pipeline stages.

Detections travel as newline-delimited JSON (one record per line, streamable);
tracks, scenes, features, similarity matrices and evaluation reports are
single JSON documents; crops are PNG files whose background pixels are exactly
(0, 0, 0).  All floats are serialized with full precision (shortest
round-tripping repr), so read(write(x)) == x bitwise for finite values.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DuplicateSceneId,
    LabelMissing,
    LengthError,
    MissingFile,
    NonMonotoneFrames,
    SchemaError,
)

Bbox = tuple[float, float, float, float]  # (x, y, w, h) in pixels

HIST_DIM = 24  # 3 channels x 8 bins


def _check_unit(value, name):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise SchemaError(f"{name} must be a finite number in [0, 1], got {value!r}")


def _check_bbox(bbox, name="bbox"):
    if len(bbox) != 4 or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in bbox):
        raise SchemaError(f"{name} must be four finite numbers (x, y, w, h), got {bbox!r}")
    if bbox[2] <= 0 or bbox[3] <= 0:
        raise SchemaError(f"{name} must have positive width and height, got {bbox!r}")


@dataclass(frozen=True)
class ShoeBox:
    """One detected shoe: box in frame coordinates plus detector confidence."""

    bbox: Bbox
    conf: float

    def __post_init__(self):
        _check_bbox(self.bbox, "shoe bbox")
        _check_unit(self.conf, "shoe conf")
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "conf", float(self.conf))


@dataclass(frozen=True)
class DetectionRecord:
    """One detected person in one frame of one video."""

    video_id: str
    frame_idx: int
    bbox: Bbox
    det_score: float
    runner_prob: float
    crop_ref: str
    shoe_boxes: tuple[ShoeBox, ...] = ()

    def __post_init__(self):
        if not isinstance(self.frame_idx, int) or self.frame_idx < 0:
            raise SchemaError(f"frame_idx must be a non-negative integer, got {self.frame_idx!r}")
        _check_bbox(self.bbox)
        _check_unit(self.det_score, "det_score")
        _check_unit(self.runner_prob, "runner_prob")
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "det_score", float(self.det_score))
        object.__setattr__(self, "runner_prob", float(self.runner_prob))
        object.__setattr__(self, "shoe_boxes", tuple(self.shoe_boxes))

    def to_json(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_idx": self.frame_idx,
            "bbox": list(self.bbox),
            "det_score": self.det_score,
            "runner_prob": self.runner_prob,
            "crop_ref": self.crop_ref,
            "shoe_boxes": [{"bbox": list(s.bbox), "conf": s.conf} for s in self.shoe_boxes],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DetectionRecord":
        try:
            return cls(
                video_id=str(obj["video_id"]),
                frame_idx=int(obj["frame_idx"]),
                bbox=tuple(obj["bbox"]),
                det_score=obj["det_score"],
                runner_prob=obj["runner_prob"],
                crop_ref=str(obj["crop_ref"]),
                shoe_boxes=tuple(
                    ShoeBox(tuple(s["bbox"]), s["conf"]) for s in obj.get("shoe_boxes", [])
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed detection record: {exc}") from exc


class CropImage:
    """A background-masked RGB crop; background pixels are exactly (0, 0, 0)."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise SchemaError(f"crop pixels must be (H, W, 3) uint8, got {arr.shape} {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SchemaError("crop must have positive dimensions")
        arr = arr.copy()
        arr.setflags(write=False)
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def foreground_mask(self) -> np.ndarray:
        """Boolean (H, W) mask of non-background pixels (any channel nonzero)."""
        return self.pixels.any(axis=2)

    def __eq__(self, other):
        return isinstance(other, CropImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class SceneFrame:
    frame_idx: int
    bbox: Bbox
    crop_ref: str

    def __post_init__(self):
        _check_bbox(self.bbox)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))


@dataclass(frozen=True)
class ShoeCrop:
    crop_ref: str
    conf: float


@dataclass(frozen=True)
class SceneRecord:
    """One tracked left-to-right passage of one runner.

    ``start_frame`` is the per-video frame counter the lap-time filter
    compares; ``two_step_indices`` select the period-normalized two-step
    subsequence out of ``frames`` and are absent when no stride period could
    be detected (the scene is then flagged).
    """

    scene_id: str
    video_id: str
    track_id: int
    start_frame: int
    end_frame: int
    frames: tuple[SceneFrame, ...]
    two_step_indices: Optional[tuple[int, ...]] = None
    shoe_crop: Optional[ShoeCrop] = None
    runner_id: Optional[str] = None
    period: Optional[int] = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.start_frame > self.end_frame:
            raise SchemaError(f"scene {self.scene_id!r}: start_frame > end_frame")
        if not self.frames:
            raise SchemaError(f"scene {self.scene_id!r}: frames must be non-empty")
        idxs = [f.frame_idx for f in self.frames]
        if any(b <= a for a, b in zip(idxs, idxs[1:])):
            raise SchemaError(f"scene {self.scene_id!r}: frame_idx must be strictly increasing")
        if self.two_step_indices is not None:
            ts = tuple(int(i) for i in self.two_step_indices)
            object.__setattr__(self, "two_step_indices", ts)
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise SchemaError(f"scene {self.scene_id!r}: two_step_indices must be strictly increasing")
            if ts and (ts[0] < 0 or ts[-1] >= len(self.frames)):
                raise SchemaError(f"scene {self.scene_id!r}: two_step_indices out of range")

    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "video_id": self.video_id,
            "track_id": self.track_id,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "frames": [
                {"frame_idx": f.frame_idx, "bbox": list(f.bbox), "crop_ref": f.crop_ref}
                for f in self.frames
            ],
            "two_step_indices": list(self.two_step_indices) if self.two_step_indices is not None else None,
            "shoe_crop": (
                {"crop_ref": self.shoe_crop.crop_ref, "conf": self.shoe_crop.conf}
                if self.shoe_crop
                else None
            ),
            "runner_id": self.runner_id,
            "period": self.period,
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SceneRecord":
        try:
            shoe = obj.get("shoe_crop")
            return cls(
                scene_id=str(obj["scene_id"]),
                video_id=str(obj["video_id"]),
                track_id=int(obj["track_id"]),
                start_frame=int(obj["start_frame"]),
                end_frame=int(obj["end_frame"]),
                frames=tuple(
                    SceneFrame(int(f["frame_idx"]), tuple(f["bbox"]), str(f["crop_ref"]))
                    for f in obj["frames"]
                ),
                two_step_indices=(
                    tuple(int(i) for i in obj["two_step_indices"])
                    if obj.get("two_step_indices") is not None
                    else None
                ),
                shoe_crop=ShoeCrop(str(shoe["crop_ref"]), float(shoe["conf"])) if shoe else None,
                runner_id=obj.get("runner_id"),
                period=int(obj["period"]) if obj.get("period") is not None else None,
                flags=tuple(obj.get("flags", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed scene record: {exc}") from exc


def _check_hist(vec, name):
    vals = tuple(float(v) for v in vec)
    if len(vals) != HIST_DIM:
        raise LengthError(f"{name} must have length {HIST_DIM}, got {len(vals)}")
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise SchemaError(f"{name} entries must be finite and non-negative")
    return vals


@dataclass(frozen=True)
class FeatureBundle:
    """Per-scene appearance features: color histograms plus named embeddings."""

    scene_id: str
    body_hist: tuple[float, ...]
    shoe_hist: Optional[tuple[float, ...]] = None
    embeddings: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "body_hist", _check_hist(self.body_hist, "body_hist"))
        if self.shoe_hist is not None:
            object.__setattr__(self, "shoe_hist", _check_hist(self.shoe_hist, "shoe_hist"))
        embs = {}
        for name, vec in dict(self.embeddings).items():
            vals = tuple(float(v) for v in vec)
            if not vals:
                raise LengthError(f"embedding {name!r} must have nonzero length")
            if any(not math.isfinite(v) for v in vals):
                raise SchemaError(f"embedding {name!r} contains non-finite values")
            embs[str(name)] = vals
        object.__setattr__(self, "embeddings", embs)

    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "body_hist": list(self.body_hist),
            "shoe_hist": list(self.shoe_hist) if self.shoe_hist is not None else None,
            "embeddings": {k: list(v) for k, v in sorted(self.embeddings.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureBundle":
        try:
            return cls(
                scene_id=str(obj["scene_id"]),
                body_hist=tuple(obj["body_hist"]),
                shoe_hist=tuple(obj["shoe_hist"]) if obj.get("shoe_hist") is not None else None,
                embeddings={k: tuple(v) for k, v in obj.get("embeddings", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed feature bundle: {exc}") from exc


class SimilarityMatrix:
    """Symmetric pairwise scene similarities with a zero, ignored diagonal."""

    __slots__ = ("scene_ids", "values", "method_tag")

    def __init__(self, scene_ids, values, method_tag: str):
        ids = tuple(str(s) for s in scene_ids)
        vals = np.asarray(values, dtype=np.float64)
        n = len(ids)
        if vals.shape != (n, n):
            raise SchemaError(f"similarity values must be {n}x{n}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise SchemaError("similarity values must be finite")
        if np.any(np.abs(vals) > 1.0 + 1e-9):
            raise SchemaError("similarity values must lie in [-1, 1]")
        if not np.allclose(vals, vals.T, atol=1e-9, rtol=0):
            raise SchemaError("similarity matrix must be symmetric")
        if n and np.any(np.diag(vals) != 0.0):
            raise SchemaError("similarity diagonal must be exactly 0")
        vals = vals.copy()
        vals.setflags(write=False)
        self.scene_ids = ids
        self.values = vals
        self.method_tag = str(method_tag)

    def __eq__(self, other):
        return (
            isinstance(other, SimilarityMatrix)
            and self.scene_ids == other.scene_ids
            and self.method_tag == other.method_tag
            and np.array_equal(self.values, other.values)
        )

    def to_json(self) -> dict:
        return {
            "scene_ids": list(self.scene_ids),
            "values": [list(row) for row in self.values],
            "method_tag": self.method_tag,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimilarityMatrix":
        try:
            return cls(obj["scene_ids"], obj["values"], obj["method_tag"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed similarity matrix: {exc}") from exc


@dataclass(frozen=True)
class QueryResult:
    scene_id: str
    ap: float
    num_positives: int


@dataclass(frozen=True)
class EvalReport:
    """Re-identification metrics under the leave-one-out query protocol.

    ``cmc`` maps rank n to the fraction of included queries with a correct
    match in the top n; ranks 1 and 5 are always present.  Queries with no
    other scene of the same runner are excluded and do not affect metrics.
    """

    map_score: float
    cmc: Mapping[int, float]
    per_query: tuple[QueryResult, ...]
    excluded_queries: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "cmc", {int(k): float(v) for k, v in dict(self.cmc).items()})
        object.__setattr__(self, "per_query", tuple(self.per_query))
        object.__setattr__(self, "excluded_queries", tuple(self.excluded_queries))
        for name, v in [("map_score", self.map_score), *self.cmc.items()]:
            if not (0.0 <= v <= 1.0):
                raise SchemaError(f"metric {name} out of [0, 1]: {v}")
        ordered = sorted(self.cmc.items())
        if any(b[1] < a[1] for a, b in zip(ordered, ordered[1:])):
            raise SchemaError("CMC must be non-decreasing in n")
        if 1 not in self.cmc or 5 not in self.cmc:
            raise SchemaError("CMC must include ranks 1 and 5")

    @property
    def rank1(self) -> float:
        return self.cmc[1]

    @property
    def rank5(self) -> float:
        return self.cmc[5]

    def to_json(self) -> dict:
        return {
            "map": self.map_score,
            "rank1": self.rank1,
            "rank5": self.rank5,
            "cmc": {str(n): v for n, v in sorted(self.cmc.items())},
            "per_query": [
                {"scene_id": q.scene_id, "ap": q.ap, "num_positives": q.num_positives}
                for q in self.per_query
            ],
            "excluded_queries": list(self.excluded_queries),
            "protocol": {
                "query": "leave-one-out",
                "tie_break": "ascending scene_id",
                "excluded": "queries with no same-id gallery scene",
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        try:
            return cls(
                map_score=float(obj["map"]),
                cmc={int(k): float(v) for k, v in obj["cmc"].items()},
                per_query=tuple(
                    QueryResult(str(q["scene_id"]), float(q["ap"]), int(q["num_positives"]))
                    for q in obj["per_query"]
                ),
                excluded_queries=tuple(obj["excluded_queries"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed eval report: {exc}") from exc


@dataclass(frozen=True)
class TrackFrame:
    frame_idx: int
    bbox: Bbox
    crop_ref: str
    shoe_boxes: tuple[ShoeBox, ...] = ()

    def __post_init__(self):
        _check_bbox(self.bbox)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "shoe_boxes", tuple(self.shoe_boxes))


@dataclass(frozen=True)
class TrackRecord:
    """A finished track as it appears in tracks.json."""

    track_id: int
    video_id: str
    frames: tuple[TrackFrame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise SchemaError(f"track {self.track_id}: frames must be non-empty")
        idxs = [f.frame_idx for f in self.frames]
        if any(b <= a for a, b in zip(idxs, idxs[1:])):
            raise SchemaError(f"track {self.track_id}: frame_idx must be strictly increasing")

    def to_json(self) -> dict:
        return {
            "track_id": self.track_id,
            "video_id": self.video_id,
            "frames": [
                {
                    "frame_idx": f.frame_idx,
                    "bbox": list(f.bbox),
                    "crop_ref": f.crop_ref,
                    "shoe_boxes": [{"bbox": list(s.bbox), "conf": s.conf} for s in f.shoe_boxes],
                }
                for f in self.frames
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrackRecord":
        try:
            return cls(
                track_id=int(obj["track_id"]),
                video_id=str(obj["video_id"]),
                frames=tuple(
                    TrackFrame(
                        int(f["frame_idx"]),
                        tuple(f["bbox"]),
                        str(f["crop_ref"]),
                        tuple(ShoeBox(tuple(s["bbox"]), s["conf"]) for s in f.get("shoe_boxes", [])),
                    )
                    for f in obj["frames"]
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed track record: {exc}") from exc


@dataclass(frozen=True)
class LabelInterval:
    """Ground truth: one runner occupies [start_frame, end_frame] of a video."""

    video_id: str
    runner_id: str
    start_frame: int
    end_frame: int


@dataclass(frozen=True)
class LabelSet:
    """Scene labels, either direct (scene_id -> runner_id) or as frame
    intervals resolved against built scenes (scene ids are assigned by the
    tracker and cannot be known up front)."""

    labels: Mapping[str, str] = field(default_factory=dict)
    intervals: tuple[LabelInterval, ...] = ()

    def resolve(self, scenes: Iterable[SceneRecord]) -> dict[str, str]:
        """Map every scene to a runner id; LabelMissing when one cannot be."""
        out = {}
        for scene in scenes:
            if scene.scene_id in self.labels:
                out[scene.scene_id] = self.labels[scene.scene_id]
                continue
            best = None
            best_overlap = 0
            for iv in self.intervals:
                if iv.video_id != scene.video_id:
                    continue
                overlap = min(scene.end_frame, iv.end_frame) - max(scene.start_frame, iv.start_frame) + 1
                if overlap > best_overlap:
                    best, best_overlap = iv, overlap
            span = scene.end_frame - scene.start_frame + 1
            if best is None or best_overlap * 2 <= span:
                raise LabelMissing(f"no label covers scene {scene.scene_id!r}")
            out[scene.scene_id] = best.runner_id
        return out


# --- on-disk formats --------------------------------------------------------


def _open_for_read(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    return path


def _dump_json(obj: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def _load_json(path) -> dict:
    with open(_open_for_read(path)) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc


def read_detections(path) -> list[DetectionRecord]:
    """Read a detections.jsonl stream, enforcing the line schema and
    non-decreasing frame order."""
    records = []
    last_frame = -1
    with open(_open_for_read(path)) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line=lineno) from exc
            try:
                rec = DetectionRecord.from_json(obj)
            except SchemaError as exc:
                raise SchemaError(str(exc), line=lineno) from exc
            if rec.frame_idx < last_frame:
                raise NonMonotoneFrames(
                    f"line {lineno}: frame_idx {rec.frame_idx} after {last_frame}"
                )
            last_frame = rec.frame_idx
            records.append(rec)
    return records


def write_detections(records: Iterable[DetectionRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec.to_json(), sort_keys=True))
            f.write("\n")


def load_crop(crop_ref) -> CropImage:
    path = _open_for_read(crop_ref)
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return CropImage(arr)


def save_crop(img: CropImage, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def write_features(bundles: Iterable[FeatureBundle], path, config: Optional[dict] = None) -> None:
    bundles = list(bundles)
    seen = set()
    for b in bundles:
        if b.scene_id in seen:
            raise DuplicateSceneId(b.scene_id)
        seen.add(b.scene_id)
    doc = {"scenes": [b.to_json() for b in bundles]}
    if config is not None:
        doc["config"] = config
    _dump_json(doc, path)


def read_features(path) -> list[FeatureBundle]:
    doc = _load_json(path)
    bundles = [FeatureBundle.from_json(obj) for obj in doc.get("scenes", [])]
    seen = set()
    for b in bundles:
        if b.scene_id in seen:
            raise DuplicateSceneId(b.scene_id)
        seen.add(b.scene_id)
    return bundles


def write_scenes(scenes: Iterable[SceneRecord], path, config: Optional[dict] = None) -> None:
    doc = {"scenes": [s.to_json() for s in scenes]}
    if config is not None:
        doc["config"] = config
    _dump_json(doc, path)


def read_scenes(path) -> list[SceneRecord]:
    doc = _load_json(path)
    return [SceneRecord.from_json(obj) for obj in doc.get("scenes", [])]


def write_tracks(tracks: Iterable[TrackRecord], path, config: Optional[dict] = None) -> None:
    doc = {"tracks": [t.to_json() for t in tracks]}
    if config is not None:
        doc["config"] = config
    _dump_json(doc, path)


def read_tracks(path) -> list[TrackRecord]:
    doc = _load_json(path)
    return [TrackRecord.from_json(obj) for obj in doc.get("tracks", [])]


def write_similarity(matrix: SimilarityMatrix, path, config: Optional[dict] = None) -> None:
    doc = matrix.to_json()
    if config is not None:
        doc["config"] = config
    _dump_json(doc, path)


def read_similarity(path) -> SimilarityMatrix:
    return SimilarityMatrix.from_json(_load_json(path))


def write_eval(report: EvalReport, path, config: Optional[dict] = None) -> None:
    doc = report.to_json()
    if config is not None:
        doc["config"] = config
    _dump_json(doc, path)


def read_eval(path) -> EvalReport:
    return EvalReport.from_json(_load_json(path))


def write_labels(labels: LabelSet, path, extra: Optional[dict] = None) -> None:
    doc = {
        "labels": dict(labels.labels),
        "intervals": [
            {
                "video_id": iv.video_id,
                "runner_id": iv.runner_id,
                "start_frame": iv.start_frame,
                "end_frame": iv.end_frame,
            }
            for iv in labels.intervals
        ],
    }
    if extra:
        doc.update(extra)
    _dump_json(doc, path)


def read_labels(path) -> LabelSet:
    doc = _load_json(path)
    try:
        return LabelSet(
            labels={str(k): str(v) for k, v in doc.get("labels", {}).items()},
            intervals=tuple(
                LabelInterval(
                    str(iv["video_id"]),
                    str(iv["runner_id"]),
                    int(iv["start_frame"]),
                    int(iv["end_frame"]),
                )
                for iv in doc.get("intervals", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed labels file: {exc}") from exc


@dataclass(frozen=True)
class EmbeddingSet:
    """A named external embedding, per scene or per frame of the two-step
    subsequence (per-frame vectors get mean-pooled at featurize time)."""

    name: str
    per_frame: bool
    vectors: Mapping[str, tuple]  # scene_id -> vector, or tuple of vectors


def write_embeddings(path, name: str, vectors: Mapping, per_frame: bool = False) -> None:
    doc = {
        "name": name,
        "per_frame": per_frame,
        "vectors": {
            sid: ([list(v) for v in vec] if per_frame else list(vec))
            for sid, vec in sorted(vectors.items())
        },
    }
    _dump_json(doc, path)


def read_embeddings(path) -> EmbeddingSet:
    doc = _load_json(path)
    try:
        per_frame = bool(doc.get("per_frame", False))
        vectors = {}
        for sid, vec in doc["vectors"].items():
            if per_frame:
                vectors[str(sid)] = tuple(tuple(float(x) for x in v) for v in vec)
            else:
                vectors[str(sid)] = tuple(float(x) for x in vec)
        return EmbeddingSet(name=str(doc["name"]), per_frame=per_frame, vectors=vectors)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed embeddings file: {exc}") from exc
