"""24-dimensional RGB color histograms for upper-body and shoe crops.

Histograms count raw non-background pixels into 8 bins per channel (edges
[0,32), [32,64), ... [224,256)), flattened R then G then B.  Background
pixels are exactly (0, 0, 0) and are ignored; raw counts are kept because
the downstream Pearson correlation is shift/scale invariant anyway.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data_model import CropImage, EmbeddingSet, FeatureBundle, SceneRecord, load_crop
from .errors import EmptyForeground, LengthMismatch

log = logging.getLogger(__name__)

BODY_SIZE = (64, 64)  # (W, H), then rows 0..31 are the upper body
SHOE_SIZE = (200, 100)


def _nn_indices(src: int, dst: int) -> np.ndarray:
    # Center-aligned nearest sampling. Exact half-way ties are resolved
    # toward the image center so that mirroring the image mirrors the
    # sampled grid exactly.
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos)
    frac = pos - lo
    idx = lo + (frac > 0.5)
    tie = np.abs(frac - 0.5) < 1e-9
    idx[tie] = lo[tie] + (np.arange(dst)[tie] >= dst / 2)
    return np.clip(idx.astype(np.int64), 0, src - 1)


def nearest_resize(img: CropImage, size: tuple[int, int]) -> CropImage:
    """Nearest-neighbor resize to (width, height); never blends colors, so
    background black cannot leak into foreground bins."""
    w, h = size
    rows = _nn_indices(img.height, h)
    cols = _nn_indices(img.width, w)
    return CropImage(img.pixels[np.ix_(rows, cols)])


def rgb_histogram(img: CropImage) -> np.ndarray:
    """24-vector of raw per-channel bin counts over non-black pixels."""
    mask = img.foreground_mask()
    if not mask.any():
        raise EmptyForeground("image has no non-black pixels")
    fg = img.pixels[mask]  # (n, 3)
    bins = fg >> 5  # uint8 // 32 -> bin 0..7
    out = np.empty(24, dtype=np.float64)
    for c in range(3):
        out[8 * c:8 * (c + 1)] = np.bincount(bins[:, c], minlength=8)
    return out


def upper_body_hist(img: CropImage) -> np.ndarray:
    """Histogram of the upper half of the 64x64-resized crop (lower-body
    colors are similar across runners and only dilute the feature)."""
    resized = nearest_resize(img, BODY_SIZE)
    return rgb_histogram(CropImage(resized.pixels[: BODY_SIZE[1] // 2]))


def shoe_hist(img: CropImage) -> np.ndarray:
    """Histogram of the full shoe crop resized to 200x100."""
    return rgb_histogram(nearest_resize(img, SHOE_SIZE))


def mean_pool(vectors: Sequence[Sequence[float]]) -> np.ndarray:
    """Arithmetic mean of per-frame vectors; all must share one length."""
    arrs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not arrs:
        raise LengthMismatch("cannot pool an empty vector group")
    if any(a.shape != arrs[0].shape for a in arrs):
        raise LengthMismatch("vectors in a group must share one length")
    if all(np.array_equal(a, arrs[0]) for a in arrs[1:]):
        return arrs[0].copy()  # identical frames pool to themselves exactly
    return np.mean(arrs, axis=0)


@dataclass(frozen=True)
class FeaturizeConfig:
    body_source: str = "representative"  # or "mean" over all frames


def _representative_index(scene: SceneRecord) -> int:
    return len(scene.frames) // 2


def _body_histogram(scene: SceneRecord, data_root: Path, cfg: FeaturizeConfig) -> np.ndarray:
    if cfg.body_source == "mean":
        hists = []
        for frame in scene.frames:
            try:
                hists.append(upper_body_hist(load_crop(data_root / frame.crop_ref)))
            except EmptyForeground:
                continue
        if not hists:
            raise EmptyForeground(f"scene {scene.scene_id!r}: every crop is background-only")
        return np.mean(hists, axis=0)
    frame = scene.frames[_representative_index(scene)]
    return upper_body_hist(load_crop(data_root / frame.crop_ref))


def featurize_scenes(scenes: Sequence[SceneRecord], data_root,
                     embeddings_in: Optional[Sequence[EmbeddingSet]] = None,
                     cfg: FeaturizeConfig = FeaturizeConfig(),
                     workers: int = 1) -> tuple[list[FeatureBundle], list[str]]:
    """Build one FeatureBundle per scene; returns (bundles, skipped_ids).

    Per-frame external embeddings are mean-pooled into one vector per scene;
    per-scene embeddings pass through unchanged.  Scenes whose body crop has
    no foreground are skipped (flagged in the second return value), not fatal.
    """
    data_root = Path(data_root)
    embeddings_in = list(embeddings_in or [])

    def build(scene: SceneRecord) -> Optional[FeatureBundle]:
        try:
            body = _body_histogram(scene, data_root, cfg)
        except EmptyForeground:
            return None
        shoe = None
        if scene.shoe_crop is not None:
            try:
                shoe = shoe_hist(load_crop(data_root / scene.shoe_crop.crop_ref))
            except EmptyForeground:
                log.warning("scene %s: shoe crop is background-only, dropping shoe feature",
                            scene.scene_id)
        embs = {}
        for es in embeddings_in:
            vec = es.vectors.get(scene.scene_id)
            if vec is None:
                continue
            embs[es.name] = tuple(mean_pool(vec)) if es.per_frame else tuple(vec)
        return FeatureBundle(
            scene_id=scene.scene_id,
            body_hist=tuple(body),
            shoe_hist=tuple(shoe) if shoe is not None else None,
            embeddings=embs,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, scenes))
    else:
        results = [build(s) for s in scenes]

    bundles, skipped = [], []
    for scene, bundle in zip(scenes, results):
        if bundle is None:
            log.warning("scene %s: body crop is background-only, skipping", scene.scene_id)
            skipped.append(scene.scene_id)
        else:
            bundles.append(bundle)
    return bundles, skipped
