"""Reads the engine's scenes.json plus crop PNGs into training tensors.

Only the on-disk formats couple this package to the engine: scenes carry a
two_step_indices list selecting the period-normalized crop subsequence, and
crop_refs are paths relative to the dataset root.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import EmptySequence, MissingFile, SchemaError, ShapeMismatch

log = logging.getLogger(__name__)


def load_scenes_doc(scenes_path) -> list[dict]:
    path = Path(scenes_path)
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    scenes = doc.get("scenes")
    if not isinstance(scenes, list):
        raise SchemaError(f"{path}: expected a 'scenes' list")
    return scenes


def _load_frame(path: Path, input_size) -> np.ndarray:
    if not path.is_file():
        raise MissingFile(str(path))
    with Image.open(path) as img:
        resized = img.convert("RGB").resize(input_size, Image.BILINEAR)
    return np.asarray(resized, dtype=np.float32) / 255.0


def load_scene_sequences(scenes_path, data_root, seq_len: int,
                         input_size: tuple[int, int]) -> tuple[list[str], torch.Tensor]:
    """(scene_ids, tensor (S, N, 3, H, W)); scenes without a two-step
    subsequence are skipped with a warning, a wrong-length one is an error."""
    data_root = Path(data_root)
    ids = []
    sequences = []
    for scene in load_scenes_doc(scenes_path):
        sid = scene.get("scene_id", "<unknown>")
        indices = scene.get("two_step_indices")
        if indices is None:
            log.warning("scene %s has no two-step subsequence, skipping", sid)
            continue
        if len(indices) != seq_len:
            raise ShapeMismatch(
                f"scene {sid}: two-step length {len(indices)} != expected {seq_len}"
            )
        frames = scene["frames"]
        stack = np.stack([
            _load_frame(data_root / frames[i]["crop_ref"], input_size) for i in indices
        ])
        ids.append(sid)
        sequences.append(stack.transpose(0, 3, 1, 2))  # (N, 3, H, W)
    if not ids:
        raise EmptySequence("no scene has a complete two-step crop sequence")
    return ids, torch.from_numpy(np.stack(sequences))
