"""Exports per-scene latents and adapts external per-frame features into the
engine's embeddings file format:

    {"name": str, "per_frame": false, "vectors": {scene_id: [floats]}}
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
import torch

from .data import load_scene_sequences
from .errors import ConfigMismatch, EmptyGroup, MissingFile, SchemaError, ShapeMismatch
from .train import load_checkpoint


def write_embeddings(path, name: str, vectors: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    doc = {
        "name": name,
        "per_frame": False,
        "vectors": {sid: [float(v) for v in vec] for sid, vec in sorted(vectors.items())},
    }
    with open(tmp, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def encode_scenes(checkpoint_path, scenes_path, data_root, out_path,
                  name: str = "gruae") -> list[str]:
    """One latent per scene with a complete two-step sequence; deterministic."""
    model = load_checkpoint(checkpoint_path)
    cfg = model.cfg
    try:
        ids, sequences = load_scene_sequences(scenes_path, data_root, cfg.seq_len,
                                              cfg.input_size)
    except ShapeMismatch as exc:
        raise ConfigMismatch(
            f"scenes were built with a different two-step length than the "
            f"checkpoint ({exc})"
        ) from exc
    model.eval()
    with torch.no_grad():
        latents = model.encode(sequences).numpy()
    if not np.all(np.isfinite(latents)):
        raise ConfigMismatch("model produced non-finite latents")
    write_embeddings(out_path, name, {sid: latents[i] for i, sid in enumerate(ids)})
    return ids


def adapt_external(in_path, out_path, name: str) -> list[str]:
    """Mean-pool per-frame vectors grouped by scene into one vector each."""
    path = Path(in_path)
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    groups = doc.get("vectors", doc) if isinstance(doc, dict) else None
    if not isinstance(groups, dict):
        raise SchemaError(f"{path}: expected a scene_id -> vectors mapping")

    pooled = {}
    for sid, vecs in groups.items():
        if not isinstance(vecs, list) or not vecs:
            raise EmptyGroup(f"scene {sid!r} has no frame vectors")
        if not isinstance(vecs[0], list):
            vecs = [vecs]  # a single per-scene vector passes through
        try:
            arr = np.asarray(vecs, dtype=np.float64)
        except ValueError as exc:
            raise SchemaError(f"scene {sid!r}: {exc}") from exc
        if arr.ndim != 2:
            raise SchemaError(f"scene {sid!r}: frame vectors must share one length")
        pooled[sid] = arr.mean(axis=0)
    write_embeddings(out_path, name, pooled)
    return sorted(pooled)
