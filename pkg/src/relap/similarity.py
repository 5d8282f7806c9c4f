"""Pairwise scene similarity: cosine for embeddings, Pearson correlation for
color histograms, convex-combination fusion, and the lap-time filter that
zeroes same-video pairs whose start frames are more than one lap apart.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data_model import FeatureBundle, SceneRecord, SimilarityMatrix
from .errors import (
    ConfigError,
    LambdaOutOfRange,
    LengthMismatch,
    MissingFeature,
    ZeroVariance,
    ZeroVector,
)


@dataclass(frozen=True)
class FusionWeights:
    lam: float = 0.85            # embedding weight in embed+color fusion
    body_color_w: float = 0.9
    shoe_color_w: float = 0.1
    hhcl_runner_w: float = 0.75  # 3:1 runner/shoe embedding mix
    hhcl_shoe_w: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise LambdaOutOfRange(f"lambda must be in [0, 1], got {self.lam}")
        if abs(self.body_color_w + self.shoe_color_w - 1.0) > 1e-9:
            raise ConfigError("body_color_w + shoe_color_w must equal 1")
        if abs(self.hhcl_runner_w + self.hhcl_shoe_w - 1.0) > 1e-9:
            raise ConfigError("hhcl_runner_w + hhcl_shoe_w must equal 1")


@dataclass(frozen=True)
class LapFilter:
    th: int = 3600  # frames; 60 s at 60 fps
    enabled: bool = True

    def __post_init__(self):
        if self.th <= 0:
            raise ConfigError("lap threshold must be positive")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise LengthMismatch(f"vector lengths differ: {u.shape} vs {v.shape}")
    du = float(u @ u)
    dv = float(v @ v)
    if du == 0.0 or dv == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    return float(np.clip((u @ v) / math.sqrt(du * dv), -1.0, 1.0))


def hist_correlation(h1, h2) -> float:
    """Pearson correlation coefficient of two histograms."""
    a = np.asarray(h1, dtype=np.float64)
    b = np.asarray(h2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"histogram lengths differ: {a.shape} vs {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise ZeroVariance("correlation undefined for constant histograms")
    return float(np.clip((da @ db) / math.sqrt(va * vb), -1.0, 1.0))


def color_similarity(a: FeatureBundle, b: FeatureBundle, w: FusionWeights) -> float:
    """Weighted body/shoe histogram correlation; falls back to the body
    correlation alone when either scene lacks a shoe histogram."""
    body = hist_correlation(a.body_hist, b.body_hist)
    if a.shoe_hist is None or b.shoe_hist is None:
        return body
    shoe = hist_correlation(a.shoe_hist, b.shoe_hist)
    return w.body_color_w * body + w.shoe_color_w * shoe


def fuse(sim_g: float, sim_c: float, lam: float) -> float:
    """Convex combination of an embedding similarity and a color similarity."""
    if not (0.0 <= lam <= 1.0):
        raise LambdaOutOfRange(f"lambda must be in [0, 1], got {lam}")
    return lam * sim_g + (1.0 - lam) * sim_c


def hhcl_fuse(sim_runner: float, sim_shoe: Optional[float], w: FusionWeights) -> float:
    if sim_shoe is None:
        return sim_runner
    return w.hhcl_runner_w * sim_runner + w.hhcl_shoe_w * sim_shoe


def lap_filtered(s_q: int, s_c: int, f: LapFilter) -> bool:
    """True when the pair's start frames are strictly more than th apart."""
    return f.enabled and abs(s_c - s_q) > f.th


@dataclass(frozen=True)
class Method:
    kind: str  # color_only | color_with_shoes | embed_only | embed_with_color | hhcl_with_shoes
    embed_name: Optional[str] = None
    runner_name: Optional[str] = None
    shoe_name: Optional[str] = None


_METHOD_RE = re.compile(r"^([a-z_]+)(?:\(([^)]*)\))?$")


def parse_method(text: str) -> Method:
    m = _METHOD_RE.match(text.strip())
    if not m:
        raise ConfigError(f"cannot parse method {text!r}")
    kind, argtext = m.group(1), m.group(2)
    args = [a.strip() for a in argtext.split(",")] if argtext else []
    if kind in ("color_only", "color_with_shoes"):
        if args:
            raise ConfigError(f"method {kind} takes no arguments")
        return Method(kind)
    if kind in ("embed_only", "embed_with_color"):
        if len(args) != 1 or not args[0]:
            raise ConfigError(f"method {kind} needs one embedding name")
        return Method(kind, embed_name=args[0])
    if kind == "hhcl_with_shoes":
        if len(args) != 2 or not all(args):
            raise ConfigError("method hhcl_with_shoes needs runner and shoe embedding names")
        return Method(kind, runner_name=args[0], shoe_name=args[1])
    raise ConfigError(f"unknown method {kind!r}")


def method_tag(method: Method, w: FusionWeights, f: LapFilter) -> str:
    parts = [method.kind]
    if method.embed_name:
        parts[0] += f"({method.embed_name})"
    if method.runner_name:
        parts[0] += f"({method.runner_name},{method.shoe_name})"
    if method.kind == "embed_with_color":
        parts.append(f"lambda={w.lam}")
    if method.kind in ("color_with_shoes", "embed_with_color"):
        parts.append(f"body/shoe={w.body_color_w}/{w.shoe_color_w}")
    if method.kind == "hhcl_with_shoes":
        parts.append(f"runner/shoe={w.hhcl_runner_w}/{w.hhcl_shoe_w}")
    parts.append(f"lap_th={f.th}" if f.enabled else "lap=off")
    return "|".join(parts)


def _require(bundle: FeatureBundle, name: str):
    vec = bundle.embeddings.get(name)
    if vec is None:
        raise MissingFeature(bundle.scene_id, name)
    return vec


def build_matrix(scenes: Sequence[SceneRecord], bundles: Sequence[FeatureBundle],
                 method: Method, w: FusionWeights = FusionWeights(),
                 f: LapFilter = LapFilter(), workers: int = 1) -> SimilarityMatrix:
    """Symmetric scene-by-scene similarity for the chosen recipe; the lap
    filter is applied after fusion and only within one video."""
    by_id = {b.scene_id: b for b in bundles}
    for scene in scenes:
        if scene.scene_id not in by_id:
            raise MissingFeature(scene.scene_id, "bundle")
    ordered = [by_id[s.scene_id] for s in scenes]
    if method.kind in ("embed_only", "embed_with_color"):
        for b in ordered:
            _require(b, method.embed_name)
    if method.kind == "hhcl_with_shoes":
        for b in ordered:
            _require(b, method.runner_name)

    def pair(a_i: int, b_i: int) -> float:
        a, b = ordered[a_i], ordered[b_i]
        if method.kind == "color_only":
            value = hist_correlation(a.body_hist, b.body_hist)
        elif method.kind == "color_with_shoes":
            value = color_similarity(a, b, w)
        elif method.kind == "embed_only":
            value = cosine(a.embeddings[method.embed_name], b.embeddings[method.embed_name])
        elif method.kind == "embed_with_color":
            sim_g = cosine(a.embeddings[method.embed_name], b.embeddings[method.embed_name])
            value = fuse(sim_g, color_similarity(a, b, w), w.lam)
        else:
            sim_r = cosine(a.embeddings[method.runner_name], b.embeddings[method.runner_name])
            sa = a.embeddings.get(method.shoe_name)
            sb = b.embeddings.get(method.shoe_name)
            sim_s = cosine(sa, sb) if sa is not None and sb is not None else None
            value = hhcl_fuse(sim_r, sim_s, w)
        sq, sc = scenes[a_i], scenes[b_i]
        if sq.video_id == sc.video_id and lap_filtered(sq.start_frame, sc.start_frame, f):
            return 0.0
        return value

    n = len(scenes)
    values = np.zeros((n, n), dtype=np.float64)

    def fill_row(i: int):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = pair(i, j)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(n)))
    else:
        for i in range(n):
            fill_row(i)

    return SimilarityMatrix(
        scene_ids=[s.scene_id for s in scenes],
        values=values,
        method_tag=method_tag(method, w, f),
    )
