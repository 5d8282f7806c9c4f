"""mAP and CMC rank-n over a similarity matrix with ground-truth runner ids.

Protocol: leave-one-out — every scene queries the gallery of all other
scenes, ranked by descending similarity with ties broken by ascending
scene_id.  Queries whose runner appears in no other scene are excluded and
do not affect any metric (a runner seen once cannot deflate mAP).
"""
from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

from .data_model import EvalReport, FeatureBundle, QueryResult, SceneRecord, SimilarityMatrix
from .errors import LabelMissing, LambdaOutOfRange, NoPositives
from .similarity import FusionWeights, LapFilter, Method, build_matrix


def average_precision(relevance: Sequence[int]) -> float:
    """AP of a binary-relevance ranking: mean of precision@k over positives."""
    total = 0.0
    hits = 0
    for k, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            total += hits / k
    if hits == 0:
        raise NoPositives("ranking contains no positives")
    return total / hits


def evaluate(m: SimilarityMatrix, labels: Mapping[str, str],
             ranks: Sequence[int] = (1, 5)) -> EvalReport:
    ids = m.scene_ids
    for sid in ids:
        if sid not in labels:
            raise LabelMissing(sid)
    ranks = sorted(set(int(n) for n in ranks) | {1, 5})

    per_query = []
    excluded = []
    hits_at = {n: 0 for n in ranks}
    for qi, qid in enumerate(ids):
        gallery = [(float(-m.values[qi, gi]), ids[gi]) for gi in range(len(ids)) if gi != qi]
        gallery.sort()
        relevance = [1 if labels[gid] == labels[qid] else 0 for _, gid in gallery]
        num_pos = sum(relevance)
        if num_pos == 0:
            excluded.append(qid)
            continue
        per_query.append(QueryResult(qid, average_precision(relevance), num_pos))
        for n in ranks:
            if any(relevance[:n]):
                hits_at[n] += 1

    included = len(per_query)
    if included:
        map_score = sum(q.ap for q in per_query) / included
        cmc = {n: hits_at[n] / included for n in ranks}
    else:
        map_score = 0.0
        cmc = {n: 0.0 for n in ranks}
    return EvalReport(
        map_score=map_score,
        cmc=cmc,
        per_query=tuple(per_query),
        excluded_queries=tuple(excluded),
    )


def lambda_sweep(scenes: Sequence[SceneRecord], bundles: Sequence[FeatureBundle],
                 embed_name: str, grid: Sequence[float], w: FusionWeights,
                 f: LapFilter, labels: Mapping[str, str],
                 workers: int = 1) -> tuple[float, list[tuple[float, float]]]:
    """mAP over a lambda grid for the embed+color fusion; returns the best
    lambda (ties go to the smallest) and the full (lambda, mAP) curve."""
    if not grid:
        raise LambdaOutOfRange("lambda grid is empty")
    for lam in grid:
        if not (0.0 <= lam <= 1.0):
            raise LambdaOutOfRange(f"lambda {lam} outside [0, 1]")
    method = Method("embed_with_color", embed_name=embed_name)
    curve = []
    for lam in grid:
        m = build_matrix(scenes, bundles, method, replace(w, lam=float(lam)), f, workers=workers)
        curve.append((float(lam), evaluate(m, labels).map_score))
    best_lambda, _ = max(curve, key=lambda p: (p[1], -p[0]))
    return best_lambda, curve
