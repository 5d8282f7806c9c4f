"""Command-line front end chaining the pipeline stages.

Every stage materializes its output to disk so external feature extractors
can interpose between `scenes` and `featurize`.  Exit codes: 0 success,
1 domain error (single machine-parseable line on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import data_model as dm
from .color_features import featurize_scenes
from .config import PipelineConfig, load_config
from .errors import ConfigError, LabelMissing, PipelineError
from .evaluator import evaluate, lambda_sweep
from .report import metrics_table, render_eval, render_similarity, render_sweep
from .scene_builder import build_scenes
from .similarity import build_matrix, parse_method
from .synth import generate, read_spec, write_dataset
from .tracker import run_tracker


def _overrides(args) -> dict:
    tree: dict = {}
    if getattr(args, "lambda_", None) is not None:
        tree.setdefault("fusion", {})["lam"] = args.lambda_
    if getattr(args, "th", None) is not None:
        tree.setdefault("lap", {})["th"] = args.th
    if getattr(args, "no_lap_filter", False):
        tree.setdefault("lap", {})["enabled"] = False
    if getattr(args, "runner_prob", None) is not None:
        tree.setdefault("tracker", {})["runner_prob_min"] = args.runner_prob
    if getattr(args, "two_step_len", None) is not None:
        tree.setdefault("scene", {})["two_step_len"] = args.two_step_len
    if getattr(args, "workers", None) is not None:
        tree["workers"] = args.workers
    return tree


def _load_cfg(args) -> PipelineConfig:
    return load_config(path=getattr(args, "config", None), overrides=_overrides(args))


def _worker_count(cfg: PipelineConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def _load_embedding_sets(path):
    if path is None:
        return []
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    return [dm.read_embeddings(f) for f in files]


# --- stage runners (shared by the subcommands and `pipeline`) ---------------


def _stage_track(cfg, detections_path, out_path):
    dets = dm.read_detections(detections_path)
    tracks = run_tracker(dets, cfg.tracker)
    dm.write_tracks([t.to_record() for t in tracks], out_path, config=cfg.to_dict())
    print(f"track: {len(dets)} detections -> {len(tracks)} tracks -> {out_path}")


def _stage_scenes(cfg, tracks_path, frame_width, data_root, out_path):
    records = dm.read_tracks(tracks_path)
    scenes = build_scenes(records, cfg.scene, frame_width, data_root=data_root)
    dm.write_scenes(scenes, out_path, config=cfg.to_dict())
    print(f"scenes: {len(records)} tracks -> {len(scenes)} scenes -> {out_path}")


def _stage_featurize(cfg, scenes_path, data_root, embeddings_path, out_path):
    scenes = dm.read_scenes(scenes_path)
    sets = _load_embedding_sets(embeddings_path)
    bundles, skipped = featurize_scenes(scenes, data_root, sets, cfg.featurize,
                                        workers=_worker_count(cfg))
    for sid in skipped:
        print(f"warning: scene {sid} skipped (background-only crop)", file=sys.stderr)
    dm.write_features(bundles, out_path, config=cfg.to_dict())
    print(f"featurize: {len(bundles)} bundles ({len(sets)} embedding sets) -> {out_path}")


def _stage_reid(cfg, scenes_path, features_path, method_text, out_path):
    scenes = dm.read_scenes(scenes_path)
    bundles = dm.read_features(features_path)
    have = {b.scene_id for b in bundles}
    kept = [s for s in scenes if s.scene_id in have]
    for s in scenes:
        if s.scene_id not in have:
            print(f"warning: scene {s.scene_id} has no features, dropped", file=sys.stderr)
    matrix = build_matrix(kept, bundles, parse_method(method_text), cfg.fusion, cfg.lap,
                          workers=_worker_count(cfg))
    dm.write_similarity(matrix, out_path, config=cfg.to_dict())
    print(f"reid: {len(kept)} scenes, method {matrix.method_tag} -> {out_path}")


def _resolve_labels(label_set: dm.LabelSet, scene_ids, scenes_path):
    if all(sid in label_set.labels for sid in scene_ids):
        return {sid: label_set.labels[sid] for sid in scene_ids}
    if scenes_path is None:
        raise LabelMissing("labels use intervals; pass --scenes to resolve them")
    by_id = {s.scene_id: s for s in dm.read_scenes(scenes_path)}
    for sid in scene_ids:
        if sid not in by_id:
            raise LabelMissing(sid)
    return label_set.resolve([by_id[sid] for sid in scene_ids])


def _stage_eval(cfg, similarity_path, labels_path, scenes_path, ranks, out_path, table_path=None):
    matrix = dm.read_similarity(similarity_path)
    labels = _resolve_labels(dm.read_labels(labels_path), matrix.scene_ids, scenes_path)
    rep = evaluate(matrix, labels, ranks)
    dm.write_eval(rep, out_path, config=cfg.to_dict())
    if table_path:
        Path(table_path).parent.mkdir(parents=True, exist_ok=True)
        Path(table_path).write_text(metrics_table([(matrix.method_tag, rep)]))
    print(f"eval: mAP={rep.map_score:.4f} rank1={rep.rank1:.4f} rank5={rep.rank5:.4f} "
          f"({len(rep.per_query)} queries, {len(rep.excluded_queries)} excluded) -> {out_path}")


# --- subcommand handlers -----------------------------------------------------


def _cmd_track(args):
    _stage_track(_load_cfg(args), args.detections, args.out)


def _cmd_scenes(args):
    data_root = args.data_root or Path(args.tracks).parent
    _stage_scenes(_load_cfg(args), args.tracks, args.frame_width, data_root, args.out)


def _cmd_featurize(args):
    data_root = args.data_root or Path(args.scenes).parent
    _stage_featurize(_load_cfg(args), args.scenes, data_root, args.embeddings, args.out)


def _cmd_reid(args):
    _stage_reid(_load_cfg(args), args.scenes, args.features, args.method, args.out)


def _cmd_eval(args):
    _stage_eval(_load_cfg(args), args.similarity, args.labels, args.scenes,
                _parse_ranks(args.ranks), args.out, args.table)


def _cmd_sweep(args):
    cfg = _load_cfg(args)
    scenes = dm.read_scenes(args.scenes)
    bundles = dm.read_features(args.features)
    have = {b.scene_id for b in bundles}
    kept = [s for s in scenes if s.scene_id in have]
    label_set = dm.read_labels(args.labels)
    labels = (
        {s.scene_id: label_set.labels[s.scene_id] for s in kept}
        if all(s.scene_id in label_set.labels for s in kept)
        else label_set.resolve(kept)
    )
    grid = _parse_grid(args.grid)
    best, curve = lambda_sweep(kept, bundles, args.embed, grid, cfg.fusion, cfg.lap,
                               labels, workers=_worker_count(cfg))
    dm._dump_json({
        "best_lambda": best,
        "curve": [[lam, m] for lam, m in curve],
        "embed": args.embed,
        "config": cfg.to_dict(),
    }, args.out)
    best_map = dict(curve)[best]
    print(f"sweep: best lambda {best:g} (mAP {best_map:.4f}) over {len(curve)} points -> {args.out}")


def _cmd_pipeline(args):
    cfg = _load_cfg(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_root = args.data_root or Path(args.detections).parent
    _stage_track(cfg, args.detections, out / "tracks.json")
    _stage_scenes(cfg, out / "tracks.json", args.frame_width, data_root, out / "scenes.json")
    _stage_featurize(cfg, out / "scenes.json", data_root, args.embeddings, out / "features.json")
    _stage_reid(cfg, out / "scenes.json", out / "features.json", args.method,
                out / "similarity.json")
    if args.labels:
        _stage_eval(cfg, out / "similarity.json", args.labels, out / "scenes.json",
                    _parse_ranks(args.ranks), out / "eval.json", out / "eval_table.txt")


def _cmd_synth(args):
    spec = read_spec(args.spec)
    ds = generate(spec)
    write_dataset(ds, args.out, config=dataclasses.asdict(spec))
    print(f"synth: {len(ds.detections)} detections, {len(ds.crops)} crops, "
          f"{len(ds.labels.intervals)} crossings -> {args.out}")


def _cmd_report(args):
    out = Path(args.out_dir)
    written = []
    method = ""
    if args.similarity:
        matrix = dm.read_similarity(args.similarity)
        method = matrix.method_tag
        written += render_similarity(matrix, out)
    if args.eval:
        rep = dm.read_eval(args.eval)
        written += render_eval(rep, out, method=method)
        table = out / "eval_table.txt"
        table.parent.mkdir(parents=True, exist_ok=True)
        table.write_text(metrics_table([(method or "eval", rep)]))
        written.append(table)
    if args.sweep:
        doc = dm._load_json(args.sweep)
        curve = [(float(l), float(m)) for l, m in doc["curve"]]
        written += render_sweep(curve, doc.get("best_lambda"), out)
    if not written:
        raise ConfigError("report needs at least one of --eval, --similarity, --sweep")
    print("report: wrote " + ", ".join(str(p) for p in written))


def _parse_ranks(text: str) -> list[int]:
    try:
        ranks = [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse ranks {text!r}") from exc
    if not ranks or any(r < 1 for r in ranks):
        raise ConfigError(f"ranks must be positive integers, got {text!r}")
    return ranks


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {text!r}") from exc
        if step <= 0:
            raise ConfigError("grid step must be positive")
        vals, i = [], 0
        while start + i * step <= stop + 1e-9:
            vals.append(round(start + i * step, 10))
            i += 1
        return vals
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def _add_common(sub):
    sub.add_argument("--config", help="YAML/JSON config file")
    sub.add_argument("--workers", type=int, help="parallel workers (0 = all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relap",
        description="Runner re-identification pipeline for fixed single-view running videos",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("track", help="link detections into per-passage tracks")
    p.add_argument("--detections", required=True)
    p.add_argument("--out", default="tracks.json")
    p.add_argument("--runner-prob", type=float, help="min runner probability")
    _add_common(p)
    p.set_defaults(func=_cmd_track)

    p = subs.add_parser("scenes", help="filter tracks and build running scenes")
    p.add_argument("--tracks", required=True)
    p.add_argument("--frame-width", type=float, required=True)
    p.add_argument("--data-root", help="directory crop_refs are relative to")
    p.add_argument("--out", default="scenes.json")
    p.add_argument("--two-step-len", type=int, dest="two_step_len")
    _add_common(p)
    p.set_defaults(func=_cmd_scenes)

    p = subs.add_parser("featurize", help="compute color histograms, merge embeddings")
    p.add_argument("--scenes", required=True)
    p.add_argument("--data-root")
    p.add_argument("--embeddings", help="embeddings .json file or directory of them")
    p.add_argument("--out", default="features.json")
    _add_common(p)
    p.set_defaults(func=_cmd_featurize)

    p = subs.add_parser("reid", help="build the pairwise similarity matrix")
    p.add_argument("--scenes", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--method", default="color_with_shoes",
                   help="color_only | color_with_shoes | embed_only(NAME) | "
                        "embed_with_color(NAME) | hhcl_with_shoes(RUNNER,SHOE)")
    p.add_argument("--lambda", type=float, dest="lambda_")
    p.add_argument("--th", type=int, help="lap filter threshold in frames")
    p.add_argument("--no-lap-filter", action="store_true")
    p.add_argument("--out", default="similarity.json")
    _add_common(p)
    p.set_defaults(func=_cmd_reid)

    p = subs.add_parser("eval", help="mAP and CMC rank-n against ground truth")
    p.add_argument("--similarity", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--scenes", help="needed when labels use frame intervals")
    p.add_argument("--ranks", default="1,5")
    p.add_argument("--out", default="eval.json")
    p.add_argument("--table", help="also write a plain-text metrics table")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("sweep", help="lambda sweep for embed+color fusion")
    p.add_argument("--scenes", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embed", required=True, help="embedding name to fuse with color")
    p.add_argument("--grid", default="0:1:0.05", help="start:stop:step or comma list")
    p.add_argument("--labels", required=True)
    p.add_argument("--th", type=int)
    p.add_argument("--no-lap-filter", action="store_true")
    p.add_argument("--out", default="sweep.json")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("pipeline", help="all stages end-to-end")
    p.add_argument("--detections", required=True)
    p.add_argument("--frame-width", type=float, required=True)
    p.add_argument("--data-root")
    p.add_argument("--labels")
    p.add_argument("--embeddings")
    p.add_argument("--method", default="color_with_shoes")
    p.add_argument("--lambda", type=float, dest="lambda_")
    p.add_argument("--th", type=int)
    p.add_argument("--no-lap-filter", action="store_true")
    p.add_argument("--ranks", default="1,5")
    p.add_argument("--runner-prob", type=float)
    p.add_argument("--two-step-len", type=int, dest="two_step_len")
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    p = subs.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = subs.add_parser("report", help="render figures and delimited summaries")
    p.add_argument("--eval")
    p.add_argument("--similarity")
    p.add_argument("--sweep")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
        return 0
    except PipelineError as exc:
        print(f"error: {type(exc).__name__}: {str(exc) or exc!r}".replace("\n", " "),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}".replace("\n", " "), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
