"""Report rendering: delimited summaries plus matplotlib figures for the
evaluation report, the similarity matrix and the lambda sweep curve."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data_model import EvalReport, SimilarityMatrix


def metrics_table(rows: Sequence[tuple[str, EvalReport]]) -> str:
    """Plain-text table with one row per method: mAP, Rank-1, Rank-5."""
    name_w = max([len("Method")] + [len(name) for name, _ in rows])
    lines = [f"{'Method':<{name_w}}  {'mAP':>7}  {'Rank-1':>7}  {'Rank-5':>7}"]
    for name, rep in rows:
        lines.append(
            f"{name:<{name_w}}  {rep.map_score:>7.3f}  {rep.rank1:>7.3f}  {rep.rank5:>7.3f}"
        )
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def render_eval(report: EvalReport, out_dir, method: str = "") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = out / "eval_summary.csv"
    rows = [("method", method), ("map", report.map_score)]
    rows += [(f"rank{n}", v) for n, v in sorted(report.cmc.items())]
    rows += [("included_queries", len(report.per_query)),
             ("excluded_queries", len(report.excluded_queries))]
    _write_csv(summary, ["metric", "value"], rows)

    per_query = out / "per_query_ap.csv"
    _write_csv(per_query, ["scene_id", "ap", "num_positives"],
               [(q.scene_id, q.ap, q.num_positives) for q in report.per_query])

    fig_path = out / "per_query_ap.png"
    fig, ax = plt.subplots(figsize=(max(4, 0.3 * len(report.per_query)), 3.2))
    if report.per_query:
        ax.bar(range(len(report.per_query)), [q.ap for q in report.per_query], color="#4878cf")
        ax.set_xticks(range(len(report.per_query)))
        ax.set_xticklabels([q.scene_id for q in report.per_query], rotation=90, fontsize=6)
    ax.set_ylim(0, 1.02)
    ax.set_ylabel("AP")
    ax.set_title(f"per-query AP (mAP={report.map_score:.3f})")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return [summary, per_query, fig_path]


def render_similarity(matrix: SimilarityMatrix, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig_path = out / "similarity_matrix.png"
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(matrix.values, vmin=-1, vmax=1, cmap="RdBu_r")
    fig.colorbar(im, ax=ax, label="similarity")
    ax.set_title(matrix.method_tag, fontsize=7)
    n = len(matrix.scene_ids)
    if n <= 40:
        ax.set_xticks(range(n))
        ax.set_yticks(range(n))
        ax.set_xticklabels(matrix.scene_ids, rotation=90, fontsize=5)
        ax.set_yticklabels(matrix.scene_ids, fontsize=5)
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return [fig_path]


def render_sweep(curve: Sequence[tuple[float, float]], best_lambda: Optional[float],
                 out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    _write_csv(csv_path, ["lambda", "map"], curve)

    fig_path = out / "sweep_curve.png"
    lams = [p[0] for p in curve]
    maps = [p[1] for p in curve]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(lams, maps, marker="o", ms=3, color="#4878cf")
    if best_lambda is not None:
        ax.axvline(best_lambda, color="#d65f5f", ls="--", lw=1,
                   label=f"best $\\lambda$ = {best_lambda:g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("$\\lambda$")
    ax.set_ylabel("mAP")
    ax.set_ylim(0, 1.02)
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return [csv_path, fig_path]
