"""Evaluation report files: JSON, delimited table, and a summary figure."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluate import EvalReport, TABLE_HEADER, format_table


def write_report(report: EvalReport, out_dir: Path) -> dict[str, Path]:
    """Write eval_report.json, eval_report.tsv, eval_report.txt and the
    per-issue rates figure. Returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    json_path = out_dir / "eval_report.json"
    json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    paths["json"] = json_path

    tsv_path = out_dir / "eval_report.tsv"
    rows = ["\t".join(TABLE_HEADER.split())]
    rows.append(
        "\t".join(
            [
                str(report.n_articles_gt),
                str(report.n_detected),
                str(report.n_correct),
                f"{report.pct_correct:.2f}",
                f"{report.pct_over_seg:.2f}",
            ]
        )
    )
    for entry in report.per_page:
        rows.append(
            "\t".join(
                [
                    str(entry.get("name", "")),
                    str(entry["articles"]),
                    str(entry["detected"]),
                    str(entry["correct"]),
                    f"{entry.get('pct_correct', float('nan')):.2f}",
                    f"{entry.get('pct_over_seg', float('nan')):.2f}",
                ]
            )
        )
    tsv_path.write_text("\n".join(rows) + "\n")
    paths["tsv"] = tsv_path

    txt_path = out_dir / "eval_report.txt"
    txt_path.write_text(format_table(report) + "\n")
    paths["txt"] = txt_path

    paths["figure"] = write_rates_figure(report, out_dir / "eval_report.png")
    return paths


def write_rates_figure(report: EvalReport, path: Path) -> Path:
    """Bar chart of per-issue correct rates with the overall rate overlaid."""
    path = Path(path)
    names = [str(e.get("name", i)) for i, e in enumerate(report.per_page)] or ["all"]
    corrects = [e.get("pct_correct", 0.0) or 0.0 for e in report.per_page] or [
        report.pct_correct or 0.0
    ]
    oversegs = [e.get("pct_over_seg", 0.0) or 0.0 for e in report.per_page] or [
        report.pct_over_seg or 0.0
    ]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(max(6, 0.5 * len(names)), 6), sharex=True)
    xs = range(len(names))
    ax1.bar(xs, corrects, color="#2a7fb8")
    ax1.axhline(report.pct_correct or 0.0, color="#d62728", linewidth=1.2, label="overall")
    ax1.set_ylabel("% correct")
    ax1.set_ylim(0, 105)
    ax1.legend(loc="lower right", frameon=False)
    ax2.bar(xs, oversegs, color="#e8903a")
    ax2.axhline(report.pct_over_seg or 0.0, color="#d62728", linewidth=1.2)
    ax2.set_ylabel("% over-seg")
    ax2.set_xticks(list(xs))
    ax2.set_xticklabels(names, rotation=90, fontsize=7)
    fig.suptitle("article segmentation rates")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": "newsgrid"})
    plt.close(fig)
    return path
