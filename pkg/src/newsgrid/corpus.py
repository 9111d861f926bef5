"""Corpus directory conventions shared by the synth, segment, and eval commands.

A corpus is a directory with a ``manifest.json`` listing issues; each issue
directory holds one label map per page (``p0001.pgm`` ...), a per-page ground
truth sidecar (``p0001.gt.json``), and the issue-level ``gt.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .labels import LabelImage, load_label_image_path, save_indexed_png, save_pgm
from .synth import (
    GroundTruth,
    PageRecipe,
    generate_issue,
    ground_truth_from_json,
    ground_truth_to_json,
)

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA_VERSION = 1


@dataclass
class IssueEntry:
    issue_id: str
    page_paths: list[Path]
    gt_path: Optional[Path] = None


def page_file_name(page_no: int, fmt: str = "pgm") -> str:
    return f"p{page_no:04d}.{'pgm' if fmt == 'pgm' else 'png'}"


def write_issue_pages(
    issue_dir: Path, images: list[LabelImage], gt: GroundTruth, fmt: str = "pgm"
) -> list[Path]:
    issue_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(images):
        path = issue_dir / page_file_name(i + 1, fmt)
        if fmt == "pgm":
            path.write_bytes(save_pgm(img))
        else:
            png, palette = save_indexed_png(img)
            path.write_bytes(png)
            path.with_suffix(".palette.json").write_bytes(palette)
        sidecar = path.with_suffix(".gt.json")
        sidecar.write_text(
            json.dumps(page_ground_truth_slice(gt, i), indent=2, sort_keys=True) + "\n"
        )
        paths.append(path)
    (issue_dir / "gt.json").write_text(
        json.dumps(ground_truth_to_json(gt), indent=2, sort_keys=True) + "\n"
    )
    return paths


def page_ground_truth_slice(gt: GroundTruth, page: int) -> dict:
    """Per-page sidecar: the page's articles with cross-page continuation flags."""
    doc = ground_truth_to_json(gt)
    out_articles = []
    for art, art_json in zip(gt.articles, doc["articles"]):
        pages = art.pages
        if page not in pages:
            continue
        entry = dict(art_json)
        entry["segments"] = [s for s in art_json["segments"] if s["page"] == page]
        entry["continues_previous"] = any(p < page for p in pages)
        entry["continues_next"] = any(p > page for p in pages)
        out_articles.append(entry)
    return {
        "schema_version": doc["schema_version"],
        "page": page,
        "pages": [doc["pages"][page]],
        "articles": out_articles,
        "separators": [s for s in doc["separators"] if s["page"] == page],
    }


def build_corpus(
    out_dir: Path,
    issues: list[tuple[str, list[PageRecipe], int]],
    fmt: str = "pgm",
) -> Path:
    """Generate and write issues given (id, page recipes, spanning count)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "issues": [],
        "totals": {"pages": 0, "articles": 0},
    }
    for issue_id, recipes, spanning in issues:
        images, gt = generate_issue(recipes, spanning)
        paths = write_issue_pages(out_dir / issue_id, images, gt, fmt)
        manifest["issues"].append(
            {
                "id": issue_id,
                "pages": [str(p.relative_to(out_dir)) for p in paths],
                "gt": f"{issue_id}/gt.json",
                "articles": len(gt.articles),
            }
        )
        manifest["totals"]["pages"] += len(paths)
        manifest["totals"]["articles"] += len(gt.articles)
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def discover_issues(inputs: list[Path]) -> list[IssueEntry]:
    """Resolve input paths into issues.

    A directory with a manifest yields its listed issues; a directory without
    one is a single issue whose pages are its sorted label maps; a bare file
    is a single-page issue.
    """
    entries: list[IssueEntry] = []
    for path in inputs:
        path = Path(path)
        if path.is_dir() and (path / MANIFEST_NAME).exists():
            doc = json.loads((path / MANIFEST_NAME).read_text())
            for issue in doc["issues"]:
                entries.append(
                    IssueEntry(
                        issue_id=issue["id"],
                        page_paths=[path / p for p in issue["pages"]],
                        gt_path=path / issue["gt"] if issue.get("gt") else None,
                    )
                )
        elif path.is_dir():
            pages = sorted(p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".png"))
            if not pages:
                raise FileNotFoundError(f"no label maps found in {path}")
            gt = path / "gt.json"
            entries.append(IssueEntry(path.name, pages, gt if gt.exists() else None))
        else:
            entries.append(IssueEntry(path.stem, [path]))
    return entries


def load_issue_images(entry: IssueEntry) -> list[LabelImage]:
    return [load_label_image_path(p) for p in entry.page_paths]


def load_issue_ground_truth(entry: IssueEntry) -> GroundTruth:
    if entry.gt_path is None or not entry.gt_path.exists():
        raise FileNotFoundError(f"no ground truth for issue {entry.issue_id}")
    return ground_truth_from_json(json.loads(entry.gt_path.read_text()))
