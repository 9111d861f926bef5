"""Command line interface: segment, overlay, synth, eval.

Exit codes: 0 success, 1 partial failure (some input failed but the run
continued), 2 invalid invocation.
"""

from __future__ import annotations

import json
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import __version__
from .config import ConfigError, PipelineConfig, parse_config, serialize_config
from .corpus import (
    IssueEntry,
    build_corpus,
    discover_issues,
    load_issue_ground_truth,
    load_issue_images,
)
from .evaluate import DivisionByZero, aggregate_reports, format_table, match_articles
from .labels import LabelMapError, load_label_image_path
from .metsalto import load_issue_articles, validate_issue_dir, write_issue
from .overlay import STAGES, render_stage
from .pipeline import issue_to_document, segment_issue, segment_page
from .reporting import write_report
from .synth import Degradations, PageRecipe, SectionSpec, random_recipe


class MissingGroundTruth(Exception):
    pass


def _load_config(config_path: str | None, **overrides) -> PipelineConfig:
    cfg = PipelineConfig()
    if config_path:
        try:
            cfg = parse_config(Path(config_path).read_text())
        except ConfigError as exc:
            raise click.UsageError(f"bad configuration: {exc}")
    updates = {k: v for k, v in overrides.items() if v is not None}
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
        try:
            cfg.validate()
        except ConfigError as exc:
            raise click.UsageError(f"bad configuration: {exc}")
    return cfg


@click.group()
@click.version_option(version=__version__, prog_name="newsgrid")
def main() -> None:
    """Newspaper layout parsing: label maps to reading-ordered METS/ALTO."""


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True), help="Configuration file.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None, help="Output directory.")
@click.option("--workers", type=int, default=None, help="Bounded worker pool size.")
@click.option("--print-config", is_flag=True, help="Print the default configuration and exit.")
def segment(inputs, config_path, out_dir, workers, print_config) -> None:
    """Segment label maps into articles and write METS/ALTO trees."""
    if print_config:
        click.echo(serialize_config(PipelineConfig()), nl=False)
        return
    if not inputs:
        raise click.UsageError("no inputs given")
    cfg = _load_config(config_path, workers=workers, out_dir=str(out_dir) if out_dir else None)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    entries = discover_issues(list(inputs))
    log_records: list[dict] = []
    failures = 0

    def process(entry: IssueEntry) -> tuple[IssueEntry, dict | None, Exception | None]:
        t0 = time.perf_counter()
        try:
            images = load_issue_images(entry)
            result = segment_issue(images, cfg)
            doc = issue_to_document(result, entry.issue_id, [p.name for p in entry.page_paths])
            write_issue(doc, out)
            record = {
                "issue": entry.issue_id,
                "status": "ok",
                "pages": [
                    {
                        "page": pr.index + 1,
                        "lines": len(pr.lines),
                        "boxes": len(pr.boxes),
                        "articles": len(pr.articles),
                        "timings": {k: round(v, 6) for k, v in pr.timings.items()},
                    }
                    for pr in result.pages
                ],
                "articles": len(result.articles),
                "elapsed": round(time.perf_counter() - t0, 6),
            }
            return entry, record, None
        except (LabelMapError, OSError, ValueError) as exc:
            return entry, None, exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(process, entries))
    else:
        results = [process(e) for e in entries]

    for entry, record, error in results:
        if error is not None:
            failures += 1
            log_records.append({"issue": entry.issue_id, "status": "error", "error": str(error)})
            click.echo(f"error: {entry.issue_id}: {error}", err=True)
        else:
            log_records.append(record)
            click.echo(f"{entry.issue_id}: {record['articles']} articles")

    log_path = out / "run_log.jsonl"
    with log_path.open("w") as fh:
        for rec in log_records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if failures:
        sys.exit(1)


@main.command()
@click.argument("input_path", type=click.Path(exists=True, path_type=Path))
@click.option("--stage", type=click.Choice(STAGES), required=True, help="Pipeline stage to render.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def overlay(input_path, stage, out_path, config_path) -> None:
    """Render a color-coded overlay of one pipeline stage for one page."""
    cfg = _load_config(config_path)
    try:
        image = load_label_image_path(input_path)
    except LabelMapError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    page = segment_page(image, cfg)
    img = render_stage(page, stage)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    img.save(out_path, format="PNG")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--count", type=int, default=1, help="Number of issues to generate.")
@click.option("--seed", type=int, default=0, help="Corpus seed.")
@click.option("--recipe", "recipe_path", type=click.Path(exists=True), default=None,
              help="JSON recipe file overriding the random corpus.")
@click.option("--pages", type=int, default=1, help="Pages per issue (random corpus).")
@click.option("--spanning", type=int, default=0, help="Cross-page articles per issue.")
@click.option("--break-prob", type=float, default=0.0)
@click.option("--fuse-prob", type=float, default=0.0)
@click.option("--mislabel-prob", type=float, default=0.0)
def synth(out_dir, count, seed, recipe_path, pages, spanning, break_prob, fuse_prob, mislabel_prob) -> None:
    """Generate a synthetic corpus with ground truth sidecars."""
    degradations = Degradations(
        separator_break_prob=break_prob,
        line_fuse_prob=fuse_prob,
        title_mislabel_prob=mislabel_prob,
    )
    if recipe_path:
        issues = _issues_from_recipe_file(Path(recipe_path))
    else:
        rng = random.Random(seed)
        issues = []
        for i in range(count):
            recipes = [
                random_recipe(rng.randrange(2**31), degradations=degradations)
                for _ in range(pages)
            ]
            issues.append((f"issue-{i + 1:04d}", recipes, min(spanning, max(0, pages - 1))))
    manifest_path = build_corpus(out_dir, issues)
    doc = json.loads(manifest_path.read_text())
    click.echo(
        f"wrote {doc['totals']['pages']} pages, {doc['totals']['articles']} articles to {out_dir}"
    )


def _issues_from_recipe_file(path: Path) -> list[tuple[str, list[PageRecipe], int]]:
    doc = json.loads(path.read_text())
    issues = []
    for i, issue in enumerate(doc["issues"]):
        recipes = [_recipe_from_json(p) for p in issue["pages"]]
        issues.append((issue.get("id", f"issue-{i + 1:04d}"), recipes, issue.get("spanning_articles", 0)))
    return issues


def _recipe_from_json(doc: dict) -> PageRecipe:
    sections = tuple(
        SectionSpec(
            articles_per_column=tuple(s["articles_per_column"]),
            lines_range=tuple(s.get("lines_range", (3, 6))),
            title_height=s.get("title_height", 56),
            cutoff_prob=s.get("cutoff_prob", 0.5),
            spill_prob=s.get("spill_prob", 0.0),
        )
        for s in doc["sections"]
    )
    deg = doc.get("degradations", {})
    keys = (
        "columns page_width page_height margin gutter line_height entity_gap "
        "separator_thickness rule_pad noise_blobs rng_seed"
    ).split()
    kwargs = {k: doc[k] for k in keys if k in doc}
    return PageRecipe(
        sections=sections,
        degradations=Degradations(
            separator_break_prob=deg.get("separator_break_prob", 0.0),
            line_fuse_prob=deg.get("line_fuse_prob", 0.0),
            title_mislabel_prob=deg.get("title_mislabel_prob", 0.0),
            title_mislabel_count=deg.get("title_mislabel_count"),
        ),
        **kwargs,
    )


@main.command(name="eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=True, path_type=Path), required=True,
              help="Directory produced by the segment command.")
@click.option("--gt", "gt_dir", type=click.Path(exists=True, path_type=Path), required=True,
              help="Corpus directory with ground truth.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Report directory (defaults to the prediction directory).")
def eval_cmd(pred_dir, gt_dir, config_path, out_dir) -> None:
    """Score predictions against ground truth and write the report files."""
    cfg = _load_config(config_path)
    entries = discover_issues([gt_dir])
    parts = []
    try:
        for entry in entries:
            mets_path = pred_dir / entry.issue_id / "mets.xml"
            if entry.gt_path is None or not entry.gt_path.exists():
                raise MissingGroundTruth(str(entry.issue_id))
            if not mets_path.exists():
                raise MissingGroundTruth(f"missing prediction {mets_path}")
            gt = load_issue_ground_truth(entry)
            predicted = [
                [(page_no - 1, rect) for page_no, rect in art.blocks]
                for art in load_issue_articles(mets_path)
            ]
            gt_regions = [
                [(seg.page, seg.cell) for seg in art.segments] for art in gt.articles
            ]
            parts.append((entry.issue_id, match_articles(predicted, gt_regions, cfg.iou_threshold)))
    except MissingGroundTruth as exc:
        click.echo(f"error: missing ground truth or prediction: {exc}", err=True)
        sys.exit(1)

    try:
        report = aggregate_reports(parts)
    except DivisionByZero:
        click.echo("error: ground truth contains no articles; rates are undefined", err=True)
        sys.exit(1)
    paths = write_report(report, Path(out_dir) if out_dir else Path(pred_dir))
    click.echo(format_table(report))
    click.echo(f"report written to {paths['json'].parent}")


@main.command()
@click.argument("issue_dir", type=click.Path(exists=True, path_type=Path))
def validate(issue_dir) -> None:
    """Check METS/ALTO structural conformance and referential integrity."""
    problems = validate_issue_dir(issue_dir)
    if problems:
        for p in problems:
            click.echo(f"invalid: {p}", err=True)
        sys.exit(1)
    click.echo("valid")


if __name__ == "__main__":
    main()
