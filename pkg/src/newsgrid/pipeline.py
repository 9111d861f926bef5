"""End-to-end segmentation: label maps in, ordered articles out.

Per page: smooth, extract lines, build the separator grid, tile boxes,
assign content, derive reading order, apply the article rules. Per issue:
line statistics pool across pages (splitting thresholds are issue-wide) and
headless leading articles link across pages.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .articles import (
    Article,
    SectionTree,
    attach_lines,
    build_section_tree,
    extract_articles,
    link_cross_page,
    order_sections,
)
from .config import GAP_TOL_FACTOR, OFFSET_TOL_FACTOR, PipelineConfig
from .grid import (
    GridBox,
    SeparatorGrid,
    assign_content,
    build_separator_mask,
    connect_and_prolong,
    extract_grid_boxes,
)
from .labels import LabelImage
from .metsalto import ArticleDivision, IssueDocument, PageDocument
from .smoothing import EntityImage, majority_vote_smooth
from .textlines import (
    LineStats,
    TextLine,
    compute_line_stats,
    extract_text_lines,
    split_merged_lines,
)


@dataclass
class PageResult:
    """Everything derived from one page, kept for overlays and serialization."""

    index: int  # 0-based position in the issue
    label_image: LabelImage
    entity: EntityImage
    lines: list[TextLine]
    grid: SeparatorGrid
    boxes: list[GridBox]
    tree: SectionTree
    ordered_box_ids: list[int]
    articles: list[Article]  # page-local, before cross-page linking
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class IssueResult:
    pages: list[PageResult]
    articles: list[Article]  # issue-level, reading order
    line_stats: LineStats


def _median(values: list[float], default: float) -> float:
    if not values:
        return default
    return float(np.median(np.array(values)))


def resolve_tolerances(
    config: PipelineConfig, lines: list[TextLine], mask: SeparatorGrid
) -> tuple[float, float]:
    """Connection tolerances, scale-free by default: gaps up to a third of the
    median line height, offsets up to half the median separator thickness."""
    gap = config.gap_tol
    if gap is None:
        gap = GAP_TOL_FACTOR * _median([ln.bbox.height for ln in lines], default=36.0)
    offset = config.offset_tol
    if offset is None:
        thicknesses = [s.thickness for s in mask.verticals + mask.horizontals]
        offset = OFFSET_TOL_FACTOR * _median(thicknesses, default=3.0)
    return gap, offset


def segment_page(
    label_image: LabelImage,
    config: PipelineConfig,
    page_index: int = 0,
    line_stats: Optional[LineStats] = None,
    precomputed: Optional[tuple[EntityImage, list[TextLine]]] = None,
) -> PageResult:
    """Run the per-page stages. When ``line_stats`` is None the page's own
    statistics stand in (single-page issues). ``precomputed`` lets the issue
    driver reuse the smoothing pass from its statistics phase."""
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    if precomputed is not None:
        entity, raw_lines = precomputed
    else:
        entity = majority_vote_smooth(label_image, config.connectivity, config.tie_break)
    timings["smooth"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if precomputed is None:
        raw_lines = extract_text_lines(entity, config.connectivity)
    stats = line_stats if line_stats is not None else compute_line_stats(raw_lines)
    lines = split_merged_lines(
        raw_lines, stats, config.split_factor, config.split_rounds, config.connectivity
    )
    timings["textlines"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mask = build_separator_mask(entity, config.connectivity, config.max_separator_thickness)
    gap_tol, offset_tol = resolve_tolerances(config, raw_lines, mask)
    grid = connect_and_prolong(mask, gap_tol, offset_tol)
    timings["grid"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    boxes = extract_grid_boxes(grid)
    boxes = assign_content(boxes, lines, grid.titles)
    tree = build_section_tree(boxes, grid)
    ordered_ids = order_sections(tree)
    by_id = {b.id: b for b in boxes}
    ordered_boxes = [by_id[i] for i in ordered_ids]
    articles = extract_articles(ordered_boxes, grid, page_index=page_index)
    attach_lines(articles, boxes, page_index)
    timings["articles"] = time.perf_counter() - t0

    return PageResult(
        index=page_index,
        label_image=label_image,
        entity=entity,
        lines=lines,
        grid=grid,
        boxes=boxes,
        tree=tree,
        ordered_box_ids=ordered_ids,
        articles=articles,
        timings=timings,
    )


def segment_issue(label_images: list[LabelImage], config: PipelineConfig) -> IssueResult:
    """Two-phase issue segmentation: line statistics first (the splitting mean
    is issue-wide), then full per-page processing and cross-page linking."""
    per_page: list[tuple[EntityImage, list[TextLine]]] = []
    all_lines: list[TextLine] = []
    for img in label_images:
        entity = majority_vote_smooth(img, config.connectivity, config.tie_break)
        raw_lines = extract_text_lines(entity, config.connectivity)
        per_page.append((entity, raw_lines))
        all_lines.extend(raw_lines)
    stats = compute_line_stats(all_lines)

    pages = [
        segment_page(img, config, page_index=i, line_stats=stats, precomputed=per_page[i])
        for i, img in enumerate(label_images)
    ]
    issue_articles = link_cross_page([p.articles for p in pages])
    return IssueResult(pages=pages, articles=issue_articles, line_stats=stats)


def issue_to_document(
    result: IssueResult, issue_id: str, source_images: Optional[list[str]] = None
) -> IssueDocument:
    """Bridge from pipeline results to the serialization model."""
    pages = []
    for pr in result.pages:
        line_lookup = {ln.id: ln for ln in pr.lines}
        blocks = [(b.id, b.bbox) for b in pr.boxes]
        lines_by_block = {
            b.id: [(lid, line_lookup[lid].bbox) for lid in b.line_ids] for b in pr.boxes
        }
        pages.append(
            PageDocument(
                number=pr.index + 1,
                width=pr.label_image.width,
                height=pr.label_image.height,
                blocks=blocks,
                lines_by_block=lines_by_block,
                source_image=(source_images or [None] * len(result.pages))[pr.index],
            )
        )
    articles = [
        ArticleDivision(
            reading_index=a.reading_index,
            blocks=[(page_idx + 1, box_id) for page_idx, box_id in a.boxes],
        )
        for a in result.articles
    ]
    return IssueDocument(issue_id=issue_id, pages=pages, articles=articles)
