"""Stage overlays: deterministic raster renderings of pipeline state.

Each stage renders to an RGB image with a fixed palette so tests can probe
exact pixel values. The reading-order stage draws numbered arrows between
article centroids.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .geometry import Rect
from .pipeline import PageResult

STAGES = ("labels", "smoothed", "lines", "grid", "articles", "order")


class UnknownStage(Exception):
    pass


# Raw codes 0..9.
RAW_PALETTE = np.array(
    [
        (255, 255, 255),  # background
        (40, 40, 40),     # character
        (110, 110, 110),  # inter-character
        (170, 170, 170),  # inter-word
        (180, 30, 30),    # title character
        (210, 90, 90),    # title inter-character
        (235, 150, 150),  # title inter-word
        (30, 90, 200),    # vertical separator
        (30, 160, 90),    # horizontal separator
        (200, 160, 30),   # noise
    ],
    dtype=np.uint8,
)

# Informative codes 0..5.
INFORMATIVE_PALETTE = np.array(
    [
        (255, 255, 255),
        (60, 60, 60),
        (180, 30, 30),
        (30, 90, 200),
        (30, 160, 90),
        (200, 160, 30),
    ],
    dtype=np.uint8,
)

LINE_COLOR = (30, 90, 200)
FLAGGED_LINE_COLOR = (200, 30, 30)
DETECTED_SEP_COLOR = (0, 0, 0)
PROLONGED_SEP_COLOR = (240, 130, 0)
TITLE_EDGE_COLOR = (180, 30, 180)
ARTICLE_COLORS = [
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
]


def render_stage(page: PageResult, stage: str) -> Image.Image:
    if stage not in STAGES:
        raise UnknownStage(f"unknown overlay stage {stage!r}; expected one of {STAGES}")
    if stage == "labels":
        return Image.fromarray(RAW_PALETTE[page.label_image.labels])
    if stage == "smoothed":
        return Image.fromarray(INFORMATIVE_PALETTE[page.entity.labels])
    if stage == "lines":
        return _render_lines(page)
    if stage == "grid":
        return _render_grid(page)
    if stage == "articles":
        return _render_articles(page)
    return _render_order(page)


def _base_canvas(page: PageResult) -> Image.Image:
    # Entity image dimmed to gray so overlay strokes stay legible.
    arr = INFORMATIVE_PALETTE[page.entity.labels]
    faded = (255 - ((255 - arr.astype(np.uint16)) // 3)).astype(np.uint8)
    return Image.fromarray(faded)


def _rect_outline(draw: ImageDraw.ImageDraw, rect: Rect, color, width=2) -> None:
    draw.rectangle(
        [int(rect.x0), int(rect.y0), int(rect.x1) - 1, int(rect.y1) - 1],
        outline=color,
        width=width,
    )


def _render_lines(page: PageResult) -> Image.Image:
    img = _base_canvas(page)
    draw = ImageDraw.Draw(img)
    for line in page.lines:
        color = FLAGGED_LINE_COLOR if line.oversized else LINE_COLOR
        _rect_outline(draw, line.bbox, color)
    return img


def _render_grid(page: PageResult) -> Image.Image:
    img = _base_canvas(page)
    draw = ImageDraw.Draw(img)
    for sep in page.grid.verticals + page.grid.horizontals:
        x_axis = sep.orientation.value == "horizontal"
        d0, d1 = sep.detected_span
        full0, full1 = sep.span
        pos = int(round(sep.position))
        if x_axis:
            draw.line([(int(full0), pos), (int(full1), pos)], fill=PROLONGED_SEP_COLOR, width=3)
            draw.line([(int(d0), pos), (int(d1), pos)], fill=DETECTED_SEP_COLOR, width=3)
        else:
            draw.line([(pos, int(full0)), (pos, int(full1))], fill=PROLONGED_SEP_COLOR, width=3)
            draw.line([(pos, int(d0)), (pos, int(d1))], fill=DETECTED_SEP_COLOR, width=3)
    for title in page.grid.titles:
        y, x0, x1 = title.top_segment
        draw.line([(int(x0), int(y)), (int(x1), int(y))], fill=TITLE_EDGE_COLOR, width=3)
    return img


def _render_articles(page: PageResult) -> Image.Image:
    img = _base_canvas(page)
    draw = ImageDraw.Draw(img)
    boxes = {b.id: b for b in page.boxes}
    for art in page.articles:
        color = ARTICLE_COLORS[art.reading_index % len(ARTICLE_COLORS)]
        for _page_idx, box_id in art.boxes:
            _rect_outline(draw, boxes[box_id].bbox, color, width=4)
    return img


def _render_order(page: PageResult) -> Image.Image:
    img = _render_articles(page)
    draw = ImageDraw.Draw(img)
    boxes = {b.id: b for b in page.boxes}
    centroids = []
    for art in page.articles:
        rects = [boxes[box_id].bbox for _p, box_id in art.boxes]
        area = sum(r.area for r in rects)
        cx = sum((r.x0 + r.x1) / 2 * r.area for r in rects) / area
        cy = sum((r.y0 + r.y1) / 2 * r.area for r in rects) / area
        centroids.append((cx, cy))
    for i, (start, end) in enumerate(zip(centroids, centroids[1:])):
        _arrow(draw, start, end)
    for i, (cx, cy) in enumerate(centroids):
        r = 14
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=(255, 255, 255), outline=(0, 0, 0), width=2)
        draw.text((cx - 4 * len(str(i)), cy - 6), str(i), fill=(0, 0, 0))
    return img


def _arrow(draw: ImageDraw.ImageDraw, start, end) -> None:
    draw.line([start, end], fill=(0, 0, 0), width=3)
    # Arrowhead: two short strokes back from the tip.
    vx, vy = end[0] - start[0], end[1] - start[1]
    norm = max(1.0, (vx * vx + vy * vy) ** 0.5)
    ux, uy = vx / norm, vy / norm
    left = (end[0] - 12 * ux + 6 * uy, end[1] - 12 * uy - 6 * ux)
    right = (end[0] - 12 * ux - 6 * uy, end[1] - 12 * uy + 6 * ux)
    draw.line([end, left], fill=(0, 0, 0), width=3)
    draw.line([end, right], fill=(0, 0, 0), width=3)
