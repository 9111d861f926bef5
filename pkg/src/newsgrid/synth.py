"""Synthetic newspaper pages with exact ground truth.

Pages come from a small layout grammar: stacked sections separated by
full-width rules, each section holding ruled columns of articles (title band
plus text lines, optionally closed by a cut-off rule). Articles may spill
into the next column or onto the next page. The drawn label map uses the
canonical raw-code table, and ground truth records article cells in the same
cut coordinates the grid stage produces, so an undegraded page round-trips
exactly.

Degradations model the three error modes the pipeline must absorb: broken
rulings, fused neighbouring lines, and text lines mislabeled as titles.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Rect
from .labels import LabelImage, RawLabel


class InfeasibleRecipe(Exception):
    """The requested content cannot fit in the page geometry."""


# Default degradation levels for robustness testing: break gaps stay inside
# the collinear-connection tolerance and fuse bridges inside the projection
# splitter's reach.
DEFAULT_SEPARATOR_BREAK_PROB = 0.3
DEFAULT_LINE_FUSE_PROB = 0.1


@dataclass(frozen=True)
class Degradations:
    separator_break_prob: float = 0.0
    line_fuse_prob: float = 0.0
    title_mislabel_prob: float = 0.0
    title_mislabel_count: Optional[int] = None  # exact per-page override

    def validate(self) -> None:
        for name in ("separator_break_prob", "line_fuse_prob", "title_mislabel_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True)
class SectionSpec:
    articles_per_column: tuple[int, ...]  # one entry per column
    lines_range: tuple[int, int] = (3, 6)
    title_height: int = 56
    cutoff_prob: float = 0.5
    spill_prob: float = 0.0  # last article of a column runs over into the next


@dataclass(frozen=True)
class PageRecipe:
    columns: int
    sections: tuple[SectionSpec, ...]
    degradations: Degradations = Degradations()
    rng_seed: int = 0
    page_width: int = 1240
    page_height: int = 1760
    margin: int = 30
    gutter: int = 16
    line_height: int = 40  # pitch; the drawn core is line_height - entity_gap
    entity_gap: int = 4
    separator_thickness: int = 3
    rule_pad: int = 6
    noise_blobs: int = 0

    def validate(self) -> None:
        if self.columns < 1:
            raise ValueError("columns must be >= 1")
        if not self.sections:
            raise ValueError("at least one section is required")
        for spec in self.sections:
            if len(spec.articles_per_column) != self.columns:
                raise ValueError("articles_per_column must list one count per column")
            if spec.lines_range[0] < 1 or spec.lines_range[0] > spec.lines_range[1]:
                raise ValueError(f"bad lines_range {spec.lines_range}")
        self.degradations.validate()


@dataclass
class GTSegment:
    """One per-column piece of an article: its grid cell plus drawn geometry."""

    page: int
    cell: Rect
    title: Optional[Rect]
    lines: list[Rect]


@dataclass
class GTArticle:
    id: int
    segments: list[GTSegment]
    reading_index: int = 0

    @property
    def pages(self) -> list[int]:
        seen: list[int] = []
        for seg in self.segments:
            if seg.page not in seen:
                seen.append(seg.page)
        return seen


@dataclass
class GTSeparator:
    page: int
    orientation: str  # "vertical" | "horizontal"
    rect: Rect


@dataclass
class GroundTruth:
    page_sizes: list[tuple[int, int]]
    articles: list[GTArticle]
    separators: list[GTSeparator]

    @property
    def reading_order(self) -> list[int]:
        return [a.id for a in sorted(self.articles, key=lambda a: a.reading_index)]

    def articles_on_page(self, page: int) -> list[GTArticle]:
        return [a for a in self.articles if any(s.page == page for s in a.segments)]


# ---------------------------------------------------------------------------
# Drawing
# ---------------------------------------------------------------------------

def _paint_text_band(grid: np.ndarray, rect: Rect, title: bool) -> None:
    """Fill a band with the three codes of the text or title family. Stripe
    offsets guarantee all three family codes occur."""
    x0, y0, x1, y1 = map(int, (rect.x0, rect.y0, rect.x1, rect.y1))
    base = int(RawLabel.TITLE_CHARACTER if title else RawLabel.CHARACTER)
    grid[y0:y1, x0:x1] = base
    cols = np.arange(x0, x1)
    grid[y0:y1, cols[(cols - x0) % 7 == 4]] = base + 1
    grid[y0:y1, cols[(cols - x0) % 31 >= 29]] = base + 2


def _paint_rule(grid: np.ndarray, rect: Rect, vertical: bool) -> None:
    x0, y0, x1, y1 = map(int, (rect.x0, rect.y0, rect.x1, rect.y1))
    code = RawLabel.VERTICAL_SEPARATOR if vertical else RawLabel.HORIZONTAL_SEPARATOR
    grid[y0:y1, x0:x1] = int(code)


@dataclass
class _Planned:
    lines: int
    cutoff_after: bool
    spill_lines: int = 0  # lines handed to the next column


_DEFER = -1.0  # sentinel: cell bottom patched once the column's cuts are known


def generate_page(recipe: PageRecipe) -> tuple[LabelImage, GroundTruth]:
    """Render one page. Deterministic in (recipe, rng_seed)."""
    images, gt = _generate_pages([recipe], spanning_articles=0)
    return images[0], gt


def generate_issue(
    recipes: list[PageRecipe], spanning_articles: int = 0
) -> tuple[list[LabelImage], GroundTruth]:
    """Render an issue. The first ``spanning_articles`` page boundaries carry
    an article over: titled on page p, headless at the top of page p+1."""
    if spanning_articles > max(0, len(recipes) - 1):
        raise InfeasibleRecipe(
            f"cannot span {spanning_articles} articles across {len(recipes)} pages"
        )
    return _generate_pages(recipes, spanning_articles)


def _generate_pages(
    recipes: list[PageRecipe], spanning_articles: int
) -> tuple[list[LabelImage], GroundTruth]:
    for recipe in recipes:
        recipe.validate()

    images: list[LabelImage] = []
    articles: list[GTArticle] = []
    separators: list[GTSeparator] = []
    page_sizes: list[tuple[int, int]] = []
    carry: Optional[GTArticle] = None

    for page_no, recipe in enumerate(recipes):
        outgoing = page_no < spanning_articles
        img, page_articles, page_seps, carry = _render_page(
            recipe, page_no, incoming=carry, outgoing=outgoing
        )
        images.append(img)
        articles.extend(page_articles)
        separators.extend(page_seps)
        page_sizes.append((recipe.page_width, recipe.page_height))

    if carry is not None:
        raise InfeasibleRecipe("an article was left spanning past the last page")
    for idx, art in enumerate(articles):
        art.id = idx
        art.reading_index = idx
    return images, GroundTruth(page_sizes, articles, separators)


def _render_page(
    recipe: PageRecipe,
    page_no: int,
    incoming: Optional[GTArticle],
    outgoing: bool,
):
    rng = random.Random(recipe.rng_seed)
    w, h = recipe.page_width, recipe.page_height
    m, g, th, pad = recipe.margin, recipe.gutter, recipe.separator_thickness, recipe.rule_pad
    line_core = recipe.line_height - recipe.entity_gap
    k = recipe.columns
    n_sections = len(recipe.sections)

    content_w = w - 2 * m
    col_w = (content_w - (k - 1) * g) // k
    col_x0 = [m + c * (col_w + g) for c in range(k)]
    rule_x0 = [col_x0[c] + col_w + (g - th) // 2 for c in range(k - 1)]
    cut_xs = [0.0] + [rx + th / 2.0 for rx in rule_x0] + [float(w)]

    # Plan first, so infeasibility is caught before any drawing happens.
    incoming_lines = rng.randint(2, 4) if incoming is not None else 0
    plan: list[list[list[_Planned]]] = []
    for s_idx, spec in enumerate(recipe.sections):
        cols = []
        for c in range(k):
            arts = []
            n = spec.articles_per_column[c]
            for a in range(n):
                lines = rng.randint(*spec.lines_range)
                cutoff = a + 1 < n and rng.random() < spec.cutoff_prob
                arts.append(_Planned(lines, cutoff))
            cols.append(arts)
        plan.append(cols)
        for c in range(k - 1):
            if cols[c] and rng.random() < spec.spill_prob:
                donor = cols[c][-1]
                if donor.lines >= 3 and not donor.cutoff_after:
                    donor.spill_lines = rng.randint(1, donor.lines - 2)

    if outgoing:
        last_col = plan[-1][k - 1]
        if not last_col:
            raise InfeasibleRecipe("outgoing continuation needs an article in the last column")
        last_col[-1].cutoff_after = False
        last_col[-1].spill_lines = 0

    def planned_height(p: _Planned, spec: SectionSpec) -> int:
        height = spec.title_height + (p.lines - p.spill_lines) * recipe.line_height
        if p.cutoff_after:
            height += th + 2 * pad
        return height

    section_heights = []
    for s_idx, spec in enumerate(recipe.sections):
        demand = 0
        for c in range(k):
            col_demand = sum(planned_height(p, spec) for p in plan[s_idx][c])
            if s_idx == 0 and c == 0 and incoming_lines:
                col_demand += incoming_lines * recipe.line_height
            if c > 0:
                col_demand += sum(p.spill_lines for p in plan[s_idx][c - 1]) * recipe.line_height
            demand = max(demand, col_demand)
        section_heights.append(demand)

    total = m + sum(section_heights) + (n_sections - 1) * (th + 2 * pad)
    if total > h - m:
        raise InfeasibleRecipe(f"content needs {total}px of page height, {h - m} available")

    # Section bands and the full-width rules between them.
    grid = np.zeros((h, w), dtype=np.uint8)
    page_seps: list[GTSeparator] = []
    sec_tops: list[int] = []
    sec_content_bottoms: list[int] = []
    rule_cut_ys: list[float] = []
    cursor = m
    for s_idx, sh in enumerate(section_heights):
        sec_tops.append(cursor)
        cursor += sh
        sec_content_bottoms.append(cursor)
        if s_idx + 1 < n_sections:
            ry = cursor + pad
            rect = Rect(m, ry, w - m, ry + th)
            _paint_rule(grid, rect, vertical=False)
            page_seps.append(GTSeparator(page_no, "horizontal", rect))
            rule_cut_ys.append(ry + th / 2.0)
            cursor = ry + th + pad

    def cut_band(s_idx: int) -> tuple[float, float]:
        top = 0.0 if s_idx == 0 else rule_cut_ys[s_idx - 1]
        bottom = float(h) if s_idx + 1 == n_sections else rule_cut_ys[s_idx]
        return top, bottom

    for s_idx in range(n_sections):
        for rx in rule_x0:
            rect = Rect(rx, sec_tops[s_idx], rx + th, sec_content_bottoms[s_idx])
            _paint_rule(grid, rect, vertical=True)
            page_seps.append(GTSeparator(page_no, "vertical", rect))

    # Content, column by column. Deferred cell bottoms are patched per column.
    page_articles: list[GTArticle] = []
    drawn_lines: list[Rect] = []
    fuse_candidates: list[tuple[Rect, Rect]] = []
    carry_out: Optional[GTArticle] = None

    def draw_lines(c: int, y: int, count: int) -> tuple[list[Rect], int]:
        rects = []
        for _ in range(count):
            lw = int(col_w * rng.uniform(0.82, 1.0))
            rect = Rect(col_x0[c], y, col_x0[c] + lw, y + line_core)
            _paint_text_band(grid, rect, title=False)
            rects.append(rect)
            y += recipe.line_height
        for pair in zip(rects, rects[1:]):
            fuse_candidates.append(pair)
        drawn_lines.extend(rects)
        return rects, y

    for s_idx, spec in enumerate(recipe.sections):
        sec_cut_top, sec_cut_bottom = cut_band(s_idx)
        spill_in: Optional[tuple[GTArticle, int]] = None
        if s_idx == 0 and incoming is not None:
            spill_in = (incoming, incoming_lines)

        for c in range(k):
            cell_x0, cell_x1 = cut_xs[c], cut_xs[c + 1]
            column_segments: list[GTSegment] = []
            y = sec_tops[s_idx]

            if spill_in is not None:
                art, n_lines = spill_in
                spill_in = None
                rects, y = draw_lines(c, y, n_lines)
                seg = GTSegment(page_no, Rect(cell_x0, sec_cut_top, cell_x1, _DEFER), None, rects)
                art.segments.append(seg)
                column_segments.append(seg)

            for planned in plan[s_idx][c]:
                title_rect = Rect(
                    col_x0[c], y, col_x0[c] + col_w, y + spec.title_height - recipe.entity_gap
                )
                _paint_text_band(grid, title_rect, title=True)
                title_cut = float(y)
                y += spec.title_height

                rects, y = draw_lines(c, y, planned.lines - planned.spill_lines)

                if planned.cutoff_after:
                    ry = y + pad
                    rect = Rect(col_x0[c] + 6, ry, col_x0[c] + col_w - 6, ry + th)
                    _paint_rule(grid, rect, vertical=False)
                    page_seps.append(GTSeparator(page_no, "horizontal", rect))
                    cell_bottom = ry + th / 2.0
                    y = ry + th + pad
                else:
                    cell_bottom = _DEFER

                seg = GTSegment(page_no, Rect(cell_x0, title_cut, cell_x1, cell_bottom), title_rect, rects)
                art = GTArticle(id=-1, segments=[seg])
                page_articles.append(art)
                column_segments.append(seg)

                if planned.spill_lines:
                    spill_in = (art, planned.spill_lines)
                is_last_slot = (
                    s_idx == n_sections - 1 and c == k - 1 and planned is plan[s_idx][c][-1]
                )
                if outgoing and is_last_slot:
                    carry_out = art

            # Deferred bottoms close at the next cut in the column.
            for i, seg in enumerate(column_segments):
                if seg.cell.y1 == _DEFER:
                    nxt = column_segments[i + 1] if i + 1 < len(column_segments) else None
                    bottom = nxt.cell.y0 if nxt is not None else sec_cut_bottom
                    seg.cell = Rect(seg.cell.x0, seg.cell.y0, seg.cell.x1, bottom)

    _apply_degradations(grid, recipe, rng, page_seps, page_no, drawn_lines, fuse_candidates)
    _sprinkle_noise(grid, recipe, rng)

    return LabelImage(grid), page_articles, page_seps, carry_out


def _apply_degradations(
    grid: np.ndarray,
    recipe: PageRecipe,
    rng: random.Random,
    page_seps: list[GTSeparator],
    page_no: int,
    drawn_lines: list[Rect],
    fuse_candidates: list[tuple[Rect, Rect]],
) -> None:
    deg = recipe.degradations

    if deg.separator_break_prob > 0:
        # Gaps stay small enough for collinear reconnection at default tolerances.
        for sep in page_seps:
            if rng.random() >= deg.separator_break_prob:
                continue
            r = sep.rect
            gap = rng.randint(4, 8)
            if sep.orientation == "vertical" and r.height > 40:
                by = rng.randint(int(r.y0) + 8, int(r.y1) - 8 - gap)
                grid[by : by + gap, int(r.x0) : int(r.x1)] = 0
            elif sep.orientation == "horizontal" and r.width > 40:
                bx = rng.randint(int(r.x0) + 8, int(r.x1) - 8 - gap)
                grid[int(r.y0) : int(r.y1), bx : bx + gap] = 0

    if deg.line_fuse_prob > 0:
        for upper, lower in fuse_candidates:
            if rng.random() >= deg.line_fuse_prob:
                continue
            x_lo = int(max(upper.x0, lower.x0)) + 2
            x_hi = int(min(upper.x1, lower.x1)) - 2
            if x_hi <= x_lo:
                continue
            bx = rng.randint(x_lo, x_hi - 1)
            grid[int(upper.y1) : int(lower.y0), bx : bx + 1] = int(RawLabel.CHARACTER)

    mislabel_count = deg.title_mislabel_count
    if mislabel_count is None and deg.title_mislabel_prob > 0:
        mislabel_count = sum(1 for _ in drawn_lines if rng.random() < deg.title_mislabel_prob)
    if mislabel_count:
        if mislabel_count > len(drawn_lines):
            raise InfeasibleRecipe(
                f"cannot mislabel {mislabel_count} lines, page has {len(drawn_lines)}"
            )
        for idx in rng.sample(range(len(drawn_lines)), mislabel_count):
            r = drawn_lines[idx]
            region = grid[int(r.y0) : int(r.y1), int(r.x0) : int(r.x1)]
            text = (region >= int(RawLabel.CHARACTER)) & (region <= int(RawLabel.INTER_WORD))
            region[text] += 3  # character family -> title family


def _sprinkle_noise(grid: np.ndarray, recipe: PageRecipe, rng: random.Random) -> None:
    for _ in range(recipe.noise_blobs):
        bx = rng.randint(4, max(5, recipe.margin - 10))
        by = rng.randint(recipe.margin, recipe.page_height - recipe.margin - 8)
        grid[by : by + 4, bx : bx + 4] = int(RawLabel.NOISE)


# ---------------------------------------------------------------------------
# Random recipes (for corpus building) and JSON serialization
# ---------------------------------------------------------------------------

def random_recipe(
    seed: int,
    max_columns: int = 4,
    max_articles_per_page: int = 12,
    degradations: Degradations = Degradations(),
    spill_prob: float = 0.0,
) -> PageRecipe:
    """A deterministic random page recipe within the supported layout family."""
    rng = random.Random(seed)
    columns = rng.randint(1, max_columns)
    budget = rng.randint(columns, min(max_articles_per_page, columns * 3))
    if rng.random() < 0.5 and budget >= 2:
        first = rng.randint(1, budget - 1)
        shares = [first, budget - first]
    else:
        shares = [budget]
    sections = []
    for s_idx, share in enumerate(shares):
        counts = [0] * columns
        for i in range(share):
            counts[i % columns] += 1
        if s_idx == len(shares) - 1 and counts[-1] == 0:
            # Keep the last column of the last section populated so issues
            # built from this recipe can always carry an article over.
            donor = max(range(columns), key=lambda c: counts[c])
            counts[donor] -= 1
            counts[-1] += 1
        sections.append(
            SectionSpec(
                articles_per_column=tuple(counts),
                lines_range=(3, 6),
                title_height=56,
                cutoff_prob=0.5,
                spill_prob=spill_prob,
            )
        )
    # Page height sized to worst-case demand so planning cannot overflow.
    per_col = -(-budget // columns) + 1
    needed = per_col * (56 + 6 * 40 + 15) * len(shares) + 200
    return PageRecipe(
        columns=columns,
        sections=tuple(sections),
        degradations=degradations,
        rng_seed=rng.randrange(2**31),
        page_height=max(1760, needed),
    )


GT_SCHEMA_VERSION = 1


def _rect_json(r: Rect) -> list[float]:
    return [r.x0, r.y0, r.x1, r.y1]


def ground_truth_to_json(gt: GroundTruth) -> dict:
    return {
        "schema_version": GT_SCHEMA_VERSION,
        "pages": [{"width": w, "height": h} for w, h in gt.page_sizes],
        "reading_order": gt.reading_order,
        "articles": [
            {
                "id": a.id,
                "reading_index": a.reading_index,
                "segments": [
                    {
                        "page": s.page,
                        "cell": _rect_json(s.cell),
                        "title": _rect_json(s.title) if s.title else None,
                        "lines": [_rect_json(r) for r in s.lines],
                    }
                    for s in a.segments
                ],
            }
            for a in gt.articles
        ],
        "separators": [
            {"page": s.page, "orientation": s.orientation, "rect": _rect_json(s.rect)}
            for s in gt.separators
        ],
    }


def ground_truth_from_json(doc: dict) -> GroundTruth:
    if doc.get("schema_version") != GT_SCHEMA_VERSION:
        raise ValueError(f"unsupported ground truth schema: {doc.get('schema_version')}")
    articles = [
        GTArticle(
            id=a["id"],
            reading_index=a["reading_index"],
            segments=[
                GTSegment(
                    page=s["page"],
                    cell=Rect(*s["cell"]),
                    title=Rect(*s["title"]) if s["title"] else None,
                    lines=[Rect(*r) for r in s["lines"]],
                )
                for s in a["segments"]
            ],
        )
        for a in doc["articles"]
    ]
    separators = [
        GTSeparator(s["page"], s["orientation"], Rect(*s["rect"])) for s in doc["separators"]
    ]
    sizes = [(p["width"], p["height"]) for p in doc["pages"]]
    return GroundTruth(sizes, articles, separators)
