"""Section tree, reading order, and article assembly.

Sections nest under the nearest horizontal separator strictly longer than
they are; siblings read left-to-right then top-to-bottom; a box that opens
with a title starts an article and title-less boxes flow into the article
before them unless a same-level separator closed it. Headless leading
articles link across pages at the issue level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .geometry import Rect
from .grid import EPS_LONGER, GridBox, SeparatorGrid


class Continuation(str, Enum):
    NONE = "none"
    CONTINUES_PREVIOUS = "continues-previous"
    CONTINUES_NEXT = "continues-next"
    BOTH = "both"


@dataclass
class SectionNode:
    id: int
    bbox: Rect
    parent: Optional[int] = None
    children: list[int] = field(default_factory=list)
    box_ids: list[int] = field(default_factory=list)  # leaves only
    delimiter: Optional[int] = None  # horizontal separator that split the parent


@dataclass
class Article:
    id: int
    boxes: list[tuple[int, int]]  # (page index, box id)
    title: Optional[tuple[int, int]] = None  # (page index, title id)
    text_lines: list[tuple[int, int]] = field(default_factory=list)
    continuation: Continuation = Continuation.NONE
    reading_index: int = 0
    orphan: bool = False  # headless with no resolvable predecessor


@dataclass
class SectionTree:
    nodes: list[SectionNode]

    @property
    def root(self) -> SectionNode:
        return self.nodes[0]

    def node(self, node_id: int) -> SectionNode:
        return self.nodes[node_id]


def _covers(h, bbox: Rect) -> bool:
    return h.span[0] <= bbox.x0 + EPS_LONGER and h.span[1] >= bbox.x1 - EPS_LONGER


def _delimiter_above(bbox: Rect, horizontals: list):
    """Nearest horizontal separator strictly longer than the region, lying at
    or above its top and horizontally covering it. Ties go to the longer one."""
    best = None
    best_key = None
    for h in horizontals:
        if h.position > bbox.y0 + 1e-9:
            continue
        if h.length <= bbox.width + EPS_LONGER or not _covers(h, bbox):
            continue
        key = (h.position, h.length)
        if best_key is None or key > best_key:
            best, best_key = h, key
    return best


def _delimiter_below(bbox: Rect, horizontals: list):
    """Mirror of ``_delimiter_above``: regions bounded only from below are
    sections too (the part of a page above a header rule)."""
    best = None
    best_key = None
    for h in horizontals:
        if h.position < bbox.y1 - 1e-9:
            continue
        if h.length <= bbox.width + EPS_LONGER or not _covers(h, bbox):
            continue
        key = (h.position, -h.length)
        if best_key is None or key < best_key:
            best, best_key = h, key
    return best


def _choose_delimiter(bbox: Rect, horizontals: list) -> tuple[Optional[str], Optional[object]]:
    """Pick the delimiter whose section most tightly encloses the region.

    When a region is delimited on both sides, the shorter separator opens the
    more deeply nested section; ties prefer the separator above.
    """
    above = _delimiter_above(bbox, horizontals)
    below = _delimiter_below(bbox, horizontals)
    if above is not None and below is not None:
        if below.length < above.length - EPS_LONGER:
            return "above", below
        return "below", above
    if above is not None:
        return "below", above
    if below is not None:
        return "above", below
    return None, None


def build_section_tree(boxes: list[GridBox], grid: SeparatorGrid) -> SectionTree:
    """Bottom-up grouping: every box (then every section) attaches under the
    section delimited by the nearest strictly-longer horizontal separator.

    A delimiter splits the page band it spans into the section below it and
    the section above it; items with no delimiter on either side hang off the
    root. Levels repeat until everything reaches the root.
    """
    horizontals = grid.horizontals
    root = SectionNode(id=0, bbox=grid.page_box)
    nodes: list[SectionNode] = [root]
    section_by_key: dict[tuple[str, int], int] = {}

    pending: list[int] = []
    for box in boxes:
        node = SectionNode(id=len(nodes), bbox=box.bbox, box_ids=[box.id])
        nodes.append(node)
        pending.append(node.id)

    while pending:
        next_pending: list[int] = []
        for node_id in pending:
            bbox = nodes[node_id].bbox
            side, sep = _choose_delimiter(bbox, horizontals)
            if sep is None:
                nodes[node_id].parent = root.id
                root.children.append(node_id)
                continue
            key = (side, sep.id)
            if key in section_by_key:
                section = nodes[section_by_key[key]]
                section.bbox = section.bbox.union_bbox(bbox)
            else:
                if side == "below":
                    sec_bbox = Rect(min(sep.span[0], bbox.x0), sep.position, max(sep.span[1], bbox.x1), bbox.y1)
                else:
                    sec_bbox = Rect(min(sep.span[0], bbox.x0), bbox.y0, max(sep.span[1], bbox.x1), sep.position)
                section = SectionNode(id=len(nodes), bbox=sec_bbox, delimiter=sep.id)
                nodes.append(section)
                section_by_key[key] = section.id
                next_pending.append(section.id)
            nodes[node_id].parent = section.id
            section.children.append(node_id)
        pending = next_pending

    _reattach_contained(nodes, root)
    _order_children(nodes)
    return SectionTree(nodes)


def _reattach_contained(nodes: list[SectionNode], root: SectionNode) -> None:
    # A root-attached region strictly inside a sibling section belongs to that
    # section (arises when a title edge, not a separator, opened the section).
    moved = True
    while moved:
        moved = False
        for child_id in list(root.children):
            child = nodes[child_id]
            for other_id in root.children:
                if other_id == child_id:
                    continue
                other = nodes[other_id]
                if other.box_ids:
                    continue  # leaves cannot host sections
                if other.bbox.contains(child.bbox) and not child.bbox.contains(other.bbox):
                    root.children.remove(child_id)
                    other.children.append(child_id)
                    child.parent = other.id
                    moved = True
                    break
            if moved:
                break


def _order_children(nodes: list[SectionNode]) -> None:
    for node in nodes:
        node.children.sort(key=lambda cid: (nodes[cid].bbox.x0, nodes[cid].bbox.y0))


def order_sections(tree: SectionTree) -> list[int]:
    """Depth-first leaf order: the reading order over grid box ids."""
    out: list[int] = []

    def visit(node_id: int) -> None:
        node = tree.node(node_id)
        out.extend(node.box_ids)
        for child in node.children:
            visit(child)

    visit(tree.root.id)
    return out


# ---------------------------------------------------------------------------
# Article assembly
# ---------------------------------------------------------------------------

def merge_fragment(current: Optional[Article], box: GridBox, grid: SeparatorGrid) -> bool:
    """Fragment rule: a title-less box whose delimiting separator is strictly
    longer than the box belongs to the article just before it."""
    if current is None or box.has_title:
        return False
    if box.top_edge is None or box.top_edge[0] != "separator":
        return False
    return box.top_edge[2] > box.bbox.width + EPS_LONGER


def extract_articles(
    ordered_boxes: list[GridBox],
    grid: SeparatorGrid,
    page_index: int = 0,
) -> list[Article]:
    """Scan boxes in reading order applying the article rules.

    A titled box opens an article. A title-less box continues the current one
    unless a separator at the box's own level sits directly between them, in
    which case the article has ended and the box starts a headless fragment
    (re-joined later by the fragment rule or cross-page linking).
    """
    articles: list[Article] = []
    current: Optional[Article] = None
    prev_box: Optional[GridBox] = None

    def open_article(box: GridBox, headless: bool) -> Article:
        art = Article(id=len(articles), boxes=[(page_index, box.id)])
        if not headless:
            art.title = (page_index, box.title_ids[0]) if box.title_ids else None
        else:
            # Headless articles stay marked until cross-page linking either
            # resolves them or declares them orphans.
            art.continuation = Continuation.CONTINUES_PREVIOUS
        articles.append(art)
        return art

    for box in ordered_boxes:
        if box.has_title:
            current = open_article(box, headless=False)
        elif current is None:
            current = open_article(box, headless=True)
        else:
            directly_below = (
                prev_box is not None
                and abs(box.bbox.y0 - prev_box.bbox.y1) < 1e-6
                and min(box.bbox.x1, prev_box.bbox.x1) - max(box.bbox.x0, prev_box.bbox.x0) > 0
            )
            separator_between = (
                directly_below and box.top_edge is not None and box.top_edge[0] == "separator"
            )
            if separator_between and not merge_fragment(current, box, grid):
                # Same-level separator: the running article ended here.
                current = open_article(box, headless=True)
            else:
                current.boxes.append((page_index, box.id))
        prev_box = box

    for idx, art in enumerate(articles):
        art.reading_index = idx
    return articles


def attach_lines(articles: list[Article], boxes: list[GridBox], page_index: int) -> None:
    """Fill each article's line list from its boxes, in box reading order."""
    by_id = {b.id: b for b in boxes}
    for art in articles:
        art.text_lines = [
            (page, line_id)
            for page, box_id in art.boxes
            if page == page_index
            for line_id in by_id[box_id].line_ids
        ]


def link_cross_page(pages: list[list[Article]]) -> list[Article]:
    """Fold per-page article lists into one issue list.

    A headless first article on page p+1 merges into the last article seen so
    far; the linked pair becomes one logical article. Headless articles no
    link can resolve (page-1 leaders, mid-page fragments) are kept and flagged
    as orphans. Reading indices are renumbered over the issue.
    """
    issue: list[Article] = []
    for page_no, page_articles in enumerate(pages):
        for art in page_articles:
            is_headless_leader = (
                art.reading_index == 0
                and art.title is None
                and art.continuation == Continuation.CONTINUES_PREVIOUS
            )
            if page_no > 0 and is_headless_leader and issue:
                target = issue[-1]
                target.boxes.extend(art.boxes)
                target.text_lines.extend(art.text_lines)
                if target.title is not None:
                    # The link made the article whole.
                    target.continuation = Continuation.NONE
                continue
            issue.append(art)

    for idx, art in enumerate(issue):
        art.id = idx
        art.reading_index = idx
        art.orphan = art.title is None and art.continuation == Continuation.CONTINUES_PREVIOUS
    return issue
