"""Separator grid construction.

Detected separator components are idealized as axis-aligned line segments,
fragments are reconnected, segments are prolonged until they hit a blocker,
and the resulting arrangement is tiled into grid boxes. Title regions block
vertical prolongation and contribute a gridding segment along their top edge,
so the cut that isolates an article falls just above its title.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

from .geometry import Rect, bbox_of
from .labels import InformativeLabel
from .smoothing import EntityImage, entity_components
from .textlines import TextLine

EPS_BLOCK = 0.5  # touching is not crossing
EPS_LONGER = 2.0  # guard on strictly-longer comparisons against raster jitter


class Orientation(str, Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


class Origin(str, Enum):
    DETECTED = "detected"
    CONNECTED = "connected"
    PROLONGED = "prolonged"


@dataclass
class Separator:
    id: int
    orientation: Orientation
    span: tuple[float, float]  # interval along the separator's axis
    position: float  # coordinate on the cross axis
    origin: Origin = Origin.DETECTED
    detected_span: Optional[tuple[float, float]] = None
    thickness: float = 1.0  # detected cross-axis extent
    merged_from: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.span[0] >= self.span[1]:
            raise ValueError(f"separator span must be non-empty: {self.span}")
        if self.detected_span is None:
            self.detected_span = self.span

    @property
    def length(self) -> float:
        return self.span[1] - self.span[0]


@dataclass
class TitleBlock:
    id: int
    bbox: Rect  # detected extent
    grid_bbox: Optional[Rect] = None  # after horizontal prolongation

    def __post_init__(self) -> None:
        if self.grid_bbox is None:
            self.grid_bbox = self.bbox

    @property
    def top_segment(self) -> tuple[float, float, float]:
        """(y, x0, x1) of the gridding segment along the title's top edge."""
        gb = self.grid_bbox
        return (gb.y0, gb.x0, gb.x1)


@dataclass
class ThickComponentError:
    """A separator-labeled component too thick to be a ruling; demoted to noise."""

    component_id: int
    orientation: Orientation
    bbox: Rect
    thickness: float


@dataclass
class SeparatorGrid:
    verticals: list[Separator]
    horizontals: list[Separator]
    titles: list[TitleBlock]
    page_box: Rect
    demoted: list[ThickComponentError] = field(default_factory=list)

    def horizontal_segments(self) -> list[tuple[float, float, float, str, int]]:
        """All horizontal gridding segments as (y, x0, x1, kind, ref id)."""
        segs = [(h.position, h.span[0], h.span[1], "separator", h.id) for h in self.horizontals]
        segs.extend((t.top_segment[0], t.top_segment[1], t.top_segment[2], "title", t.id) for t in self.titles)
        return segs


@dataclass
class GridBox:
    id: int
    bbox: Rect
    line_ids: list[int] = field(default_factory=list)
    title_ids: list[int] = field(default_factory=list)
    has_title: bool = False
    # Gridding segment forming the top edge, when one exists: (kind, ref id, length)
    top_edge: Optional[tuple[str, int, float]] = None


def build_separator_mask(
    entity: EntityImage,
    connectivity: int = 8,
    max_thickness: float = 24.0,
) -> SeparatorGrid:
    """Fit axis-aligned separators and title blocks from the entity image.

    A separator component whose cross-axis extent exceeds ``max_thickness``
    signals a labeler failure; it is demoted to noise and reported in
    ``demoted`` rather than poisoning the grid.
    """
    page_box = Rect(0.0, 0.0, float(entity.width), float(entity.height))
    verticals: list[Separator] = []
    horizontals: list[Separator] = []
    demoted: list[ThickComponentError] = []

    for rows, x0s, x1s, bbox in entity_components(entity, InformativeLabel.VERTICAL_SEPARATOR, connectivity):
        thickness = bbox.width
        if thickness > max_thickness:
            demoted.append(ThickComponentError(len(demoted), Orientation.VERTICAL, bbox, thickness))
            continue
        verticals.append(
            Separator(
                id=len(verticals),
                orientation=Orientation.VERTICAL,
                span=(bbox.y0, bbox.y1),
                position=(bbox.x0 + bbox.x1) / 2.0,
                thickness=thickness,
            )
        )
    for rows, x0s, x1s, bbox in entity_components(entity, InformativeLabel.HORIZONTAL_SEPARATOR, connectivity):
        thickness = bbox.height
        if thickness > max_thickness:
            demoted.append(ThickComponentError(len(demoted), Orientation.HORIZONTAL, bbox, thickness))
            continue
        horizontals.append(
            Separator(
                id=len(horizontals),
                orientation=Orientation.HORIZONTAL,
                span=(bbox.x0, bbox.x1),
                position=(bbox.y0 + bbox.y1) / 2.0,
                thickness=thickness,
            )
        )
    titles = [
        TitleBlock(i, bbox)
        for i, (_r, _a, _b, bbox) in enumerate(
            entity_components(entity, InformativeLabel.TITLE, connectivity)
        )
    ]
    return SeparatorGrid(verticals, horizontals, titles, page_box, demoted)


# ---------------------------------------------------------------------------
# Collinear connection
# ---------------------------------------------------------------------------

def mergeable(
    a: Separator,
    b: Separator,
    gap_tol: float,
    offset_tol: float,
    blockers: Sequence[object] = (),
) -> bool:
    """Pair predicate for fragment reconnection.

    Fragments merge when their cross-axis offset and axial gap are within
    tolerance and nothing perpendicular crosses the gap between them. The
    blocker test is strict on the cross axis: a segment that merely ends on
    the fragments' line does not separate them.
    """
    if a.orientation != b.orientation:
        return False
    if abs(a.position - b.position) > offset_tol:
        return False
    first, second = (a, b) if a.span[0] <= b.span[0] else (b, a)
    gap = second.span[0] - first.span[1]
    if gap > gap_tol:
        return False
    if gap > 0 or first.span[1] == second.span[0]:
        lo, hi = first.span[1], second.span[0]
        mid_pos = (a.position + b.position) / 2.0
        for blk in blockers:
            if _blocks_interval(blk, a.orientation, mid_pos, lo, hi):
                return False
    return True


def _blocks_interval(blocker: object, orientation: Orientation, pos: float, lo: float, hi: float) -> bool:
    if isinstance(blocker, Separator):
        if blocker.orientation == orientation:
            return False
        covers = blocker.span[0] + EPS_BLOCK < pos < blocker.span[1] - EPS_BLOCK
        inside = lo - EPS_BLOCK <= blocker.position <= hi + EPS_BLOCK
        return covers and inside
    if isinstance(blocker, TitleBlock):
        bb = blocker.bbox
        if orientation == Orientation.VERTICAL:
            covers = bb.x0 + EPS_BLOCK < pos < bb.x1 - EPS_BLOCK
            return covers and bb.y0 <= hi + EPS_BLOCK and bb.y1 >= lo - EPS_BLOCK
        covers = bb.y0 + EPS_BLOCK < pos < bb.y1 - EPS_BLOCK
        return covers and bb.x0 <= hi + EPS_BLOCK and bb.x1 >= lo - EPS_BLOCK
    return False


def connect_collinear(
    seps: list[Separator],
    gap_tol: float,
    offset_tol: float,
    blockers: Sequence[object] = (),
) -> list[Separator]:
    """Transitive closure of ``mergeable`` computed with union-find.

    Each output separator spans the union of its fragments; its position is
    the length-weighted mean of the fragment positions.
    """
    n = len(seps)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if find(i) != find(j) and mergeable(seps[i], seps[j], gap_tol, offset_tol, blockers):
                parent[max(find(i), find(j))] = min(find(i), find(j))

    groups: dict[int, list[Separator]] = {}
    for i, sep in enumerate(seps):
        groups.setdefault(find(i), []).append(sep)

    merged: list[Separator] = []
    for root in sorted(groups):
        members = groups[root]
        if len(members) == 1:
            merged.append(replace(members[0], id=len(merged)))
            continue
        start = min(m.span[0] for m in members)
        end = max(m.span[1] for m in members)
        weights = [m.length for m in members]
        position = sum(m.position * w for m, w in zip(members, weights)) / sum(weights)
        detected = (min(m.detected_span[0] for m in members), max(m.detected_span[1] for m in members))
        merged.append(
            Separator(
                id=len(merged),
                orientation=members[0].orientation,
                span=(start, end),
                position=position,
                origin=Origin.CONNECTED,
                detected_span=detected,
                merged_from=tuple(m.id for m in members),
            )
        )
    return merged


# ---------------------------------------------------------------------------
# Prolongation
# ---------------------------------------------------------------------------

def prolong_verticals(grid: SeparatorGrid) -> SeparatorGrid:
    """Extend every vertical both ways until its ray meets a horizontal's span
    interval, a title bbox, or the page boundary. Touching counts as contact."""
    out = []
    for v in grid.verticals:
        y0, y1 = v.span
        up_candidates = [grid.page_box.y0]
        down_candidates = [grid.page_box.y1]
        for h in grid.horizontals:
            if h.span[0] - EPS_BLOCK <= v.position <= h.span[1] + EPS_BLOCK:
                if h.position <= y0:
                    up_candidates.append(h.position)
                elif h.position >= y1:
                    down_candidates.append(h.position)
        for t in grid.titles:
            if t.bbox.x0 - EPS_BLOCK < v.position < t.bbox.x1 + EPS_BLOCK:
                if t.bbox.y1 <= y0:
                    up_candidates.append(t.bbox.y1)
                elif t.bbox.y0 >= y1:
                    down_candidates.append(t.bbox.y0)
        new_span = (min(y0, max(up_candidates)), max(y1, min(down_candidates)))
        origin = v.origin if new_span == v.span else Origin.PROLONGED
        out.append(replace(v, span=new_span, origin=origin))
    return SeparatorGrid(out, grid.horizontals, grid.titles, grid.page_box, grid.demoted)


def prolong_horizontals_and_titles(grid: SeparatorGrid) -> SeparatorGrid:
    """Extend horizontals and title bboxes sideways until a prolonged vertical
    or the page edge blocks them. Requires verticals already prolonged."""
    horizontals = []
    for h in grid.horizontals:
        x0, x1 = h.span
        left = [grid.page_box.x0]
        right = [grid.page_box.x1]
        for v in grid.verticals:
            if v.span[0] - EPS_BLOCK <= h.position <= v.span[1] + EPS_BLOCK:
                if v.position <= x0:
                    left.append(v.position)
                elif v.position >= x1:
                    right.append(v.position)
        new_span = (min(x0, max(left)), max(x1, min(right)))
        origin = h.origin if new_span == h.span else Origin.PROLONGED
        horizontals.append(replace(h, span=new_span, origin=origin))

    titles = []
    for t in grid.titles:
        bb = t.bbox
        left = [grid.page_box.x0]
        right = [grid.page_box.x1]
        for v in grid.verticals:
            if v.span[0] < bb.y1 - EPS_BLOCK and v.span[1] > bb.y0 + EPS_BLOCK:
                if v.position <= bb.x0:
                    left.append(v.position)
                elif v.position >= bb.x1:
                    right.append(v.position)
        grid_bbox = Rect(min(bb.x0, max(left)), bb.y0, max(bb.x1, min(right)), bb.y1)
        titles.append(TitleBlock(t.id, bb, grid_bbox))

    return SeparatorGrid(grid.verticals, horizontals, titles, grid.page_box, grid.demoted)


def connect_and_prolong(grid: SeparatorGrid, gap_tol: float, offset_tol: float) -> SeparatorGrid:
    """Steps 2-5 over an already-fitted mask: connect verticals, prolong
    verticals, connect horizontals, prolong horizontals and titles."""
    blockers_v: list[object] = list(grid.horizontals) + list(grid.titles)
    verticals = connect_collinear(grid.verticals, gap_tol, offset_tol, blockers_v)
    grid = SeparatorGrid(verticals, grid.horizontals, grid.titles, grid.page_box, grid.demoted)
    grid = prolong_verticals(grid)
    blockers_h: list[object] = list(grid.verticals) + list(grid.titles)
    horizontals = connect_collinear(grid.horizontals, gap_tol, offset_tol, blockers_h)
    grid = SeparatorGrid(grid.verticals, horizontals, grid.titles, grid.page_box, grid.demoted)
    return prolong_horizontals_and_titles(grid)


def build_grid(
    entity: EntityImage,
    gap_tol: float,
    offset_tol: float,
    connectivity: int = 8,
    max_thickness: float = 24.0,
) -> SeparatorGrid:
    """The full five-step generation starting from the entity image."""
    mask = build_separator_mask(entity, connectivity, max_thickness)
    return connect_and_prolong(mask, gap_tol, offset_tol)


# ---------------------------------------------------------------------------
# Grid boxes
# ---------------------------------------------------------------------------

def extract_grid_boxes(grid: SeparatorGrid) -> list[GridBox]:
    """Tile the page into the maximal cells of the prolonged arrangement.

    Cells of the fine grid induced by all cut coordinates are merged wherever
    no segment separates them. Faces that come out non-rectangular (possible
    around title blockers) are decomposed into horizontal bands so the output
    is always a set of disjoint rectangles covering the page.
    """
    page = grid.page_box
    h_segments = grid.horizontal_segments()
    v_segments = [(v.position, v.span[0], v.span[1]) for v in grid.verticals]

    xs = {page.x0, page.x1}
    ys = {page.y0, page.y1}
    for x, y0, y1 in v_segments:
        if page.x0 < x < page.x1:
            xs.add(x)
        ys.add(min(max(y0, page.y0), page.y1))
        ys.add(min(max(y1, page.y0), page.y1))
    for y, x0, x1, _kind, _ref in h_segments:
        if page.y0 < y < page.y1:
            ys.add(y)
        xs.add(min(max(x0, page.x0), page.x1))
        xs.add(min(max(x1, page.x0), page.x1))
    xcuts = sorted(xs)
    ycuts = sorted(ys)
    nx, ny = len(xcuts) - 1, len(ycuts) - 1
    if nx <= 0 or ny <= 0:
        return []

    def cell(i: int, j: int) -> int:
        return j * nx + i

    parent = list(range(nx * ny))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for j in range(ny):
        ylo, yhi = ycuts[j], ycuts[j + 1]
        for i in range(nx - 1):
            x = xcuts[i + 1]
            blocked = any(
                abs(vx - x) < 1e-9 and vy0 <= ylo + 1e-9 and vy1 >= yhi - 1e-9
                for vx, vy0, vy1 in v_segments
            )
            if not blocked:
                union(cell(i, j), cell(i + 1, j))
    for i in range(nx):
        xlo, xhi = xcuts[i], xcuts[i + 1]
        for j in range(ny - 1):
            y = ycuts[j + 1]
            blocked = any(
                abs(hy - y) < 1e-9 and hx0 <= xlo + 1e-9 and hx1 >= xhi - 1e-9
                for hy, hx0, hx1, _k, _r in h_segments
            )
            if not blocked:
                union(cell(i, j), cell(i, j + 1))

    faces: dict[int, list[tuple[int, int]]] = {}
    for j in range(ny):
        for i in range(nx):
            faces.setdefault(find(cell(i, j)), []).append((i, j))

    rects: list[Rect] = []
    for root in sorted(faces):
        cells = faces[root]
        face_rects = [Rect(xcuts[i], ycuts[j], xcuts[i + 1], ycuts[j + 1]) for i, j in cells]
        face_bbox = bbox_of(face_rects)
        if abs(sum(r.area for r in face_rects) - face_bbox.area) < 1e-6:
            rects.append(face_bbox)
        else:
            rects.extend(_decompose_face(cells, xcuts, ycuts))

    rects.sort(key=lambda r: (r.y0, r.x0))
    boxes = []
    for bid, rect in enumerate(rects):
        boxes.append(GridBox(id=bid, bbox=rect, top_edge=_top_edge_of(rect, h_segments, page)))
    return boxes


def _decompose_face(cells: list[tuple[int, int]], xcuts: list[float], ycuts: list[float]) -> list[Rect]:
    """Deterministic rectangle cover of a rectilinear face: per-row runs,
    then vertical merging of runs with identical x extent."""
    by_row: dict[int, list[int]] = {}
    for i, j in cells:
        by_row.setdefault(j, []).append(i)
    strips: list[Rect] = []
    for j in sorted(by_row):
        cols = sorted(by_row[j])
        start = cols[0]
        prev = cols[0]
        for c in cols[1:] + [None]:
            if c is not None and c == prev + 1:
                prev = c
                continue
            strips.append(Rect(xcuts[start], ycuts[j], xcuts[prev + 1], ycuts[j + 1]))
            if c is not None:
                start = prev = c
    merged: list[Rect] = []
    for strip in strips:
        for k, m in enumerate(merged):
            if m.x0 == strip.x0 and m.x1 == strip.x1 and abs(m.y1 - strip.y0) < 1e-9:
                merged[k] = Rect(m.x0, m.y0, m.x1, strip.y1)
                break
        else:
            merged.append(strip)
    return merged


def _top_edge_of(
    rect: Rect,
    h_segments: list[tuple[float, float, float, str, int]],
    page: Rect,
) -> Optional[tuple[str, int, float]]:
    if abs(rect.y0 - page.y0) < 1e-9:
        return None
    mid = (rect.x0 + rect.x1) / 2.0
    best: Optional[tuple[str, int, float]] = None
    for y, x0, x1, kind, ref in h_segments:
        if abs(y - rect.y0) < 1e-9 and x0 - EPS_BLOCK <= mid <= x1 + EPS_BLOCK:
            length = x1 - x0
            if best is None or length > best[2]:
                best = (kind, ref, length)
    return best


def assign_content(
    boxes: list[GridBox],
    lines: list[TextLine],
    titles: list[TitleBlock],
) -> list[GridBox]:
    """Attach text lines and titles to boxes.

    A line goes to the box fully containing its bbox; a straddling line (only
    possible after imperfect splitting) goes to the box with maximal overlap
    instead of being dropped. Boxes holding neither lines nor titles are
    rejected. Title-only boxes survive: they carry article openings.
    """
    out = [replace(b, line_ids=[], title_ids=[], has_title=False) for b in boxes]

    for line in lines:
        lb = Rect(float(line.bbox.x0), float(line.bbox.y0), float(line.bbox.x1), float(line.bbox.y1))
        target = None
        for box in out:
            if box.bbox.contains(lb):
                target = box
                break
        if target is None:
            best_area = 0.0
            for box in out:
                a = box.bbox.intersection_area(lb)
                if a > best_area:
                    best_area = a
                    target = box
        if target is not None:
            target.line_ids.append(line.id)

    for title in titles:
        seg_y, seg_x0, seg_x1 = title.top_segment
        for box in out:
            top_match = (
                abs(box.bbox.y0 - seg_y) < 1e-9
                and seg_x0 - EPS_BLOCK <= (box.bbox.x0 + box.bbox.x1) / 2.0 <= seg_x1 + EPS_BLOCK
            )
            inside = box.bbox.contains(title.grid_bbox)
            if top_match or inside:
                box.has_title = True
                if title.id not in box.title_ids:
                    box.title_ids.append(title.id)

    kept = [b for b in out if b.line_ids or b.title_ids]
    return [replace(b, id=i) for i, b in enumerate(kept)]
