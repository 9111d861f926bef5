"""Text-line extraction and repair of lines merged by degradation.

Lines whose convex hull is far larger than the issue-wide mean are assumed
to be several lines fused by an artefact; they are re-cut at thin rows of
their horizontal projection profile.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

from .geometry import Rect, convex_hull, polygon_area
from .labels import InformativeLabel
from .smoothing import EntityImage, entity_components, label_mask


@dataclass
class TextLine:
    id: int
    rows: np.ndarray  # runs: (row, x0, x1), x1 exclusive
    x0s: np.ndarray
    x1s: np.ndarray
    bbox: Rect
    hull_area: float
    baseline_y: int
    oversized: bool = False

    @property
    def pixel_count(self) -> int:
        return int((self.x1s - self.x0s).sum())

    @property
    def pixels(self) -> list[tuple[int, int]]:
        out = []
        for row, x0, x1 in zip(self.rows, self.x0s, self.x1s):
            out.extend((x, int(row)) for x in range(int(x0), int(x1)))
        return out


@dataclass(frozen=True)
class LineStats:
    mean_hull_area: float
    count: int


def hull_area_of_runs(rows: np.ndarray, x0s: np.ndarray, x1s: np.ndarray) -> float:
    """Convex hull area of the pixel set, pixels taken as unit squares.

    Using the squares' corners (rather than pixel centers) keeps the hull a
    superset of the pixel set, so hull area >= pixel count always holds and a
    solid w x h rectangle measures exactly w*h.
    """
    corners: list[tuple[float, float]] = []
    for row, x0, x1 in zip(rows, x0s, x1s):
        y = float(row)
        corners.append((float(x0), y))
        corners.append((float(x1), y))
        corners.append((float(x0), y + 1.0))
        corners.append((float(x1), y + 1.0))
    hull = convex_hull(corners)
    return polygon_area(hull)


def _line_from_runs(line_id: int, rows: np.ndarray, x0s: np.ndarray, x1s: np.ndarray) -> TextLine:
    bbox = Rect(int(x0s.min()), int(rows.min()), int(x1s.max()), int(rows.max()) + 1)
    return TextLine(
        id=line_id,
        rows=rows,
        x0s=x0s,
        x1s=x1s,
        bbox=bbox,
        hull_area=hull_area_of_runs(rows, x0s, x1s),
        baseline_y=int(rows.max()),
    )


def extract_text_lines(entity: EntityImage, connectivity: int = 8) -> list[TextLine]:
    """One TextLine per TEXT_LINE-labeled component of the entity image."""
    lines = []
    for rows, x0s, x1s, _bbox in entity_components(entity, InformativeLabel.TEXT_LINE, connectivity):
        lines.append(_line_from_runs(len(lines), rows, x0s, x1s))
    return lines


def compute_line_stats(lines: list[TextLine]) -> LineStats:
    """Mean hull area over a whole issue. Empty input disables splitting."""
    if not lines:
        return LineStats(0.0, 0)
    return LineStats(sum(ln.hull_area for ln in lines) / len(lines), len(lines))


def split_merged_lines(
    lines: list[TextLine],
    stats: LineStats,
    factor: float = 2.5,
    max_rounds: int = 3,
    connectivity: int = 8,
) -> list[TextLine]:
    """Split every line whose hull area exceeds ``factor * mean`` at thin rows
    of its projection profile.

    Pixels are conserved: the output pixel sets partition the input pixel
    sets. Lines still oversized after ``max_rounds`` are flagged, not dropped.
    """
    if stats.count == 0 or stats.mean_hull_area <= 0:
        return list(lines)
    threshold = factor * stats.mean_hull_area

    out: list[TextLine] = []
    for line in lines:
        if line.hull_area <= threshold:
            out.append(line)
            continue
        out.extend(_split_recursive(line, threshold, max_rounds, connectivity))

    return [replace(ln, id=i) for i, ln in enumerate(out)]


def _split_recursive(line: TextLine, threshold: float, rounds_left: int, connectivity: int) -> list[TextLine]:
    if line.hull_area <= threshold:
        return [line]
    if rounds_left <= 0:
        return [replace(line, oversized=True)]
    cut_rows = _projection_cut_rows(line)
    if not cut_rows:
        return [replace(line, oversized=True)]
    parts = _cut_at_rows(line, cut_rows, connectivity)
    if len(parts) == 1:
        return [replace(line, oversized=True)]
    result: list[TextLine] = []
    for part in parts:
        result.extend(_split_recursive(part, threshold, rounds_left - 1, connectivity))
    return result


def _projection_cut_rows(line: TextLine) -> list[int]:
    """Centers of interior row bands whose pixel sum drops below 20% of the
    component's median row sum."""
    y0 = int(line.rows.min())
    y1 = int(line.rows.max()) + 1
    profile = np.zeros(y1 - y0, dtype=np.int64)
    np.add.at(profile, line.rows - y0, line.x1s - line.x0s)
    cutoff = 0.2 * float(np.median(profile))
    low = profile < cutoff
    cuts = []
    i = 0
    n = len(low)
    while i < n:
        if not low[i]:
            i += 1
            continue
        j = i
        while j < n and low[j]:
            j += 1
        if i > 0 and j < n:  # interior band only; edge fringes stay attached
            cuts.append(y0 + (i + j) // 2)
        i = j
    return cuts


def _cut_at_rows(line: TextLine, cut_rows: list[int], connectivity: int) -> list[TextLine]:
    """Partition the run set at the given rows, re-labeling each horizontal
    slab so disconnected leftovers become their own lines."""
    bounds = [int(line.rows.min())] + sorted(cut_rows) + [int(line.rows.max()) + 1]
    parts: list[TextLine] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        sel = (line.rows >= lo) & (line.rows < hi)
        if not sel.any():
            continue
        rows, x0s, x1s = line.rows[sel], line.x0s[sel], line.x1s[sel]
        # Rebuild connectivity inside the slab: a cut can strand side-by-side
        # fragments that are no longer connected to each other.
        sub_w = int(x1s.max() - x0s.min())
        off_x = int(x0s.min())
        off_y = int(rows.min())
        mask = np.zeros((int(rows.max()) - off_y + 1, sub_w), dtype=bool)
        for row, x0, x1 in zip(rows, x0s, x1s):
            mask[row - off_y, x0 - off_x : x1 - off_x] = True
        for crows, cx0s, cx1s in label_mask(mask, connectivity):
            parts.append(
                _line_from_runs(len(parts), crows + off_y, cx0s + off_x, cx1s + off_x)
            )
    return parts
