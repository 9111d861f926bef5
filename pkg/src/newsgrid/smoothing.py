"""Connected-component relabeling of the raw label map.

Components are extracted over every non-background pixel regardless of its
label, then each component is repainted with the majority informative label
of its pixels. Ties go to the most structurally informative label (separators
before titles before text) so degraded rulings are never absorbed by text.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .geometry import Rect
from .labels import InformativeLabel, LabelImage

# Vote priority on equal counts, most informative first. Background never
# appears inside a component so it carries no priority.
DEFAULT_TIE_BREAK: tuple[InformativeLabel, ...] = (
    InformativeLabel.VERTICAL_SEPARATOR,
    InformativeLabel.HORIZONTAL_SEPARATOR,
    InformativeLabel.TITLE,
    InformativeLabel.TEXT_LINE,
    InformativeLabel.NOISE,
)


@dataclass
class Component:
    """One connected region of non-background pixels.

    Pixel membership is stored as horizontal runs (row, x0, x1), x1 exclusive.
    """

    id: int
    rows: np.ndarray  # int32, one entry per run
    x0s: np.ndarray
    x1s: np.ndarray
    bbox: Rect
    histogram: np.ndarray  # int64, counts per informative code (size 6)

    @property
    def pixel_count(self) -> int:
        return int((self.x1s - self.x0s).sum())

    @property
    def pixels(self) -> list[tuple[int, int]]:
        out = []
        for row, x0, x1 in zip(self.rows, self.x0s, self.x1s):
            out.extend((x, int(row)) for x in range(int(x0), int(x1)))
        return out

    def majority_label(self, tie_break: tuple[InformativeLabel, ...] = DEFAULT_TIE_BREAK) -> InformativeLabel:
        order = [int(lbl) for lbl in tie_break]
        counts = self.histogram[order]
        return InformativeLabel(order[int(np.argmax(counts))])


@dataclass
class EntityImage:
    """Informative-coded grid in which every connected entity is single-labeled."""

    labels: np.ndarray  # uint8 informative codes, shape (height, width)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def mask_runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Horizontal runs of True cells as (rows, x0s, x1s), x1 exclusive."""
    h, w = mask.shape
    padded = np.zeros((h, w + 1), dtype=bool)
    padded[:, :w] = mask
    flat = padded.reshape(-1).astype(np.int8)
    d = np.diff(flat, prepend=0)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    rows = (starts // (w + 1)).astype(np.int32)
    x0s = (starts % (w + 1)).astype(np.int32)
    x1s = (ends - rows * (w + 1)).astype(np.int32)
    return rows, x0s, x1s


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def label_mask(mask: np.ndarray, connectivity: int = 8) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Group a boolean mask into connected components of runs.

    Returns one (rows, x0s, x1s) triple per component, components ordered by
    their first run in scan order (deterministic).
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    rows, x0s, x1s = mask_runs(mask)
    n = len(rows)
    if n == 0:
        return []
    uf = _UnionFind(n)
    # Runs arrive sorted by (row, x0); merge overlapping runs of adjacent rows.
    # 8-connectivity also joins runs that only touch diagonally.
    reach = 0 if connectivity == 4 else 1
    row_starts: dict[int, int] = {}
    for i, r in enumerate(rows):
        row_starts.setdefault(int(r), i)
    for i in range(n):
        r = int(rows[i])
        j = row_starts.get(r + 1)
        if j is None:
            continue
        a0, a1 = int(x0s[i]) - reach, int(x1s[i]) + reach
        while j < n and rows[j] == r + 1 and int(x0s[j]) < a1:
            if int(x1s[j]) > a0:
                uf.union(i, j)
            j += 1
    comp_of_run = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    order: dict[int, int] = {}
    for root in comp_of_run:
        if root not in order:
            order[root] = len(order)
    groups: list[list[int]] = [[] for _ in range(len(order))]
    for i, root in enumerate(comp_of_run):
        groups[order[root]].append(i)
    out = []
    for idxs in groups:
        sel = np.array(idxs, dtype=np.int64)
        out.append((rows[sel], x0s[sel], x1s[sel]))
    return out


def connected_components(img: LabelImage, connectivity: int = 8) -> list[Component]:
    """All connected components of non-background pixels, with per-component
    histograms over informative labels."""
    informative = img.informative()
    mask = informative != InformativeLabel.BACKGROUND
    comps = []
    for cid, (rows, x0s, x1s) in enumerate(label_mask(mask, connectivity)):
        hist = np.zeros(6, dtype=np.int64)
        for row, x0, x1 in zip(rows, x0s, x1s):
            hist += np.bincount(informative[row, x0:x1], minlength=6)
        bbox = Rect(int(x0s.min()), int(rows.min()), int(x1s.max()), int(rows.max()) + 1)
        comps.append(Component(cid, rows, x0s, x1s, bbox, hist))
    return comps


def majority_vote_smooth(
    img: LabelImage,
    connectivity: int = 8,
    tie_break: tuple[InformativeLabel, ...] = DEFAULT_TIE_BREAK,
) -> EntityImage:
    """Repaint every component with the argmax of its informative histogram.

    Background pixels are untouched; non-background pixels never become
    background (the vote domain excludes it).
    """
    out = np.zeros_like(img.labels)
    for comp in connected_components(img, connectivity):
        label = comp.majority_label(tie_break)
        for row, x0, x1 in zip(comp.rows, comp.x0s, comp.x1s):
            out[row, x0:x1] = int(label)
    return EntityImage(out)


def entity_components(
    entity: EntityImage, label: InformativeLabel, connectivity: int = 8
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, Rect]]:
    """Connected components of one informative label in the entity image."""
    mask = entity.labels == int(label)
    out = []
    for rows, x0s, x1s in label_mask(mask, connectivity):
        bbox = Rect(int(x0s.min()), int(rows.min()), int(x1s.max()), int(rows.max()) + 1)
        out.append((rows, x0s, x1s, bbox))
    return out


def save_entity_pgm(entity: EntityImage) -> bytes:
    """Debug dump: the entity image as a PGM raster of informative codes."""
    header = f"P5\n{entity.width} {entity.height}\n255\n".encode("ascii")
    return header + entity.labels.tobytes()
