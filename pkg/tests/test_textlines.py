import numpy as np
import pytest

from newsgrid.labels import InformativeLabel
from newsgrid.smoothing import EntityImage
from newsgrid.textlines import (
    LineStats,
    compute_line_stats,
    extract_text_lines,
    split_merged_lines,
)


def _entity(grid: np.ndarray) -> EntityImage:
    return EntityImage(grid.astype(np.uint8))


def _solid_text(h, w, boxes):
    grid = np.zeros((h, w), dtype=np.uint8)
    for x0, y0, x1, y1 in boxes:
        grid[y0:y1, x0:x1] = int(InformativeLabel.TEXT_LINE)
    return grid


def test_solid_rectangle_hull_area_equals_pixel_count():
    lines = extract_text_lines(_entity(_solid_text(20, 120, [(5, 5, 105, 15)])))
    assert len(lines) == 1
    line = lines[0]
    assert (line.bbox.x0, line.bbox.y0, line.bbox.x1, line.bbox.y1) == (5, 5, 105, 15)
    assert line.bbox.width == 100 and line.bbox.height == 10
    assert line.hull_area == pytest.approx(1000.0)
    assert line.pixel_count == 1000


def test_hull_area_never_below_pixel_count():
    # L-shaped component: hull strictly exceeds the pixel count.
    grid = _solid_text(20, 20, [(0, 0, 10, 5), (0, 5, 5, 10)])
    line = extract_text_lines(_entity(grid))[0]
    assert line.hull_area >= line.pixel_count


def test_all_separator_image_yields_no_lines():
    grid = np.full((10, 10), int(InformativeLabel.VERTICAL_SEPARATOR), dtype=np.uint8)
    assert extract_text_lines(_entity(grid)) == []


def test_lines_never_contain_title_or_separator_pixels():
    grid = _solid_text(30, 60, [(2, 2, 50, 10)])
    grid[20:25, 2:50] = int(InformativeLabel.TITLE)
    lines = extract_text_lines(_entity(grid))
    assert len(lines) == 1
    assert lines[0].bbox.y1 <= 20


def test_stats_empty():
    assert compute_line_stats([]) == LineStats(0.0, 0)


def test_stats_mean_of_two():
    grid = _solid_text(40, 120, [(0, 0, 80, 10), (0, 20, 120, 10 + 20)])
    lines = extract_text_lines(_entity(grid))
    stats = compute_line_stats(lines)
    assert stats.count == 2
    assert stats.mean_hull_area == pytest.approx((800 + 1200) / 2)


def test_stats_match_naive_summation_oracle():
    rng = np.random.default_rng(9)
    boxes = []
    y = 0
    for _ in range(50):
        w = int(rng.integers(20, 100))
        boxes.append((0, y, w, y + 8))
        y += 12
    lines = extract_text_lines(_entity(_solid_text(y, 110, boxes)))
    assert len(lines) == 50
    stats = compute_line_stats(lines)
    acc = 0.0
    for ln in lines:
        acc += ln.hull_area
    assert stats.mean_hull_area == pytest.approx(acc / 50)


def test_below_threshold_line_unchanged():
    grid = _solid_text(40, 120, [(0, 0, 100, 10), (0, 20, 100, 30)])
    lines = extract_text_lines(_entity(grid))
    stats = compute_line_stats(lines)
    out = split_merged_lines(lines, stats, factor=2.5)
    assert [l.bbox for l in out] == [l.bbox for l in lines]


def test_homogeneous_page_no_splits():
    boxes = [(0, 14 * i, 90, 14 * i + 10) for i in range(6)]
    lines = extract_text_lines(_entity(_solid_text(100, 100, boxes)))
    out = split_merged_lines(lines, compute_line_stats(lines), factor=2.5)
    assert len(out) == len(lines)


def test_zero_stats_disable_splitting():
    grid = _solid_text(20, 60, [(0, 0, 50, 12)])
    lines = extract_text_lines(_entity(grid))
    out = split_merged_lines(lines, LineStats(0.0, 0), factor=2.5)
    assert len(out) == 1


def test_bridged_pair_splits_and_conserves_pixels():
    # Two 100x10 lines, 4 rows apart, joined by a 1px bridge; six normal
    # lines keep the mean near a single line's area.
    boxes = [(0, 0, 100, 10), (0, 14, 100, 24)]
    boxes += [(0, 30 + 14 * i, 100, 40 + 14 * i) for i in range(6)]
    grid = _solid_text(150, 120, boxes)
    grid[10:14, 50] = int(InformativeLabel.TEXT_LINE)  # bridge
    lines = extract_text_lines(_entity(grid))
    assert len(lines) == 7  # the fused pair counts once
    stats = compute_line_stats(lines)
    out = split_merged_lines(lines, stats, factor=1.6)
    assert len(out) == 8
    total_in = sum(l.pixel_count for l in lines)
    total_out = sum(l.pixel_count for l in out)
    assert total_in == total_out
    split_boxes = sorted((l.bbox.y0, l.bbox.y1) for l in out)[:2]
    # Bridge rows split at the band center: each side gains at most 2 rows.
    assert split_boxes[0][0] == 0 and abs(split_boxes[0][1] - 10) <= 2
    assert abs(split_boxes[1][0] - 14) <= 2 and split_boxes[1][1] == 24


def test_oversized_unsplittable_line_is_flagged_not_dropped():
    # One solid giant block among small lines: no interior projection minimum.
    boxes = [(0, 50 + 14 * i, 40, 58 + 14 * i) for i in range(4)]
    grid = _solid_text(120, 120, boxes + [(0, 0, 100, 40)])
    lines = extract_text_lines(_entity(grid))
    stats = compute_line_stats(lines)
    out = split_merged_lines(lines, stats, factor=1.5)
    assert len(out) == len(lines)
    flagged = [l for l in out if l.oversized]
    assert len(flagged) == 1
    assert flagged[0].pixel_count == 100 * 40


def test_after_split_every_line_is_small_or_flagged():
    boxes = [(0, 0, 100, 10), (0, 14, 100, 24)]
    boxes += [(0, 30 + 14 * i, 100, 40 + 14 * i) for i in range(6)]
    grid = _solid_text(150, 120, boxes + [(0, 120, 100, 145)])
    grid[10:14, 50] = int(InformativeLabel.TEXT_LINE)
    lines = extract_text_lines(_entity(grid))
    stats = compute_line_stats(lines)
    threshold = 1.6 * stats.mean_hull_area
    out = split_merged_lines(lines, stats, factor=1.6)
    for line in out:
        assert line.hull_area <= threshold or line.oversized


def test_split_output_ids_are_sequential():
    boxes = [(0, 0, 100, 10), (0, 14, 100, 24)]
    grid = _solid_text(40, 120, boxes)
    lines = extract_text_lines(_entity(grid))
    out = split_merged_lines(lines, compute_line_stats(lines), factor=2.5)
    assert [l.id for l in out] == list(range(len(out)))
