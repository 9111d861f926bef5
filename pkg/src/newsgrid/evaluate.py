"""Scoring of predicted articles against ground truth.

Articles compare as page-tagged rectangle unions; matching is greedy
one-to-one on descending region IoU. Rates follow the detected/correct
split: %correct = 100*correct/gt and %over-seg = 100*(detected-gt)/gt,
both rounded half-up to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

from .geometry import Rect, region_area, region_intersection_area

# An article region: list of (page index, rect), rects disjoint within a region.
Region = list[tuple[int, Rect]]


class DivisionByZero(Exception):
    """No ground-truth articles: rates are undefined, not zero."""


@dataclass
class Matching:
    pairs: list[tuple[int, int, float]]  # (gt index, predicted index, iou)
    n_gt: int
    n_predicted: int

    @property
    def n_correct(self) -> int:
        return len(self.pairs)


@dataclass
class EvalReport:
    n_articles_gt: int
    n_detected: int
    n_correct: int
    pct_correct: Optional[float]
    pct_over_seg: Optional[float]
    per_page: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "articles": self.n_articles_gt,
            "detected": self.n_detected,
            "correct": self.n_correct,
            "pct_correct": self.pct_correct,
            "pct_over_seg": self.pct_over_seg,
            "per_page": self.per_page,
        }


def region_iou_paged(a: Region, b: Region) -> float:
    """IoU of two page-tagged regions; only same-page rects intersect."""
    inter = 0.0
    for page_a, ra in a:
        inter += region_intersection_area(
            [ra], [rb for page_b, rb in b if page_b == page_a]
        )
    area_a = region_area([r for _p, r in a])
    area_b = region_area([r for _p, r in b])
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return inter / union


def match_articles(
    predicted: Sequence[Region],
    gt: Sequence[Region],
    iou_threshold: float = 0.8,
) -> Matching:
    """Greedy one-to-one matching by descending IoU; pairs below the threshold
    stay unmatched. A GT article matched by exactly one prediction counts
    correct."""
    candidates = []
    for gi, greg in enumerate(gt):
        for pi, preg in enumerate(predicted):
            iou = region_iou_paged(preg, greg)
            if iou >= iou_threshold:
                candidates.append((iou, gi, pi))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))

    used_gt: set[int] = set()
    used_pred: set[int] = set()
    pairs = []
    for iou, gi, pi in candidates:
        if gi in used_gt or pi in used_pred:
            continue
        used_gt.add(gi)
        used_pred.add(pi)
        pairs.append((gi, pi, iou))
    pairs.sort()
    return Matching(pairs, n_gt=len(gt), n_predicted=len(predicted))


def _round2(value: float) -> float:
    return float(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def compute_rates(
    n_articles_gt: int,
    n_detected: int,
    n_correct: int,
    per_page: Optional[list[dict]] = None,
) -> EvalReport:
    """Percentages from the raw counts. Raises on an empty ground truth."""
    if n_articles_gt == 0:
        raise DivisionByZero("ground truth contains no articles")
    if n_correct > n_detected:
        raise ValueError("correct count cannot exceed detected count")
    pct_correct = _round2(100.0 * n_correct / n_articles_gt)
    pct_over_seg = _round2(100.0 * (n_detected - n_articles_gt) / n_articles_gt)
    return EvalReport(
        n_articles_gt=n_articles_gt,
        n_detected=n_detected,
        n_correct=n_correct,
        pct_correct=pct_correct,
        pct_over_seg=pct_over_seg,
        per_page=per_page or [],
    )


def evaluate_issue(
    predicted: Sequence[Region],
    gt: Sequence[Region],
    iou_threshold: float = 0.8,
) -> tuple[Matching, EvalReport]:
    matching = match_articles(predicted, gt, iou_threshold)
    report = compute_rates(matching.n_gt, matching.n_predicted, matching.n_correct)
    return matching, report


def aggregate_reports(parts: Sequence[tuple[str, Matching]]) -> EvalReport:
    """Combine per-issue matchings into one report with a per-issue breakdown.

    Cross-page articles count once, attributed to the issue they belong to.
    """
    n_gt = sum(m.n_gt for _n, m in parts)
    n_det = sum(m.n_predicted for _n, m in parts)
    n_cor = sum(m.n_correct for _n, m in parts)
    per_page = []
    for name, m in parts:
        entry = {
            "name": name,
            "articles": m.n_gt,
            "detected": m.n_predicted,
            "correct": m.n_correct,
        }
        if m.n_gt > 0:
            entry["pct_correct"] = _round2(100.0 * m.n_correct / m.n_gt)
            entry["pct_over_seg"] = _round2(100.0 * (m.n_predicted - m.n_gt) / m.n_gt)
        per_page.append(entry)
    report = compute_rates(n_gt, n_det, n_cor)
    report.per_page = per_page
    return report


TABLE_HEADER = "#articles #detected #correct %correct %over-seg"


def format_table(report: EvalReport) -> str:
    """Aligned-column summary table, one row of totals under the header."""
    cols = TABLE_HEADER.split()
    values = [
        str(report.n_articles_gt),
        str(report.n_detected),
        str(report.n_correct),
        f"{report.pct_correct:.2f}",
        f"{report.pct_over_seg:.2f}",
    ]
    widths = [max(len(c), len(v)) for c, v in zip(cols, values)]
    head = " ".join(c.rjust(w) for c, w in zip(cols, widths))
    row = " ".join(v.rjust(w) for v, w in zip(values, widths))
    return head + "\n" + row
