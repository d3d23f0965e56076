"""Evaluation harness: rotated-box detection AP / mAP / precision,
classification accuracy and macro F1, and the placement-location grid.

Detection matching is greedy by descending confidence with one match per
ground truth at rotated IoU >= threshold; AP uses 101-point interpolation of
the precision-recall curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .detect import Side
from .geometry import RotatedBox, rotated_iou
from .slump import SlumpBin

MAP_THRESHOLDS = tuple((50 + 5 * k) / 100.0 for k in range(10))
DEFAULT_CONF_T = 0.25


class NoGroundTruthError(ValueError):
    """Ground truth is empty for the evaluated class."""


class NoPredictionsError(ValueError):
    """No prediction survives the confidence threshold."""


class LengthMismatchError(ValueError):
    """Paired prediction/truth lists differ in length."""


@dataclass(frozen=True)
class ScoredDetection:
    frame: int
    box: RotatedBox
    confidence: float


def _greedy_tp_flags(preds: Sequence[ScoredDetection],
                     gts: Mapping[int, Sequence[RotatedBox]],
                     iou_t: float) -> list[bool]:
    """True-positive flags in descending-confidence order."""
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken: set[tuple[int, int]] = set()
    flags = []
    for i in order:
        p = preds[i]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts.get(p.frame, ())):
            if (p.frame, j) in taken:
                continue
            v = rotated_iou(p.box, gt)
            if v >= iou_t and v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0:
            taken.add((p.frame, best_j))
            flags.append(True)
        else:
            flags.append(False)
    return flags


def average_precision(preds: Sequence[ScoredDetection],
                      gts: Mapping[int, Sequence[RotatedBox]],
                      iou_t: float) -> float:
    """101-point interpolated average precision at one IoU threshold."""
    total_gt = sum(len(v) for v in gts.values())
    if total_gt == 0:
        raise NoGroundTruthError("no ground-truth boxes")
    if not preds:
        return 0.0
    flags = _greedy_tp_flags(preds, gts, iou_t)
    precisions, recalls = [], []
    tp = fp = 0
    for flag in flags:
        tp, fp = (tp + 1, fp) if flag else (tp, fp + 1)
        precisions.append(tp / (tp + fp))
        recalls.append(tp / total_gt)
    # Precision envelope: best precision at recall >= r, scanned from the end.
    envelope = list(precisions)
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    for k in range(101):
        r = k / 100.0
        best = 0.0
        for rec, env in zip(recalls, envelope):
            if rec >= r:
                best = env
                break
        total += best
    return total / 101.0


def map_50_95(preds: Sequence[ScoredDetection],
              gts: Mapping[int, Sequence[RotatedBox]]) -> float:
    """Mean AP over IoU thresholds 0.50, 0.55, ..., 0.95."""
    vals = [average_precision(preds, gts, t) for t in MAP_THRESHOLDS]
    return sum(vals) / 10.0


def precision(preds: Sequence[ScoredDetection],
              gts: Mapping[int, Sequence[RotatedBox]],
              iou_t: float, conf_t: float = DEFAULT_CONF_T) -> float:
    """TP / (TP + FP) over predictions at or above the confidence threshold."""
    kept = [p for p in preds if p.confidence >= conf_t]
    if not kept:
        raise NoPredictionsError(f"no predictions with confidence >= {conf_t}")
    flags = _greedy_tp_flags(kept, gts, iou_t)
    tp = sum(flags)
    return tp / len(flags)


def accuracy_f1(pred_bins: Sequence[SlumpBin],
                true_bins: Sequence[SlumpBin]) -> tuple[float, float]:
    """Plain accuracy and macro F1 over the five bins.

    Bins without support (no true instances) are excluded from the macro
    mean.
    """
    if len(pred_bins) != len(true_bins):
        raise LengthMismatchError(f"{len(pred_bins)} predictions vs {len(true_bins)} truths")
    if not pred_bins:
        raise LengthMismatchError("empty inputs")
    n = len(pred_bins)
    acc = sum(p is t for p, t in zip(pred_bins, true_bins)) / n
    f1s = []
    for b in SlumpBin:
        tp = sum(1 for p, t in zip(pred_bins, true_bins) if p is b and t is b)
        fp = sum(1 for p, t in zip(pred_bins, true_bins) if p is b and t is not b)
        fn = sum(1 for p, t in zip(pred_bins, true_bins) if p is not b and t is b)
        if tp + fn == 0:  # no support
            continue
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn)
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return acc, sum(f1s) / len(f1s) if f1s else 0.0


@dataclass(frozen=True)
class SceneOutcome:
    """One scene's placement result against its truth."""

    true_side: Side | None
    detected_side: Side | None
    bin: SlumpBin

    @property
    def correct(self) -> bool:
        return self.true_side == self.detected_side


_ROW_KEYS = (Side.LEFT, Side.RIGHT, None)
_ROW_LABELS = {Side.LEFT: "Left", Side.RIGHT: "Right", None: "None"}


@dataclass
class LocationGrid:
    """Accuracy (%) per (true side, slump bin) cell, Table-style.

    Cells with no scenes are absent (None), never reported as zero.
    Marginals pool scene counts across the row or column.
    """

    counts: dict = field(default_factory=dict)  # (row, bin) -> [correct, total]

    def add(self, outcome: SceneOutcome):
        key = (outcome.true_side, outcome.bin)
        cell = self.counts.setdefault(key, [0, 0])
        cell[0] += int(outcome.correct)
        cell[1] += 1

    def cell(self, row: Side | None, b: SlumpBin) -> float | None:
        c = self.counts.get((row, b))
        return None if c is None or c[1] == 0 else 100.0 * c[0] / c[1]

    def row_avg(self, row: Side | None) -> float | None:
        correct = total = 0
        for b in SlumpBin:
            c = self.counts.get((row, b))
            if c:
                correct += c[0]
                total += c[1]
        return None if total == 0 else 100.0 * correct / total

    def col_avg(self, b: SlumpBin) -> float | None:
        correct = total = 0
        for row in _ROW_KEYS:
            c = self.counts.get((row, b))
            if c:
                correct += c[0]
                total += c[1]
        return None if total == 0 else 100.0 * correct / total

    def as_table(self) -> list[list[float | None]]:
        return [[self.cell(row, b) for b in SlumpBin] for row in _ROW_KEYS]

    def render(self) -> str:
        headers = ["", "Under 150", "150~180", "180~210", "210~240", "Over 240", "Avg"]
        lines = ["  ".join(f"{h:>10}" for h in headers)]

        def fmt(v):
            return f"{v:10.2f}" if v is not None else f"{'-':>10}"

        for row in _ROW_KEYS:
            cells = [fmt(self.cell(row, b)) for b in SlumpBin]
            lines.append("  ".join([f"{_ROW_LABELS[row]:>10}"] + cells + [fmt(self.row_avg(row))]))
        lines.append("  ".join([f"{'Avg':>10}"] + [fmt(self.col_avg(b)) for b in SlumpBin]
                               + [f"{'':>10}"]))
        return "\n".join(lines)


def location_grid(results: Iterable[SceneOutcome]) -> LocationGrid:
    grid = LocationGrid()
    for r in results:
        grid.add(r)
    return grid


@dataclass
class EvalReport:
    map_50_95: float | None = None
    precision: float | None = None
    accuracy: float | None = None
    f1_macro: float | None = None
    location_table: list | None = None

    def to_json_dict(self) -> dict:
        return {
            "map_50_95": self.map_50_95,
            "precision": self.precision,
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "location_table": self.location_table,
        }
