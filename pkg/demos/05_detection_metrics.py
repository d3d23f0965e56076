#!/usr/bin/env python3
"""Rotated-box detection metrics on controlled examples.

Builds small prediction/ground-truth sets by hand and shows how mAP(50-95)
and precision respond to localization quality, plus the slump-logic scoring
utilities (label smoothing, mixing, soft-target cross-entropy).
"""

import math

from pourwatch import (
    ClassDistribution,
    RotatedBox,
    ScoredDetection,
    SoftLabel,
    accuracy_f1,
    map_50_95,
    mix_labels,
    precision,
    rotated_iou,
    smooth_label,
    soft_cross_entropy,
)
from pourwatch.slump import SlumpBin

gt = RotatedBox(50, 40, 30, 12, 15)
gts = {0: [gt]}

print("prediction quality vs mAP(50-95):")
for label, pred in [
    ("exact box", gt),
    ("2 px off-center", RotatedBox(52, 40, 30, 12, 15)),
    ("5 deg rotated", RotatedBox(50, 40, 30, 12, 20)),
    ("half-overlapping", RotatedBox(65, 40, 30, 12, 15)),
    ("disjoint", RotatedBox(150, 150, 30, 12, 15)),
]:
    preds = [ScoredDetection(0, pred, 0.9)]
    print(f"  {label:18s} IoU={rotated_iou(pred, gt):6.3f}  "
          f"mAP={map_50_95(preds, gts):6.3f}  precision@0.5={precision(preds, gts, 0.5):5.2f}")

print("\nclassification scoring:")
bins = list(SlumpBin)
preds = [bins[2], bins[2], bins[3], bins[1], bins[2]]
trues = [bins[2], bins[2], bins[2], bins[1], bins[3]]
acc, f1 = accuracy_f1(preds, trues)
print(f"  accuracy={acc:.2f}  macro F1={f1:.3f}  over {len(preds)} clips")

print("\nsoft-label utilities:")
hard = smooth_label(2, 0.0)
smoothed = smooth_label(2, 0.1)
mixed = mix_labels(smooth_label(2, 0.1), smooth_label(3, 0.1), 0.7)
print(f"  one-hot(2):             {hard.y}")
print(f"  smoothed (factor 0.1):  {smoothed.y}")
print(f"  mixed 0.7/0.3 with (3): {tuple(round(v, 3) for v in mixed.y)}")

p = ClassDistribution((0.1, 0.1, 0.6, 0.1, 0.1))
print(f"\n  soft cross-entropy of one-hot(2) vs {p.p}: "
      f"{soft_cross_entropy(SoftLabel(hard.y), p):.5f} (= -ln 0.6 = {-math.log(0.6):.5f})")
