"""Independent oracles used by the unit and acceptance suites.

Everything in here is deliberately written from first principles (plain
loops, brute-force sampling) and stays independent of the library code paths
it cross-checks.
"""

from __future__ import annotations

import math

import numpy as np


def point_in_rotated_box(xs, ys, cx, cy, w, h, theta_deg):
    """Vectorized membership test for points vs a rotated box."""
    th = math.radians(theta_deg)
    ct, st = math.cos(th), math.sin(th)
    dx = xs - cx
    dy = ys - cy
    along = dx * ct + dy * st
    across = -dx * st + dy * ct
    return (np.abs(along) <= w / 2.0) & (np.abs(across) <= h / 2.0)


def mc_rotated_iou(a, b, samples: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo IoU over the joint bounding box of the two boxes."""
    rng = np.random.default_rng(seed)
    r_a = math.hypot(a.w, a.h) / 2.0
    r_b = math.hypot(b.w, b.h) / 2.0
    x_lo = min(a.cx - r_a, b.cx - r_b)
    x_hi = max(a.cx + r_a, b.cx + r_b)
    y_lo = min(a.cy - r_a, b.cy - r_b)
    y_hi = max(a.cy + r_a, b.cy + r_b)
    xs = rng.uniform(x_lo, x_hi, samples)
    ys = rng.uniform(y_lo, y_hi, samples)
    in_a = point_in_rotated_box(xs, ys, a.cx, a.cy, a.w, a.h, a.theta_deg)
    in_b = point_in_rotated_box(xs, ys, b.cx, b.cy, b.w, b.h, b.theta_deg)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def segment_side_crossed(box, p_prev, p_t) -> bool:
    """Crossing predicate by segment-side cross products.

    Recomputes the bottom-edge endpoints from the box with its own trig and
    never forms a slope, so it stays exact for near-vertical edges.
    """
    th = math.radians(box.theta_deg)
    ct, st = math.cos(th), math.sin(th)
    x1, y1 = box.cx + box.w / 2.0 * ct, box.cy + box.w / 2.0 * st
    x2, y2 = box.cx - box.w / 2.0 * ct, box.cy - box.w / 2.0 * st
    ex, ey = x2 - x1, y2 - y1

    def side(px, py):
        return ex * (py - y1) - ey * (px - x1)

    return side(p_t[0], p_t[1]) * side(p_prev[0], p_prev[1]) <= 0


def shift_correlation(patch_a: np.ndarray, patch_b: np.ndarray,
                      direction: tuple[float, float], max_shift: float,
                      step: float = 0.05) -> float:
    """Shift of patch_b relative to patch_a along a unit direction.

    Scans shift candidates, bilinearly resampling patch_a at shifted
    coordinates, and returns the candidate with maximum normalized
    cross-correlation against patch_b.  Used to validate the simulator's
    flow speed without touching the optical-flow code.
    """
    h, w = patch_a.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    margin = int(math.ceil(max_shift)) + 1
    inner = (slice(margin, h - margin), slice(margin, w - margin))
    b_in = patch_b[inner].astype(np.float64)
    b_c = b_in - b_in.mean()
    best_s, best_ncc = 0.0, -np.inf
    s = 0.0
    while s <= max_shift + 1e-9:
        sx = xs - direction[0] * s
        sy = ys - direction[1] * s
        x0 = np.clip(np.floor(sx).astype(int), 0, w - 2)
        y0 = np.clip(np.floor(sy).astype(int), 0, h - 2)
        fx = np.clip(sx - x0, 0.0, 1.0)
        fy = np.clip(sy - y0, 0.0, 1.0)
        a = patch_a.astype(np.float64)
        sampled = ((1 - fx) * (1 - fy) * a[y0, x0] + fx * (1 - fy) * a[y0, x0 + 1]
                   + (1 - fx) * fy * a[y0 + 1, x0] + fx * fy * a[y0 + 1, x0 + 1])
        s_in = sampled[inner]
        s_c = s_in - s_in.mean()
        denom = math.sqrt(float((s_c * s_c).sum()) * float((b_c * b_c).sum()))
        if denom > 0:
            ncc = float((s_c * b_c).sum()) / denom
            if ncc > best_ncc:
                best_ncc, best_s = ncc, s
        s += step
    return best_s


def naive_average_precision(preds, gts_by_frame, iou_fn, iou_t: float) -> float:
    """Reference AP: greedy confidence-ordered matching, 101-point
    interpolation, all in plain loops.

    preds: list of (frame, box, confidence); gts_by_frame: dict frame ->
    list of boxes.  iou_fn computes IoU of two boxes.
    """
    total_gt = sum(len(v) for v in gts_by_frame.values())
    if total_gt == 0:
        raise ValueError("no ground truth")
    order = sorted(range(len(preds)), key=lambda i: -preds[i][2])
    matched: set[tuple[int, int]] = set()
    tp_flags = []
    for i in order:
        frame, box, _conf = preds[i]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts_by_frame.get(frame, [])):
            if (frame, j) in matched:
                continue
            v = iou_fn(box, gt)
            if v >= iou_t and v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0:
            matched.add((frame, best_j))
            tp_flags.append(True)
        else:
            tp_flags.append(False)
    # Explicit PR curve, then 101-point interpolated area.
    precisions, recalls = [], []
    tp = fp = 0
    for flag in tp_flags:
        if flag:
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        recalls.append(tp / total_gt)
    total = 0.0
    for k in range(101):
        r = k / 100.0
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        total += best
    return total / 101.0


def naive_map_50_95(preds, gts_by_frame, iou_fn) -> float:
    vals = []
    for k in range(10):
        t = (50 + 5 * k) / 100.0
        vals.append(naive_average_precision(preds, gts_by_frame, iou_fn, t))
    return sum(vals) / 10.0
