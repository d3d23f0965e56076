"""Rotated bounding-box geometry: bottom edges, signed distances, crossing
tests, corners, IoU and upright crops.

Coordinates are image coordinates: x grows right, y grows DOWN.  Angles are
measured in degrees counter-clockwise-positive from the image x-axis and are
normalized to the axial range [0, 180); a box's ``w`` is its extent along the
angle direction, ``h`` the orthogonal extent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Slope guard for near-vertical bottom edges; small relative to any pixel
# quantity so it never disturbs sign tests on real boxes.
EDGE_EPSILON = 1e-6

# Below this |x2 - x1| the slope/intercept form is numerically hostile and
# the segment-side test should be preferred.
DEGENERATE_DX = 1e-3


class EmptyCropError(ValueError):
    """A crop rectangle has zero area (box entirely outside the frame)."""


def deg_to_rad(theta_deg: float) -> float:
    """Convert degrees to radians (theta * pi / 180)."""
    return theta_deg * math.pi / 180.0


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class RotatedBox:
    """Oriented detection box (cx, cy, w, h, theta_deg)."""

    cx: float
    cy: float
    w: float
    h: float
    theta_deg: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "theta_deg"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"RotatedBox.{name} must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"RotatedBox needs w > 0 and h > 0, got w={self.w}, h={self.h}")
        object.__setattr__(self, "theta_deg", self.theta_deg % 180.0)

    @property
    def center(self) -> Point2:
        return Point2(self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class EdgeLine:
    """Bottom edge of a rotated box in slope/intercept form.

    The endpoints are kept alongside (m, b): for near-vertical edges
    (|x2 - x1| < DEGENERATE_DX) the slope form is ill-conditioned and the
    segment-side test below is the reliable fallback.
    """

    m: float
    b: float
    p1: Point2
    p2: Point2

    def __post_init__(self):
        if self.p1 == self.p2:
            raise ValueError("edge endpoints must differ")
        if not (math.isfinite(self.m) and math.isfinite(self.b)):
            raise ValueError("edge slope/intercept must be finite")

    @property
    def is_degenerate(self) -> bool:
        return abs(self.p2.x - self.p1.x) < DEGENERATE_DX


@dataclass(frozen=True)
class UprightRect:
    """Axis-aligned pixel rectangle, inclusive-exclusive bounds."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise ValueError(f"empty rect ({self.x0},{self.y0},{self.x1},{self.y1})")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


def bottom_edge(box: RotatedBox, offset_to_bottom: bool = False) -> EdgeLine:
    """Bottom-edge line of ``box``.

    The endpoints sit at +/- w/2 from the center along the angle direction,
    so by construction the line passes through the box center.  With
    ``offset_to_bottom`` the whole edge is shifted by h/2 along the box's
    downhill normal (the orthogonal direction with positive image-y), i.e.
    onto the geometrically lowest edge of the box.
    """
    th = deg_to_rad(box.theta_deg)
    ct, st = math.cos(th), math.sin(th)
    ox = oy = 0.0
    if offset_to_bottom:
        nx, ny = -st, ct
        if ny < 0:  # keep the normal pointing down the image
            nx, ny = -nx, -ny
        ox, oy = nx * box.h / 2.0, ny * box.h / 2.0
    p1 = Point2(box.cx + box.w / 2.0 * ct + ox, box.cy + box.w / 2.0 * st + oy)
    p2 = Point2(box.cx - box.w / 2.0 * ct + ox, box.cy - box.w / 2.0 * st + oy)
    m = (p2.y - p1.y) / (p2.x - p1.x + EDGE_EPSILON)
    b = p1.y - m * p1.x
    return EdgeLine(m=m, b=b, p1=p1, p2=p2)


def signed_distance(p: Point2, line: EdgeLine) -> float:
    """Signed vertical distance from ``p`` to the edge line: y - (m*x + b).

    Negative means above the line in image coordinates (smaller y).
    """
    return p.y - (line.m * p.x + line.b)


def crossed(d_t: float, d_prev: float) -> bool:
    """True when consecutive signed distances changed sign or touched zero."""
    return d_t * d_prev <= 0


def side_value(p: Point2, line: EdgeLine) -> float:
    """Segment-side cross product (p2-p1) x (p-p1).

    Equals (x2-x1) times the exact signed vertical distance, so products of
    side values agree with products of signed distances; it stays
    well-conditioned for near-vertical edges where the slope form does not.
    """
    return (line.p2.x - line.p1.x) * (p.y - line.p1.y) - (line.p2.y - line.p1.y) * (p.x - line.p1.x)


def crossed_points(line: EdgeLine, p_prev: Point2, p_t: Point2) -> bool:
    """Crossing predicate on raw points.

    Uses the signed-distance product; for near-vertical edges it falls back
    to the segment-side test, whose sign products match.
    """
    if line.is_degenerate:
        return side_value(p_t, line) * side_value(p_prev, line) <= 0
    return crossed(signed_distance(p_t, line), signed_distance(p_prev, line))


def corners(box: RotatedBox) -> list[Point2]:
    """Four vertices of the box in consistent winding order.

    Local corners (+-w/2, +-h/2) rotated by theta and translated to the
    center; their mean is exactly (cx, cy).
    """
    th = deg_to_rad(box.theta_deg)
    ct, st = math.cos(th), math.sin(th)
    pts = []
    for lx, ly in ((-box.w / 2, -box.h / 2), (box.w / 2, -box.h / 2),
                   (box.w / 2, box.h / 2), (-box.w / 2, box.h / 2)):
        pts.append(Point2(box.cx + lx * ct - ly * st, box.cy + lx * st + ly * ct))
    return pts


def _polygon_area(poly: list[tuple[float, float]]) -> float:
    """Shoelace area (absolute value)."""
    n = len(poly)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def _clip_polygon(subject: list[tuple[float, float]],
                  clipper: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a convex subject by a convex clipper."""
    # Orient the clipper so its interior is the non-negative side.
    area2 = 0.0
    for i in range(len(clipper)):
        x0, y0 = clipper[i]
        x1, y1 = clipper[(i + 1) % len(clipper)]
        area2 += x0 * y1 - x1 * y0
    if area2 < 0:
        clipper = clipper[::-1]

    output = subject
    for i in range(len(clipper)):
        if not output:
            break
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % len(clipper)]
        input_pts = output
        output = []
        for j in range(len(input_pts)):
            px, py = input_pts[j]
            qx, qy = input_pts[(j + 1) % len(input_pts)]
            p_in = (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0
            q_in = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax) >= 0
            if p_in:
                output.append((px, py))
            if p_in != q_in:
                # Edge pq crosses the clip line ab.
                denom = (bx - ax) * (qy - py) - (by - ay) * (qx - px)
                if denom != 0:
                    t = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) / denom
                    output.append((px - t * (qx - px), py - t * (qy - py)))
    return output


def rotated_iou(a: RotatedBox, b: RotatedBox) -> float:
    """Intersection-over-union of two rotated boxes.

    Exact convex-polygon clipping followed by the shoelace formula; symmetric
    and 1.0 for identical boxes.
    """
    pa = [(p.x, p.y) for p in corners(a)]
    pb = [(p.x, p.y) for p in corners(b)]
    inter = _polygon_area(_clip_polygon(pa, pb))
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def enclosing_upright(box: RotatedBox, frame_w: int, frame_h: int) -> UprightRect:
    """Axis-aligned pixel rectangle enclosing the box, clamped to the frame.

    Minima are floored and maxima ceiled so no chute pixel is lost.  Raises
    EmptyCropError when the clamped rectangle has zero area.
    """
    if frame_w <= 0 or frame_h <= 0:
        raise ValueError("frame dimensions must be positive")
    pts = corners(box)
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    x0 = max(0, math.floor(min(xs)))
    y0 = max(0, math.floor(min(ys)))
    x1 = min(frame_w, math.ceil(max(xs)))
    y1 = min(frame_h, math.ceil(max(ys)))
    if x0 >= x1 or y0 >= y1:
        raise EmptyCropError(f"box at ({box.cx}, {box.cy}) falls outside the {frame_w}x{frame_h} frame")
    return UprightRect(x0, y0, x1, y1)
