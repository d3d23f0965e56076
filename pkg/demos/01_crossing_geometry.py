#!/usr/bin/env python3
"""Walk through the bottom-edge crossing test on a rotated chute box.

The chute is a rotated box (cx, cy, w, h, theta).  Its bottom edge runs
through the center along the theta direction; a tracked point crosses it
when the signed vertical distance changes sign (or touches zero) between
frames.  The optional offset flag moves the edge down by h/2, onto the
geometrically lowest edge, which is what the pipeline uses by default.
"""

from pourwatch import Point2, RotatedBox, bottom_edge, crossed, signed_distance

box = RotatedBox(cx=400, cy=300, w=220, h=90, theta_deg=12)
print(f"chute box: center=({box.cx}, {box.cy}) size=({box.w} x {box.h}) theta={box.theta_deg} deg")

edge = bottom_edge(box)
print(f"\ncenter-line edge:   p1=({edge.p1.x:7.2f}, {edge.p1.y:7.2f})  "
      f"p2=({edge.p2.x:7.2f}, {edge.p2.y:7.2f})  m={edge.m:.4f} b={edge.b:.2f}")

offset_edge = bottom_edge(box, offset_to_bottom=True)
print(f"offset bottom edge: p1=({offset_edge.p1.x:7.2f}, {offset_edge.p1.y:7.2f})  "
      f"p2=({offset_edge.p2.x:7.2f}, {offset_edge.p2.y:7.2f})  m={offset_edge.m:.4f} b={offset_edge.b:.2f}")

print("\nA point falling straight down from the box center:")
print(f"{'y':>6} {'d (center edge)':>16} {'d (offset edge)':>16}")
d_prev = signed_distance(Point2(box.cx, box.cy), offset_edge)
for step in range(0, 13):
    p = Point2(box.cx, box.cy + 4.5 * step)
    d = signed_distance(p, offset_edge)
    mark = ""
    if step > 0 and crossed(d, d_prev):
        mark = "  <-- crossing: the pour has reached the chute lip"
        d_prev = d
    else:
        d_prev = d
    print(f"{p.y:6.1f} {signed_distance(p, edge):16.2f} {d:16.2f}{mark}")
