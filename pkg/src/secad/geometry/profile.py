"""2D profile construction: discretize sketch loops into oriented rings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cad_seq import Arc, Circle, Face, Line, Loop, Sketch, dequantize_coord
from ..errors import DegenerateLoop, SelfIntersecting

ARC_SEGMENTS = 32
CIRCLE_SEGMENTS = 64

_AREA_EPS = 1e-12


@dataclass(frozen=True)
class Profile2D:
    """One face region: a CCW outer ring plus CW hole rings.

    Rings are (N, 2) float arrays in dequantized sketch units, implicitly
    closed.  ``outer_circle``/``hole_circles`` carry (cx, cy, r) when the
    source loop was a circle, so membership can be evaluated analytically.
    """

    outer: np.ndarray
    holes: tuple[np.ndarray, ...]
    outer_circle: tuple[float, float, float] | None
    hole_circles: tuple[tuple[float, float, float] | None, ...]

    def area(self) -> float:
        a = abs(signed_area(self.outer))
        for h in self.holes:
            a -= abs(signed_area(h))
        return a

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for (N, 2) points."""
        inside = _region_contains(points, self.outer, self.outer_circle)
        for ring, circ in zip(self.holes, self.hole_circles):
            inside &= ~_region_contains(points, ring, circ)
        return inside


def signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _region_contains(points, ring, circle):
    if circle is not None:
        cx, cy, r = circle
        d2 = (points[:, 0] - cx) ** 2 + (points[:, 1] - cy) ** 2
        return d2 <= r * r
    return points_in_ring(points, ring)


def points_in_ring(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd ray casting, vectorized over points, looped over edges."""
    x = points[:, 0]
    y = points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    x0, y0 = ring[-1]
    for x1, y1 in ring:
        straddles = (y0 > y) != (y1 > y)
        if straddles.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = (x1 - x0) * (y - y0) / (y1 - y0) + x0
            inside ^= straddles & (x < xi)
        x0, y0 = x1, y1
    return inside


def _arc_points(start, end, mid, segments):
    """Points along the circular arc from start to end through mid,
    excluding start, including end.  Collinear input degrades to a segment."""
    ax, ay = start
    bx, by = mid
    cx, cy = end
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-12:
        return [end]
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = math.hypot(ax - ux, ay - uy)
    a0 = math.atan2(ay - uy, ax - ux)
    am = math.atan2(by - uy, bx - ux)
    a1 = math.atan2(cy - uy, cx - ux)

    # choose the sweep direction that passes through the midpoint
    def ccw_delta(frm, to):
        return (to - frm) % (2.0 * math.pi)

    if ccw_delta(a0, am) <= ccw_delta(a0, a1):
        sweep = ccw_delta(a0, a1)
    else:
        sweep = -((a0 - a1) % (2.0 * math.pi))
    pts = []
    for k in range(1, segments + 1):
        ang = a0 + sweep * k / segments
        pts.append((ux + r * math.cos(ang), uy + r * math.sin(ang)))
    pts[-1] = end  # close exactly
    return pts


def discretize_loop(loop: Loop, arc_segments=ARC_SEGMENTS, circle_segments=CIRCLE_SEGMENTS):
    """Ring of 2D points (dequantized) plus the analytic circle, if any."""
    first = loop.curves[0]
    if isinstance(first, Circle):
        cx = dequantize_coord(first.center_x)
        cy = dequantize_coord(first.center_y)
        r = first.radius / 128.0
        ang = 2.0 * math.pi * np.arange(circle_segments) / circle_segments
        ring = np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1)
        return ring, (cx, cy, r)

    endpoints = []
    for curve in loop.curves:
        endpoints.append((dequantize_coord(curve.end_x), dequantize_coord(curve.end_y)))
    start = endpoints[-1]  # implicit closure
    pts = [start]
    for curve, end in zip(loop.curves, endpoints):
        if isinstance(curve, Line):
            pts.append(end)
        elif isinstance(curve, Arc):
            mid = (dequantize_coord(curve.mid_x), dequantize_coord(curve.mid_y))
            pts.extend(_arc_points(pts[-1], end, mid, arc_segments))
        else:
            raise DegenerateLoop("circle mixed into a multi-curve loop")
    pts = pts[:-1]  # last point closes back onto the start
    ring = np.asarray(pts, dtype=float)
    # drop consecutive duplicates
    keep = np.ones(len(ring), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(ring, axis=0)) > 1e-12, axis=1)
    if keep[0] and len(ring) > 1 and np.all(np.abs(ring[0] - ring[-1]) <= 1e-12):
        keep[-1] = False
    ring = ring[keep]
    return ring, None


def ring_is_simple(ring: np.ndarray) -> bool:
    """No two non-adjacent edges intersect."""
    n = len(ring)
    if n < 3:
        return False
    a = ring
    b = np.roll(ring, -1, axis=0)
    for i in range(n):
        p, r = a[i], b[i] - a[i]
        # candidate edges: all j > i + 1, excluding the wrap neighbor
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if len(js) == 0:
            continue
        q = a[js]
        s = b[js] - q
        rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        qpxr = qp[:, 0] * r[1] - qp[:, 1] * r[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / rxs
            u = qpxr / rxs
        crossing = (np.abs(rxs) > 1e-15) & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        if crossing.any():
            return False
    return True


def _build_face(face: Face, arc_segments, circle_segments) -> Profile2D:
    rings = []
    circles = []
    for li, loop in enumerate(face.loops):
        ring, circ = discretize_loop(loop, arc_segments, circle_segments)
        if len(ring) < 3:
            raise DegenerateLoop("loop collapses after dequantization")
        if li == 0 and circ is None and not ring_is_simple(ring):
            raise SelfIntersecting("outer loop intersects itself")
        if abs(signed_area(ring)) < _AREA_EPS:
            raise DegenerateLoop("loop has zero area after dequantization")
        rings.append(ring)
        circles.append(circ)
    outer, outer_circle = rings[0], circles[0]
    # normalize orientation: outer CCW, holes CW
    if signed_area(outer) < 0:
        outer = outer[::-1].copy()
    holes = []
    for ring in rings[1:]:
        holes.append(ring[::-1].copy() if signed_area(ring) > 0 else ring)
    return Profile2D(outer, tuple(holes), outer_circle, tuple(circles[1:]))


def build_profile(sketch: Sketch, arc_segments=ARC_SEGMENTS, circle_segments=CIRCLE_SEGMENTS):
    """Discretize every face of a sketch; one Profile2D per face."""
    return tuple(_build_face(face, arc_segments, circle_segments) for face in sketch.faces)
