"""Planar vector math and intersection primitives shared by the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Vec2:
    """Immutable 2D vector in meters (or meter-derived units)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite vector components ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def normalized(self) -> "Vec2":
        """Unit vector; zero vector raises (callers own the degenerate case)."""
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize zero vector")
        return Vec2(self.x / n, self.y / n)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


ZERO = Vec2(0.0, 0.0)


def unit(angle: float) -> Vec2:
    return Vec2(math.cos(angle), math.sin(angle))


def wrap_angle(theta: float) -> float:
    """Normalize an angle into [-pi, pi)."""
    return (theta + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class Segment:
    """Static line segment obstacle (walls, furniture edges)."""

    a: Vec2
    b: Vec2

    def length(self) -> float:
        return (self.b - self.a).norm()


def closest_point_on_segment(p: Vec2, seg: Segment) -> Vec2:
    ab = seg.b - seg.a
    denom = ab.norm_sq()
    if denom == 0.0:
        return seg.a
    t = (p - seg.a).dot(ab) / denom
    t = min(1.0, max(0.0, t))
    return seg.a + ab * t


def point_segment_distance(p: Vec2, seg: Segment) -> float:
    return (p - closest_point_on_segment(p, seg)).norm()


def ray_circle_intersection(origin: Vec2, direction: Vec2,
                            center: Vec2, radius: float) -> float | None:
    """Smallest t >= 0 with ||origin + t*direction - center|| = radius.

    direction must be unit length. Returns None when the ray misses.
    A ray starting inside the circle reports the exit distance.
    """
    oc = origin - center
    b = oc.dot(direction)
    c = oc.norm_sq() - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t = -b - sq
    if t >= 0.0:
        return t
    t = -b + sq
    if t >= 0.0:
        return t
    return None


def ray_segment_intersection(origin: Vec2, direction: Vec2,
                             seg: Segment) -> float | None:
    """Smallest t >= 0 where the ray crosses the segment, else None."""
    v = seg.b - seg.a
    denom = direction.x * v.y - direction.y * v.x
    if denom == 0.0:  # parallel (collinear overlap treated as miss)
        return None
    w = seg.a - origin
    t = (w.x * v.y - w.y * v.x) / denom
    u = (w.x * direction.y - w.y * direction.x) / denom
    if t >= 0.0 and 0.0 <= u <= 1.0:
        return t
    return None


def segment_intersects_rect(seg: Segment, xmin: float, ymin: float,
                            xmax: float, ymax: float) -> bool:
    """Exact segment vs axis-aligned rectangle overlap test."""
    # Trivial accept: an endpoint inside the rectangle.
    for p in (seg.a, seg.b):
        if xmin <= p.x <= xmax and ymin <= p.y <= ymax:
            return True
    # Otherwise the segment must cross one of the four edges.
    corners = (Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax), Vec2(xmin, ymax))
    edges = (Segment(corners[0], corners[1]), Segment(corners[1], corners[2]),
             Segment(corners[2], corners[3]), Segment(corners[3], corners[0]))
    for edge in edges:
        if _segments_intersect(seg, edge):
            return True
    return False


def _segments_intersect(s1: Segment, s2: Segment) -> bool:
    d1 = s1.b - s1.a
    d2 = s2.b - s2.a
    denom = d1.x * d2.y - d1.y * d2.x
    w = s2.a - s1.a
    if denom == 0.0:
        # Parallel: overlap only if collinear and ranges touch.
        if w.x * d1.y - w.y * d1.x != 0.0:
            return False
        ll = d1.norm_sq()
        if ll == 0.0:
            return point_segment_distance(s1.a, s2) == 0.0
        t0 = w.dot(d1) / ll
        t1 = (s2.b - s1.a).dot(d1) / ll
        return max(min(t0, t1), 0.0) <= min(max(t0, t1), 1.0)
    t = (w.x * d2.y - w.y * d2.x) / denom
    u = (w.x * d1.y - w.y * d1.x) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def circle_overlaps_rect(center: Vec2, radius: float, xmin: float, ymin: float,
                         xmax: float, ymax: float) -> bool:
    cx = min(max(center.x, xmin), xmax)
    cy = min(max(center.y, ymin), ymax)
    dx = center.x - cx
    dy = center.y - cy
    return dx * dx + dy * dy <= radius * radius
