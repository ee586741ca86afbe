"""Small 2-D vector helpers on plain float pairs.

Hot paths in the tracer call these with tuples; keeping them free of numpy
avoids per-call array overhead.
"""

from __future__ import annotations

import math

Vec = tuple[float, float]


def sub(a: Vec, b: Vec) -> Vec:
    return (a[0] - b[0], a[1] - b[1])


def add(a: Vec, b: Vec) -> Vec:
    return (a[0] + b[0], a[1] + b[1])


def scale(a: Vec, s: float) -> Vec:
    return (a[0] * s, a[1] * s)


def dot(a: Vec, b: Vec) -> float:
    return a[0] * b[0] + a[1] * b[1]


def cross(a: Vec, b: Vec) -> float:
    return a[0] * b[1] - a[1] * b[0]


def norm(a: Vec) -> float:
    return math.hypot(a[0], a[1])


def dist(a: Vec, b: Vec) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def unit(a: Vec) -> Vec:
    n = math.hypot(a[0], a[1])
    if n == 0.0:
        raise ValueError("zero-length vector")
    return (a[0] / n, a[1] / n)


def perp(a: Vec) -> Vec:
    # counterclockwise quarter turn
    return (-a[1], a[0])


def lerp(a: Vec, b: Vec, t: float) -> Vec:
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def from_angle(theta: float) -> Vec:
    return (math.cos(theta), math.sin(theta))


def seg_point_dist(p: Vec, a: Vec, b: Vec) -> float:
    """Distance from p to segment ab."""
    ab = sub(b, a)
    denom = dot(ab, ab)
    if denom == 0.0:
        return dist(p, a)
    t = dot(sub(p, a), ab) / denom
    t = min(1.0, max(0.0, t))
    return dist(p, lerp(a, b, t))


def seg_seg_dist(a: Vec, b: Vec, c: Vec, d: Vec) -> float:
    """Distance between segments ab and cd (0 if they intersect)."""
    d1 = cross(sub(d, c), sub(a, c))
    d2 = cross(sub(d, c), sub(b, c))
    d3 = cross(sub(b, a), sub(c, a))
    d4 = cross(sub(b, a), sub(d, a))
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0
    return min(
        seg_point_dist(a, c, d),
        seg_point_dist(b, c, d),
        seg_point_dist(c, a, b),
        seg_point_dist(d, a, b),
    )


def ray_segment_hit(origin: Vec, direction: Vec, a: Vec, b: Vec):
    """Intersect ray origin + t*direction with segment ab.

    Returns (t, u) with u the segment parameter in [0, 1], or None when the
    ray is parallel to the segment or misses it. Callers filter on t.
    """
    e = sub(b, a)
    denom = cross(direction, e)
    if denom == 0.0:
        return None
    ao = sub(a, origin)
    t = cross(ao, e) / denom
    u = cross(ao, direction) / denom
    return (t, u)


def project_param(p: Vec, a: Vec, b: Vec) -> float:
    """Parameter of the projection of p onto the line ab (0 at a, 1 at b)."""
    ab = sub(b, a)
    denom = dot(ab, ab)
    if denom == 0.0:
        return 0.0
    return dot(sub(p, a), ab) / denom


def tri_area2(a: Vec, b: Vec, c: Vec) -> float:
    """Twice the signed area of triangle abc (positive when counterclockwise)."""
    return cross(sub(b, a), sub(c, a))


def angle_of(v: Vec) -> float:
    return math.atan2(v[1], v[0])


def ang_diff_ccw(a: float, b: float) -> float:
    """Counterclockwise sweep from angle a to angle b, in [0, 2*pi)."""
    d = (b - a) % (2.0 * math.pi)
    return d
