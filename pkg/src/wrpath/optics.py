"""Snell refraction, critical-angle logic, and single-ray geodesic tracing.

All angles at edges are measured from the inward normal of the edge (the
normal pointing into the face being entered). Signed angles carry the
tangential side; the refraction law itself operates on magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geom
from .mesh import WeightedMesh

TAU_CRIT = 1e-9  # radians: band around the critical angle treated as exact incidence


class Angle:
    """Signed incidence angle from the inward edge normal, |value| <= pi/2."""

    __slots__ = ("value",)

    def __init__(self, value: float):
        if not math.isfinite(value) or abs(value) > math.pi / 2 + 1e-12:
            raise ValueError(f"angle {value} outside [-pi/2, pi/2]")
        self.value = float(value)

    def __repr__(self):
        return f"Angle({self.value!r})"

    def __eq__(self, other):
        return isinstance(other, Angle) and self.value == other.value


@dataclass(frozen=True)
class RefractionOutcome:
    kind: str  # "refract" | "critical" | "stop"
    theta_out: float | None = None  # set for refract
    theta_c: float | None = None  # set for critical and stop when defined

    @property
    def is_refract(self) -> bool:
        return self.kind == "refract"


@dataclass(frozen=True)
class TraceEvent:
    point: tuple[float, float]
    edge: int
    kind: str  # "refraction" | "critical_entry" | "critical_exit" | "vertex_strike"


@dataclass(frozen=True)
class Crossing:
    """One edge crossing of a traced ray, with full local geometry."""

    edge: int
    point: tuple[float, float]
    dist: float  # accumulated weighted distance at the crossing point
    face_in: int
    face_out: int | None  # None at a boundary edge
    theta_in: float  # unsigned incidence angle
    side: float  # +1/-1 tangential side of the incidence
    outcome: RefractionOutcome | None  # None at boundary / vertex terminal
    dir_in: tuple[float, float]
    dir_out: tuple[float, float] | None


@dataclass
class RayTrace:
    origin: object  # source descriptor (point, or a wavefront SourceRef)
    segments: list[tuple[tuple[float, float], tuple[float, float], int]]
    events: list[TraceEvent]
    cost: float
    edge_sequence: list[int]
    crossings: list[Crossing] = field(default_factory=list)
    status: str = "boundary"  # boundary | stopped | critical | vertex | budget | stuck
    end_point: tuple[float, float] | None = None
    end_vertex: int | None = None
    start_point: tuple[float, float] | None = None
    start_face: int | None = None
    start_dist: float = 0.0
    direction: tuple[float, float] | None = None

    @property
    def budget_exhausted(self) -> bool:
        return self.status == "budget"


def critical_angle(w_from: float, w_to: float) -> float | None:
    """arcsin(w_to/w_from) when entering a strictly lighter region, else None."""
    if w_from <= 0 or w_to <= 0:
        raise ValueError("weights must be positive")
    if w_from > w_to:
        return math.asin(w_to / w_from)
    return None


def refract(theta_in: float, w_in: float, w_out: float, tau_crit: float = TAU_CRIT) -> RefractionOutcome:
    """Classify incidence at an edge between weights w_in -> w_out."""
    if theta_in < 0 or theta_in > math.pi / 2 + 1e-12:
        raise ValueError(f"incidence angle {theta_in} outside [0, pi/2]")
    tc = critical_angle(w_in, w_out)
    if tc is not None:
        if abs(theta_in - tc) <= tau_crit:
            return RefractionOutcome("critical", theta_c=tc)
        if theta_in > tc:
            return RefractionOutcome("stop", theta_c=tc)
    s = (w_in / w_out) * math.sin(theta_in)
    return RefractionOutcome("refract", theta_out=math.asin(min(1.0, s)), theta_c=tc)


def default_budget(mesh: WeightedMesh, factor: int = 8) -> int:
    return max(4, factor * len(mesh.vertices) ** 2)


def _face_exit(mesh, face_id, p, d, skip_edge):
    """First edge of face_id hit by the ray p + t*d, ignoring skip_edge.

    Returns (edge_id, point, u) or None when no forward crossing exists
    (numerically stuck ray).
    """
    t_eps = 1e-12 * mesh.stats().l_max
    best = None
    f = mesh.faces[face_id]
    for ei in f.edges:
        if ei == skip_edge:
            continue
        a, b = mesh.edge_points(ei)
        hit = geom.ray_segment_hit(p, d, a, b)
        if hit is None:
            continue
        t, u = hit
        if t <= t_eps or u < -1e-9 or u > 1.0 + 1e-9:
            continue
        if best is None or t < best[0]:
            best = (t, ei, u)
    if best is None:
        return None
    t, ei, u = best
    a, b = mesh.edge_points(ei)
    q = geom.lerp(a, b, min(1.0, max(0.0, u)))
    return ei, q, u


def _edge_frame(mesh, edge_id, into_face):
    """(tangent, inward normal) of edge_id, normal pointing into into_face."""
    a, b = mesh.edge_points(edge_id)
    t_hat = geom.unit(geom.sub(b, a))
    n_hat = geom.perp(t_hat)
    opp = mesh.vertices[mesh.face_other_vertex(into_face, edge_id)]
    mid = geom.lerp(a, b, 0.5)
    if geom.dot(n_hat, geom.sub(opp, mid)) < 0.0:
        n_hat = (-n_hat[0], -n_hat[1])
    return t_hat, n_hat


def incidence_angle(mesh, edge_id, into_face, direction):
    """(theta_in unsigned, side sign) of direction against edge_id's frame."""
    t_hat, n_hat = _edge_frame(mesh, edge_id, into_face)
    sin_signed = geom.dot(direction, t_hat)
    cos_in = geom.dot(direction, n_hat)
    theta = math.atan2(abs(sin_signed), max(cos_in, 0.0))
    side = 1.0 if sin_signed >= 0.0 else -1.0
    return theta, side


def trace_ray(
    mesh: WeightedMesh,
    origin,
    face: int,
    direction,
    budget: int | None = None,
    start_edge: int | None = None,
    origin_ref=None,
    tau_crit: float = TAU_CRIT,
    start_dist: float = 0.0,
) -> RayTrace:
    """Trace one ray through the mesh until it stops, reflects critically,
    strikes a vertex or boundary, or exhausts the crossing budget."""
    if budget is None:
        budget = default_budget(mesh)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    tau = mesh.tau_geom
    p = (float(origin[0]), float(origin[1]))
    d = geom.unit((float(direction[0]), float(direction[1])))
    start = p

    segments = []
    events = []
    crossings = []
    edge_seq = []
    dist = start_dist
    f = face
    skip = start_edge
    status = "budget"
    end_point = p
    end_vertex = None

    for _ in range(budget):
        hit = _face_exit(mesh, f, p, d, skip)
        if hit is None:
            status = "stuck"
            end_point = p
            break
        ei, q, _u = hit
        w_in = mesh.faces[f].weight
        seg_len = geom.dist(p, q)
        dist += w_in * seg_len
        segments.append((p, q, f))
        edge_seq.append(ei)

        ea, eb = mesh.edge_points(ei)
        struck = None
        if geom.dist(q, ea) <= tau:
            struck = mesh.edges[ei].u
            q = (ea.x, ea.y)
        elif geom.dist(q, eb) <= tau:
            struck = mesh.edges[ei].v
            q = (eb.x, eb.y)

        nxt = mesh.other_face(ei, f)
        if struck is not None:
            crossings.append(Crossing(ei, q, dist, f, nxt, 0.0, 1.0, None, d, None))
            events.append(TraceEvent(q, ei, "vertex_strike"))
            status = "vertex"
            end_point = q
            end_vertex = struck
            break

        if nxt is None:
            # boundary frame: measure against the outward normal of the face
            t_hat, n_hat = _edge_frame(mesh, ei, f)
            sin_signed = geom.dot(d, t_hat)
            theta = math.atan2(abs(sin_signed), max(-geom.dot(d, n_hat), 0.0))
            side = 1.0 if sin_signed >= 0.0 else -1.0
            crossings.append(Crossing(ei, q, dist, f, None, theta, side, None, d, None))
            status = "boundary"
            end_point = q
            break

        theta, side = incidence_angle(mesh, ei, nxt, d)
        w_out = mesh.faces[nxt].weight
        outcome = refract(theta, w_in, w_out, tau_crit)

        if outcome.kind == "refract":
            t_hat, n_hat = _edge_frame(mesh, ei, nxt)
            s_out = math.sin(outcome.theta_out)
            c_out = math.cos(outcome.theta_out)
            d_new = geom.unit(
                (
                    side * s_out * t_hat[0] + c_out * n_hat[0],
                    side * s_out * t_hat[1] + c_out * n_hat[1],
                )
            )
            crossings.append(Crossing(ei, q, dist, f, nxt, theta, side, outcome, d, d_new))
            events.append(TraceEvent(q, ei, "refraction"))
            p, d, f, skip = q, d_new, nxt, ei
            end_point = q
            continue

        if outcome.kind == "critical":
            crossings.append(Crossing(ei, q, dist, f, nxt, theta, side, outcome, d, None))
            events.append(TraceEvent(q, ei, "critical_entry"))
            status = "critical"
            end_point = q
            break

        crossings.append(Crossing(ei, q, dist, f, nxt, theta, side, outcome, d, None))
        status = "stopped"
        end_point = q
        break

    return RayTrace(
        origin=origin_ref if origin_ref is not None else start,
        segments=segments,
        events=events,
        cost=dist,
        edge_sequence=edge_seq,
        crossings=crossings,
        status=status,
        end_point=end_point,
        end_vertex=end_vertex,
        start_point=start,
        start_face=face,
        start_dist=start_dist,
        direction=d,
    )


def _segment_feature(mesh, p, q):
    """Classify the feature containing segment pq: ('face', f) or ('edge', e).

    Raises ValueError when the segment crosses an edge interior or leaves
    the mesh; callers must pre-split polylines at crossings.
    """
    from .mesh import locate_point

    tau = mesh.tau_geom
    mid = geom.lerp(p, q, 0.5)
    loc = locate_point(mesh, mid)
    if loc.kind == "outside":
        raise ValueError(f"segment midpoint {mid} outside mesh")
    if loc.kind == "edge":
        a, b = mesh.edge_points(loc.index)
        if geom.seg_point_dist(p, a, b) <= tau and geom.seg_point_dist(q, a, b) <= tau:
            return ("edge", loc.index)
        raise ValueError(f"segment crosses interior of edge {loc.index}")
    if loc.kind == "vertex":
        raise ValueError(f"segment passes through vertex {loc.index}; pre-split required")
    face_id = loc.index
    # reject proper crossings of any edge interior
    for ei in mesh.faces[face_id].edges:
        a, b = mesh.edge_points(ei)
        d1 = geom.cross(geom.sub(b, a), geom.sub(p, a))
        d2 = geom.cross(geom.sub(b, a), geom.sub(q, a))
        d3 = geom.cross(geom.sub(q, p), geom.sub(a, p))
        d4 = geom.cross(geom.sub(q, p), geom.sub(b, p))
        scale = geom.dist(a, b) * geom.dist(p, q)
        lim = tau * max(scale, 1e-300)
        if (
            min(abs(d1), abs(d2)) > lim
            and (d1 > 0) != (d2 > 0)
            and min(abs(d3), abs(d4)) > lim
            and (d3 > 0) != (d4 > 0)
        ):
            raise ValueError(f"segment crosses interior of edge {ei}")
    return ("face", face_id)


def path_cost(mesh: WeightedMesh, polyline) -> float:
    """Weighted length of a polyline whose segments each lie in one face or
    along one edge."""
    if len(polyline) < 2:
        return 0.0
    total = 0.0
    for p, q in zip(polyline, polyline[1:]):
        p = (float(p[0]), float(p[1]))
        q = (float(q[0]), float(q[1]))
        seg_len = geom.dist(p, q)
        if seg_len <= 1e-300:
            continue
        kind, idx = _segment_feature(mesh, p, q)
        w = mesh.edges[idx].weight if kind == "edge" else mesh.faces[idx].weight
        total += w * seg_len
    return total


def _truncate_at(trace: RayTrace, seg_index: int, point, mesh) -> RayTrace:
    """Copy of trace cut at `point` on segment seg_index."""
    p0, _q0, f0 = trace.segments[seg_index]
    segments = list(trace.segments[:seg_index]) + [(p0, point, f0)]
    crossings = list(trace.crossings[:seg_index])
    events = []
    for c in crossings:
        if c.outcome is not None and c.outcome.kind == "refract":
            events.append(TraceEvent(c.point, c.edge, "refraction"))
    base = crossings[-1].dist if crossings else trace.start_dist
    cost = base + mesh.faces[f0].weight * geom.dist(p0, point)
    return RayTrace(
        origin=trace.origin,
        segments=segments,
        events=events,
        cost=cost,
        edge_sequence=[c.edge for c in crossings],
        crossings=crossings,
        status="target",
        end_point=point,
        end_vertex=None,
        start_point=trace.start_point,
        start_face=trace.start_face,
        start_dist=trace.start_dist,
        direction=trace.direction,
    )


def _target_miss(mesh, trace: RayTrace, target, target_face: int):
    """Signed perpendicular miss of `target` along the trace's pass through
    target_face, or None when the trace never enters that face."""
    for i, (a, b, f) in enumerate(trace.segments):
        if f != target_face:
            continue
        d = geom.sub(b, a)
        n = geom.norm(d)
        if n == 0.0:
            continue
        d = (d[0] / n, d[1] / n)
        along = geom.dot(geom.sub(target, a), d)
        last = i == len(trace.segments) - 1
        if -mesh.tau_geom <= along <= n + mesh.tau_geom or (last and along >= -mesh.tau_geom):
            return geom.cross(d, geom.sub(target, a)), i, along
    return None


def shoot_to_point(
    mesh: WeightedMesh,
    source,
    face: int,
    target,
    angle_lo: float,
    angle_hi: float,
    budget: int | None = None,
) -> RayTrace | None:
    """Bisection on emission angle until the trace passes within tau_geom of
    target (trace returned truncated at the target) or the bracket collapses."""
    if not angle_lo < angle_hi:
        raise ValueError("need angle_lo < angle_hi")
    target = (float(target[0]), float(target[1]))
    loc_face = None
    from .mesh import locate_point

    loc = locate_point(mesh, target)
    if loc.kind == "face":
        loc_face = loc.index
    elif loc.kind == "edge":
        loc_face = mesh.edges[loc.index].faces[0]
    elif loc.kind == "vertex":
        loc_face = mesh.vertex_faces[loc.index][0]
    else:
        return None

    def probe(angle):
        tr = trace_ray(mesh, source, face, geom.from_angle(angle), budget=budget)
        m = _target_miss(mesh, tr, target, loc_face)
        return tr, m

    tr_lo, m_lo = probe(angle_lo)
    tr_hi, m_hi = probe(angle_hi)
    if m_lo is None or m_hi is None:
        return None
    if m_lo[0] == 0.0:
        return _truncate_at(tr_lo, m_lo[1], target, mesh)
    if m_hi[0] == 0.0:
        return _truncate_at(tr_hi, m_hi[1], target, mesh)
    if (m_lo[0] > 0) == (m_hi[0] > 0):
        return None

    lo, hi = angle_lo, angle_hi
    sign_lo = m_lo[0] > 0
    best = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        tr, m = probe(mid)
        if m is not None:
            dist_to_target = abs(m[0])
            if best is None or dist_to_target < best[0]:
                best = (dist_to_target, tr, m)
            if dist_to_target <= mesh.tau_geom:
                return _truncate_at(tr, m[1], target, mesh)
        if hi - lo < 1e-14:
            break
        if m is None:
            # fell off the common edge sequence: shrink toward the lo side
            hi = mid
            continue
        if (m[0] > 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    if best is not None and best[0] <= 1e4 * mesh.tau_geom:
        return _truncate_at(best[1], best[2][1], target, mesh)
    return None
