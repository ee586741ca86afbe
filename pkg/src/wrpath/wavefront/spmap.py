"""Shortest-path map: per-edge wavefront coverage plus settled vertex data.

The engine appends coverage records as bundle fronts sweep edges; queries
interpolate along a record's front interval and append the final in-face leg.
Every candidate corresponds to an actual unfolded path, so reported costs are
honest upper bounds and the minimum over candidates is the approximation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .. import geom
from ..mesh import WeightedMesh, locate_point


@dataclass
class CoverageRecord:
    rid: int
    edge: int
    face_served: int | None  # face beyond the front; None on boundary edges
    bundle: int
    origin: int  # root vertex of the bundle's source family
    u0: float  # params along the edge (u,v), u0 <= u1
    u1: float
    p0: tuple[float, float]
    p1: tuple[float, float]
    d0: float
    d1: float
    th0: float | None  # signed incidence angles, None on creation fronts
    th1: float | None
    lo_ref: tuple | None = None  # (sid, param) of flank rays
    hi_ref: tuple | None = None
    lo_k: int = -1
    hi_k: int = -1
    live: bool = True
    poly_lo: list | None = None  # flank polylines to the front, for queries
    poly_hi: list | None = None
    emit: dict | None = None  # flank emission data; lets queries re-trace

    def interp(self, g: float):
        g = min(1.0, max(0.0, g))
        p = geom.lerp(self.p0, self.p1, g)
        d = self.d0 + g * (self.d1 - self.d0)
        return p, d

    def to_dict(self):
        return {
            "edge": self.edge,
            "face": self.face_served,
            "origin": self.origin,
            "u": [self.u0, self.u1],
            "p": [list(self.p0), list(self.p1)],
            "d": [self.d0, self.d1],
            "theta": [self.th0, self.th1],
            "rays": [list(self.lo_ref) if self.lo_ref else None,
                     list(self.hi_ref) if self.hi_ref else None],
            "k": [self.lo_k, self.hi_k],
            "poly": [self.poly_lo, self.poly_hi],
            "emit": self.emit,
        }


@dataclass
class PointRecord:
    point: tuple[float, float]
    dist: float
    faces: tuple  # faces this point can serve with a straight leg
    polyline: list | None = None


@dataclass
class SPMap:
    mesh: WeightedMesh | None = None
    epsilon: float = 0.0
    records: list = field(default_factory=list)
    edge_records: dict = field(default_factory=dict)
    point_records: list = field(default_factory=list)
    vdist: dict = field(default_factory=dict)  # vertex -> dist
    vpoly: dict = field(default_factory=dict)  # vertex -> polyline
    poly_resolver: object = None  # callable (record, side) -> polyline
    vertex_resolver: object = None  # callable (v) -> polyline
    ray_resolver: object = None  # callable (record, t) -> (poly, dist, point)
    emit_resolver: object = None  # callable (record) -> emit payload dict
    run_info: dict = field(default_factory=dict)  # build diagnostics

    # -- population -----------------------------------------------------

    def add_record(self, rec: CoverageRecord):
        self.records.append(rec)
        self.edge_records.setdefault(rec.edge, []).append(rec.rid)

    def live_on_edge(self, edge: int):
        return [self.records[r] for r in self.edge_records.get(edge, []) if self.records[r].live]

    # -- polyline access ---------------------------------------------------

    def record_poly(self, rec: CoverageRecord, side: int):
        stored = rec.poly_lo if side == 0 else rec.poly_hi
        if stored is not None:
            return stored
        if self.poly_resolver is None:
            raise ValueError("record polylines unavailable; map not finalized")
        return self.poly_resolver(rec, side)

    def vertex_polyline(self, v: int):
        got = self.vpoly.get(v)
        if got is not None:
            return got
        if self.vertex_resolver is None:
            raise KeyError(f"no polyline for vertex {v}")
        poly = self.vertex_resolver(v)
        self.vpoly[v] = poly
        return poly

    # -- queries ----------------------------------------------------------

    def query(self, q, mesh: WeightedMesh | None = None):
        """(cost, polyline) of the approximate shortest path to point q."""
        mesh = mesh or self.mesh
        if mesh is None:
            raise ValueError("mesh required for queries")
        loc = locate_point(mesh, q)
        if loc.kind == "outside":
            raise ValueError(f"query point {q} lies outside the mesh")
        if loc.kind == "vertex":
            v = loc.index
            if v not in self.vdist:
                raise ValueError(f"vertex {v} was not reached")
            return self.vdist[v], list(self.vertex_polyline(v))

        candidates = []  # (estimate, builder)
        if loc.kind == "face":
            faces = [loc.index]
        else:
            e = mesh.edges[loc.index]
            faces = [f for f in e.faces if f is not None]
            self._edge_candidates(mesh, loc.index, q, candidates)
        for f in faces:
            self._face_candidates(mesh, f, q, candidates)
        if not candidates:
            raise ValueError(f"query point {q} unreachable: no coverage on its faces")
        # estimates order the work but the answer is the cheapest honest build
        candidates.sort(key=lambda cb: cb[0])
        best = None
        for _est, build in candidates:
            poly = build()
            if poly is None or len(poly) < 1:
                continue
            cost = _polyline_cost(mesh, poly)
            if best is None or cost < best[0]:
                best = (cost, poly)
        if best is None:
            raise ValueError(f"no candidate path reaches query point {q}")
        return best

    def query_vertex(self, v: int, mesh: WeightedMesh | None = None):
        """Best (cost, polyline) to vertex v, refining the settled upper bound.

        Settled distances come from discrete ray strikes and edge tails, so they
        carry the fan-spacing error; interpolating the coverage records around v
        recovers the locally exact arrival. vdist itself is left untouched.
        """
        mesh = mesh or self.mesh
        if mesh is None:
            raise ValueError("mesh required for queries")
        if v not in self.vdist:
            raise ValueError(f"vertex {v} was not reached")
        q = tuple(mesh.vertices[v])
        candidates = []
        for f in mesh.vertex_faces[v]:
            self._face_candidates(mesh, f, q, candidates)
        for eid in mesh.vertex_edges[v]:
            self._edge_candidates(mesh, eid, q, candidates)
        best = (self.vdist[v], list(self.vertex_polyline(v)))
        for _est, build in candidates:
            poly = build()
            if poly is None or len(poly) < 1:
                continue
            cost = _polyline_cost(mesh, poly)
            if cost < best[0]:
                best = (cost, poly)
        return best

    def _face_candidates(self, mesh, f: int, q, out):
        w = mesh.faces[f].weight
        for v in mesh.faces[f].vertex_ids:
            if v in self.vdist:
                est = self.vdist[v] + w * geom.dist(mesh.vertices[v], q)
                out.append((est, self._vertex_leg_builder(mesh, v, q)))
        for pr in self.point_records:
            if f in pr.faces:
                est = pr.dist + w * geom.dist(pr.point, q)
                out.append((est, self._point_leg_builder(pr, q)))
        for eid in mesh.faces[f].edges:
            for rec in self.live_on_edge(eid):
                if rec.face_served != f:
                    continue
                g, est = _best_gamma(rec, q, w)
                out.append((est, self._record_leg_builder(mesh, rec, g, q, w)))

    def _edge_candidates(self, mesh, eid: int, q, out):
        e = mesh.edges[eid]
        w = e.weight
        for v in (e.u, e.v):
            if v in self.vdist:
                est = self.vdist[v] + w * geom.dist(mesh.vertices[v], q)
                out.append((est, self._vertex_leg_builder(mesh, v, q)))
        for rec in self.live_on_edge(eid):
            g, est = _best_gamma(rec, q, w)
            out.append((est, self._record_leg_builder(mesh, rec, g, q, w)))

    def _vertex_leg_builder(self, mesh, v, q):
        def build():
            return _extend(list(self.vertex_polyline(v)), q)

        return build

    def _point_leg_builder(self, pr: PointRecord, q):
        def build():
            base = list(pr.polyline) if pr.polyline is not None else [pr.point]
            return _extend(base, q)

        return build

    def _record_leg_builder(self, mesh, rec: CoverageRecord, g, q, w):
        def build():
            refined = self._refine_record(mesh, rec, q, w)
            if refined is not None:
                return refined
            # fallback: graft the interpolated front point onto the nearer
            # flank's polyline (good for narrow records only)
            side = 0 if g <= 0.5 else 1
            poly = list(self.record_poly(rec, side))
            p, _d = rec.interp(g)
            if poly and geom.dist(poly[-1], p) > 1e-12:
                poly = poly[:-1] + [p] if len(poly) > 1 else [p]
            return _extend(poly, q)

        return build

    def _ray_strike(self, mesh, rec: CoverageRecord, t: float):
        """Trace the record's interior ray at fraction t between the flanks.

        Returns (prefix polyline, distance, strike point) on rec.edge, or
        None when the record cannot be re-traced (mixed-source flanks) or
        the traced ray misses the edge.
        """
        if self.ray_resolver is not None:
            return self.ray_resolver(rec, t)
        em = rec.emit
        if em is None or mesh is None:
            return None
        lo, hi = em["lo"], em["hi"]
        ox = lo[0] + t * (hi[0] - lo[0])
        oy = lo[1] + t * (hi[1] - lo[1])
        d0 = lo[3] + t * (hi[3] - lo[3])
        pre = [tuple(p) for p in em["pre"]]
        if em["kind"] == "segment" and (not pre or geom.dist(pre[-1], (ox, oy)) > 1e-12):
            pre = pre + [(ox, oy)]
        if rec.lo_k < 0 and rec.hi_k < 0:
            # creation front: the emission segment is the front itself
            return pre, d0, (ox, oy)
        from ..optics import default_budget, trace_ray

        ang = lo[2] + t * (hi[2] - lo[2])
        tr = trace_ray(mesh, (ox, oy), em["face"], geom.from_angle(ang),
                       budget=default_budget(mesh), start_edge=em.get("edge"),
                       start_dist=d0)
        for i, c in enumerate(tr.crossings):
            if c.edge == rec.edge:
                poly = pre + [tuple(x.point) for x in tr.crossings[: i + 1]]
                return poly, c.dist, tuple(c.point)
        return None

    def _refine_record(self, mesh, rec: CoverageRecord, q, w):
        """Golden-section search over the record's ray parameter, tracing
        the actual intermediate ray; returns the best honest polyline."""
        probe = self._ray_strike(mesh, rec, 0.5)
        if probe is None:
            return None

        cache: dict[float, tuple] = {}

        def f(t: float) -> float:
            got = cache.get(t)
            if got is None:
                got = self._ray_strike(mesh, rec, t)
                cache[t] = got if got is not None else (None, math.inf, None)
            return got[1] + (w * geom.dist(got[2], q) if got[2] is not None else 0.0)

        inv = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = 0.0, 1.0
        c = b - inv * (b - a)
        d = a + inv * (b - a)
        for _ in range(40):
            if f(c) <= f(d):
                b, d = d, c
                c = b - inv * (b - a)
            else:
                a, c = c, d
                d = a + inv * (b - a)
        t_best = min(cache, key=f)
        got = cache[t_best]
        if got[0] is None:
            return None
        return _extend(_dedup_pts(list(got[0])), q)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        recs = []
        for rec in self.records:
            if not rec.live:
                continue
            if rec.poly_lo is None and self.poly_resolver is not None:
                rec.poly_lo = [list(p) for p in self.poly_resolver(rec, 0)]
                rec.poly_hi = [list(p) for p in self.poly_resolver(rec, 1)]
            if rec.emit is None and self.emit_resolver is not None:
                rec.emit = self.emit_resolver(rec)
            recs.append(rec.to_dict())
        verts = []
        for v, d in sorted(self.vdist.items()):
            verts.append({"v": v, "d": d, "poly": [list(p) for p in self.vertex_polyline(v)]})
        pts = [
            {
                "p": list(pr.point),
                "d": pr.dist,
                "faces": list(pr.faces),
                "poly": [list(x) for x in (pr.polyline or [pr.point])],
            }
            for pr in self.point_records
        ]
        return json.dumps(
            {"epsilon": self.epsilon, "vertices": verts, "records": recs, "points": pts},
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str, mesh: WeightedMesh | None = None) -> "SPMap":
        data = json.loads(text)
        m = cls(mesh=mesh, epsilon=data.get("epsilon", 0.0))
        for entry in data.get("vertices", []):
            m.vdist[entry["v"]] = entry["d"]
            m.vpoly[entry["v"]] = [tuple(p) for p in entry["poly"]]
        for i, rd in enumerate(data.get("records", [])):
            rec = CoverageRecord(
                rid=i,
                edge=rd["edge"],
                face_served=rd["face"],
                bundle=-1,
                origin=rd["origin"],
                u0=rd["u"][0],
                u1=rd["u"][1],
                p0=tuple(rd["p"][0]),
                p1=tuple(rd["p"][1]),
                d0=rd["d"][0],
                d1=rd["d"][1],
                th0=rd["theta"][0],
                th1=rd["theta"][1],
                lo_ref=tuple(rd["rays"][0]) if rd.get("rays", [None, None])[0] else None,
                hi_ref=tuple(rd["rays"][1]) if rd.get("rays", [None, None])[1] else None,
                lo_k=rd.get("k", [-1, -1])[0],
                hi_k=rd.get("k", [-1, -1])[1],
                poly_lo=[tuple(p) for p in rd["poly"][0]] if rd["poly"][0] else None,
                poly_hi=[tuple(p) for p in rd["poly"][1]] if rd["poly"][1] else None,
                emit=rd.get("emit"),
            )
            m.add_record(rec)
        for pd in data.get("points", []):
            m.point_records.append(
                PointRecord(
                    point=tuple(pd["p"]),
                    dist=pd["d"],
                    faces=tuple(pd["faces"]),
                    polyline=[tuple(p) for p in pd["poly"]],
                )
            )
        return m


def _best_gamma(rec: CoverageRecord, q, w: float):
    """Minimize d(g) + w*|p(g) - q| over g in [0,1]; the objective is convex."""
    lo, hi = 0.0, 1.0
    if geom.dist(rec.p0, rec.p1) < 1e-15:
        return 0.0, rec.d0 + w * geom.dist(rec.p0, q)

    def g_of(g):
        p, d = rec.interp(g)
        return d + w * geom.dist(p, q)

    for _ in range(72):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if g_of(m1) <= g_of(m2):
            hi = m2
        else:
            lo = m1
    g = 0.5 * (lo + hi)
    best = min((g_of(0.0), 0.0), (g_of(1.0), 1.0), (g_of(g), g))
    return best[1], best[0]


def _extend(poly, q):
    if not poly:
        return [tuple(q)]
    if geom.dist(poly[-1], q) > 1e-15:
        poly = poly + [tuple(q)]
    return [tuple(p) for p in poly]


def _dedup_pts(poly, tol: float = 1e-12):
    out = []
    for p in poly:
        if not out or geom.dist(out[-1], p) > tol:
            out.append(tuple(p))
    return out


def _polyline_cost(mesh: WeightedMesh, poly) -> float:
    from ..optics import path_cost

    return path_cost(mesh, poly)


def query_sssp(spmap: SPMap, mesh: WeightedMesh, q):
    """Module-level convenience wrapper around SPMap.query."""
    return spmap.query(q, mesh)
