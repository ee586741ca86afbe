"""Discrete-event wavefront propagation over a weighted triangulated region.

A wavefront section is a bundle: two flank rays plus the virtual rays between
them, advanced edge to edge with every traced ray cached. Events are keyed by
an honest per-bundle lower bound on the distance of any wavefront point at the
bundle's current front, which keeps the global event order nondecreasing while
vertex settles stay exact Dijkstra settles.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .. import geom
from ..mesh import WeightedMesh, locate_point
from ..optics import TAU_CRIT, default_budget
from ..params import DiscretizationParams, compute_params
from .sources import RayRef, SourceBook
from .spmap import CoverageRecord, PointRecord, SPMap


class WavefrontError(RuntimeError):
    """Engine failure: event budget exhausted or invariant breakage."""


class UnreachableError(WavefrontError):
    """The target was not reached by the wavefront."""


_DEAD = ("vertex", "boundary", "end")
_EVENT_NAMES = {
    "advance-tree": "SiblingStrike",
    "advance-segment": "SegmentSiblingStrike",
    "vertex": "VertexStrike",
    "critical": "CriticalIncidence",
}


@dataclass
class Bundle:
    bid: int
    source_kind: str  # "tree" | "segment"
    origin: int  # root vertex of the source family (-1 for off-vertex seeds)
    lo: RayRef
    hi: RayRef
    lo_trace: object
    hi_trace: object
    lo_k: int  # index of the current front crossing in each trace; -1 = creation front
    hi_k: int
    front_edge: int | None
    front_face_in: int | None  # face traversed to reach the front; None at creation
    front_face_out: int | None
    front_pts: tuple
    front_dists: tuple
    front_thetas: tuple  # signed incidence angles or (None, None)
    lb: float
    edge_sequence: list[int] = field(default_factory=list)
    status: str = "active"
    gen: int = 0

    def side_ref(self, side: int) -> RayRef:
        return self.lo if side == 0 else self.hi

    def side_trace(self, side: int):
        return self.lo_trace if side == 0 else self.hi_trace

    def side_k(self, side: int) -> int:
        return self.lo_k if side == 0 else self.hi_k


@dataclass
class PathResult:
    cost: float
    polyline: list
    events: int
    epsilon: float
    params: DiscretizationParams
    spmap: SPMap
    log: list
    notes: list
    stats: dict
    status: str = "ok"


class WavefrontState:
    def __init__(self, mesh: WeightedMesh, params: DiscretizationParams, trace_budget=None,
                 event_budget=None, tau_crit: float = TAU_CRIT):
        self.mesh = mesh
        self.params = params
        self.book = SourceBook(mesh, trace_budget or default_budget(mesh), tau_crit)
        self.spmap = SPMap(mesh=mesh, epsilon=params.epsilon)
        self.spmap.poly_resolver = self._record_poly
        self.spmap.vertex_resolver = self.vertex_polyline
        self.spmap.ray_resolver = self._record_ray
        self.spmap.emit_resolver = self._record_emit
        self.heap: list = []
        self.seq = 0
        self.last_key = 0.0
        self.violations = 0
        self.bundles: list[Bundle] = []
        self.settled: dict[int, float] = {}
        self.preds: dict[int, tuple] = {}
        self.log: list[dict] = []
        self.notes: list[dict] = []
        self.events = 0
        self.event_budget = event_budget
        self.target = None
        self.target_vertex = None
        self.target_faces: set[int] = set()
        self.target_edge = None
        self.target_bound = math.inf
        self._target_dirty = False
        self.done = False
        self.stats = {
            "splits": 0, "criticals": 0, "repairs": 0, "eliminations": 0,
            "bundles": 0, "rejected_criticals": 0,
        }
        self._vpoly_memo: dict[int, list] = {}
        self._prefix_memo: dict[int, list] = {}

    # -- event plumbing ---------------------------------------------------

    def push(self, key: float, kind: str, payload: tuple):
        if key < self.last_key:
            # every push happens while processing the event that caused it, so
            # a materially smaller key is a semantic regression; sub-dust dips
            # are trace roundoff and get floored to keep pops monotone
            if key < self.last_key - 1e-9 * max(1.0, self.last_key):
                self.violations += 1
            key = self.last_key
        heapq.heappush(self.heap, (key, self.seq, kind, payload))
        self.seq += 1

    def note(self, what: str, **data):
        self.notes.append({"note": what, **data})

    def _log_pop(self, key: float, kind: str, payload: tuple, stale: bool):
        rec = {"key": key, "stale": stale}
        if kind == "vertex":
            v = payload[0]
            rec.update(vertex=v, point=tuple(self.mesh.vertices[v]), bundle=-1)
        else:
            b = self.bundles[payload[0]]
            if kind.startswith("advance"):
                kind = "advance-segment" if b.source_kind == "segment" else "advance-tree"
            rec.update(bundle=b.bid, edge=b.front_edge,
                       lo=tuple(b.front_pts[0]), hi=tuple(b.front_pts[1]))
        rec["kind"] = _EVENT_NAMES.get(kind, kind)
        self.log.append(rec)

    # -- reconstruction -----------------------------------------------------

    def vertex_polyline(self, v: int) -> list:
        got = self._vpoly_memo.get(v)
        if got is not None:
            return got
        pred = self.preds[v]
        vp = tuple(self.mesh.vertices[v])
        kind = pred[0]
        if kind == "origin":
            poly = [vp]
        elif kind == "seed":
            poly = _dedup([tuple(pred[1]), vp])
        elif kind == "skeleton":
            poly = _dedup(self.vertex_polyline(pred[1]) + [vp])
        elif kind == "ray":
            poly = _dedup(self.ray_prefix(pred[1], pred[2]) + [vp])
        elif kind in ("tail", "crit_vertex"):
            poly = _dedup(self.ray_prefix(pred[1], pred[2]) + [vp])
        else:
            raise WavefrontError(f"unknown predecessor {pred!r}")
        self._vpoly_memo[v] = poly
        return poly

    def _source_prefix(self, sid: int) -> list:
        got = self._prefix_memo.get(sid)
        if got is not None:
            return got
        src = self.book.sources[sid]
        if src.kind == "vertex":
            base = self.vertex_polyline(src.vertex) if src.vertex >= 0 else [tuple(src.point)]
        else:
            if src.kind == "critical":
                cref, ck = self.book.nodes[src.node_id].creator
                entry = src.point
            else:
                cref, ck = src.creator
                entry = src.entry
            base = self.ray_prefix(cref, ck)
            if not base or geom.dist(base[-1], entry) > 1e-9:
                base = base + [tuple(entry)]
        self._prefix_memo[sid] = base
        return base

    def ray_prefix(self, ref: RayRef, k: int) -> list:
        """Polyline from the global source to crossing k of the given ray."""
        src = self.book.sources[ref.sid]
        base = list(self._source_prefix(ref.sid))
        tr = self.book.resolve(ref)
        if src.kind == "segment":
            base.append(tuple(tr.start_point))
        pts = [tuple(tr.crossings[i].point) for i in range(0, k + 1)]
        return _dedup(base + pts)

    def _record_poly(self, rec: CoverageRecord, side: int) -> list:
        ref = RayRef(*(rec.lo_ref if side == 0 else rec.hi_ref))
        k = rec.lo_k if side == 0 else rec.hi_k
        if k < 0:  # creation front: the flank point is the prefix end itself
            p = rec.p0 if side == 0 else rec.p1
            return _dedup(self._source_prefix(ref.sid) + [tuple(p)])
        return self.ray_prefix(ref, k)

    def _record_ray(self, rec: CoverageRecord, t: float):
        """Trace the record's interior ray at fraction t between the flanks;
        (prefix polyline, distance, strike point) at the record's edge."""
        lo, hi = RayRef(*rec.lo_ref), RayRef(*rec.hi_ref)
        if lo.sid != hi.sid:
            return None  # mixed-source flanks have no shared parameter line
        param = lo.param + t * (hi.param - lo.param)
        ref = RayRef(lo.sid, param)
        if rec.lo_k < 0 and rec.hi_k < 0:
            src = self.book.sources[lo.sid]
            if src.kind != "segment":
                return None
            origin, d0 = src.origin_of(param)
            poly = _dedup(self._source_prefix(lo.sid) + [tuple(origin)])
            return poly, d0, tuple(origin)
        tr = self.book.resolve(ref)
        for i, c in enumerate(tr.crossings):
            if c.edge == rec.edge:
                return self.ray_prefix(ref, i), c.dist, tuple(c.point)
        return None

    def _record_emit(self, rec: CoverageRecord) -> dict | None:
        """Flank emission data, enough to re-trace interior rays after the
        map is serialized (origins, angles, and base distances interpolate
        affinely between the flanks of one source)."""
        lo, hi = RayRef(*rec.lo_ref), RayRef(*rec.hi_ref)
        if lo.sid != hi.sid:
            return None
        src = self.book.sources[lo.sid]
        o_lo, face, dir_lo, start_edge, d0_lo = self.book.emission(lo)
        o_hi, _f, dir_hi, _e, d0_hi = self.book.emission(hi)
        ang_lo = geom.angle_of(dir_lo)
        dang = math.remainder(geom.angle_of(dir_hi) - ang_lo, 2.0 * math.pi)
        return {
            "kind": src.kind,
            "face": face,
            "edge": start_edge,
            "pre": [list(p) for p in self._source_prefix(lo.sid)],
            "lo": [o_lo[0], o_lo[1], ang_lo, d0_lo],
            "hi": [o_hi[0], o_hi[1], ang_lo + dang, d0_hi],
        }

    # -- target bound -------------------------------------------------------

    def set_target(self, q):
        self.target = tuple(q)
        loc = locate_point(self.mesh, q)
        if loc.kind == "outside":
            raise ValueError(f"target {q} lies outside the mesh")
        if loc.kind == "vertex":
            self.target_vertex = loc.index
            return
        if loc.kind == "face":
            self.target_faces = {loc.index}
        else:
            self.target_edge = loc.index
            self.target_faces = {f for f in self.mesh.edges[loc.index].faces if f is not None}

    def _refresh_target_bound(self):
        self._target_dirty = False
        cands = []
        for f in self.target_faces:
            self.spmap._face_candidates(self.mesh, f, self.target, cands)
        if self.target_edge is not None:
            self.spmap._edge_candidates(self.mesh, self.target_edge, self.target, cands)
        if cands:
            self.target_bound = min(self.target_bound, min(c[0] for c in cands))

    def _touches_target(self, faces) -> bool:
        return bool(self.target_faces) and any(
            f is not None and f in self.target_faces for f in faces
        )


# -- settle and vertex fans --------------------------------------------------


def _settle(state: WavefrontState, v: int, d: float, pred: tuple):
    if v in state.settled:
        return
    state.settled[v] = d
    state.preds[v] = pred
    state.spmap.vdist[v] = d
    if state.target_vertex is not None and v == state.target_vertex:
        state.done = True
        return
    mesh = state.mesh
    for eid in mesh.vertex_edges[v]:
        e = mesh.edges[eid]
        u = e.v if e.u == v else e.u
        if u not in state.settled:
            cand = d + e.weight * mesh.edge_length(eid)
            state.push(cand, "vertex", (u, cand, ("skeleton", v)))
    arrival = None
    if pred[0] == "ray":
        tr = state.book.resolve(pred[1])
        arrival = tr.crossings[pred[2]].face_in
    init_vertex_wavefront(state, v, d, arrival)
    if state.target_faces and any(v in mesh.faces[f].vertex_ids for f in state.target_faces):
        state._target_dirty = True


def init_vertex_wavefront(state: WavefrontState, v: int, d_v: float, exclude_face=None):
    """Spawn fan bundles from a settled vertex into every incident face."""
    mesh = state.mesh
    src = state.book.new_vertex_source(v, d_v, state.params.delta)
    for f in mesh.vertex_faces[v]:
        if f == exclude_face:
            continue
        face = mesh.faces[f]
        a, b, c = face.vertex_ids
        if a == v:
            p1, p2 = b, c
        elif b == v:
            p1, p2 = c, a
        else:
            p1, p2 = a, b
        vp = mesh.vertices[v]
        ang_lo = geom.angle_of(geom.sub(mesh.vertices[p1], vp))
        ang_hi = geom.angle_of(geom.sub(mesh.vertices[p2], vp))
        width = geom.ang_diff_ccw(ang_lo, ang_hi)
        _spawn_fan_bundle(state, src, f, ang_lo, width)


def _spawn_fan_bundle(state: WavefrontState, src, f: int, ang_lo: float, width: float):
    wedge = state.book.add_wedge(src, f, ang_lo, width)
    if wedge is None:
        state.note("wedge-empty", face=f, source=src.sid)
        return None
    lo = RayRef(src.sid, wedge.i_lo)
    hi = RayRef(src.sid, wedge.i_hi)
    lo_tr = state.book.resolve(lo)
    hi_tr = state.book.resolve(hi)
    if not lo_tr.crossings or not hi_tr.crossings:
        state.note("fan-no-crossing", face=f, source=src.sid)
        return None
    e0 = lo_tr.crossings[0].edge
    if hi_tr.crossings[0].edge != e0:
        state.note("fan-front-mismatch", face=f, source=src.sid)
        return None
    b = Bundle(
        bid=len(state.bundles), source_kind="tree", origin=src.vertex,
        lo=lo, hi=hi, lo_trace=lo_tr, hi_trace=hi_tr, lo_k=-1, hi_k=-1,
        front_edge=None, front_face_in=f, front_face_out=f,
        front_pts=(tuple(src.point), tuple(src.point)),
        front_dists=(src.d0, src.d0), front_thetas=(None, None), lb=src.d0,
    )
    state.bundles.append(b)
    state.stats["bundles"] += 1
    _advance_front(state, b, e0)
    return b


# -- front bookkeeping --------------------------------------------------------


def _front_outcome(bundle: Bundle, side: int) -> str:
    k = bundle.side_k(side)
    if k < 0:
        return "refract"  # creation front: the ray proceeds into the source face
    tr = bundle.side_trace(side)
    c = tr.crossings[k]
    if c.outcome is not None:
        return c.outcome.kind
    if tr.status == "vertex" and k == len(tr.crossings) - 1:
        return "vertex"
    if tr.status == "boundary" and k == len(tr.crossings) - 1:
        return "boundary"
    return "end"


def _next_crossing(bundle: Bundle, side: int):
    tr = bundle.side_trace(side)
    k = bundle.side_k(side) + 1
    return tr.crossings[k] if k < len(tr.crossings) else None


def _advance_front(state: WavefrontState, bundle: Bundle, edge: int) -> bool:
    """Move the shared front one edge forward; returns False if the bundle dies."""
    mesh = state.mesh
    bundle.lo_k += 1
    bundle.hi_k += 1
    clo = bundle.lo_trace.crossings[bundle.lo_k]
    chi = bundle.hi_trace.crossings[bundle.hi_k]
    prev_pts = bundle.front_pts
    w_face = mesh.faces[clo.face_in].weight
    clearance = geom.seg_seg_dist(prev_pts[0], prev_pts[1], clo.point, chi.point)
    bundle.lb = bundle.lb + w_face * clearance
    bundle.front_edge = edge
    bundle.front_face_in = clo.face_in
    bundle.front_face_out = clo.face_out
    bundle.front_pts = (tuple(clo.point), tuple(chi.point))
    bundle.front_dists = (clo.dist, chi.dist)
    bundle.front_thetas = (clo.theta_in * clo.side, chi.theta_in * chi.side)
    bundle.edge_sequence.append(edge)

    if not _write_coverage(state, bundle):
        return False

    e = mesh.edges[edge]
    for z in (e.u, e.v):
        zp = mesh.vertices[z]
        best, best_side = None, 0
        for side, c in ((0, clo), (1, chi)):
            cand = c.dist + e.weight * geom.dist(c.point, zp)
            if best is None or cand < best:
                best, best_side = cand, side
        if z not in state.settled:
            ref = bundle.side_ref(best_side)
            k = bundle.side_k(best_side)
            state.push(best, "vertex", (z, best, ("tail", ref, k)))

    dead = 0
    for side, c in ((0, clo), (1, chi)):
        out = _front_outcome(bundle, side)
        if out == "vertex":
            tr = bundle.side_trace(side)
            if tr.end_vertex is not None and tr.end_vertex not in state.settled:
                ref = bundle.side_ref(side)
                state.push(c.dist, "vertex", (tr.end_vertex, c.dist,
                                              ("ray", ref, bundle.side_k(side))))
        if out in _DEAD:
            dead += 1
    if dead == 2:
        bundle.status = "retired"
        return True
    kind = "advance-segment" if bundle.source_kind == "segment" else "advance-tree"
    state.push(bundle.lb, kind, (bundle.bid, bundle.gen))
    return True


def _write_coverage(state: WavefrontState, bundle: Bundle) -> bool:
    mesh = state.mesh
    edge = bundle.front_edge
    a, b = mesh.edge_points(edge)
    u0 = geom.project_param(bundle.front_pts[0], a, b)
    u1 = geom.project_param(bundle.front_pts[1], a, b)
    data = (
        (u0, bundle.front_pts[0], bundle.front_dists[0], bundle.front_thetas[0],
         tuple(bundle.lo), bundle.lo_k, 0),
        (u1, bundle.front_pts[1], bundle.front_dists[1], bundle.front_thetas[1],
         tuple(bundle.hi), bundle.hi_k, 1),
    )
    if u1 < u0:
        data = (data[1], data[0])
    (u0, p0, d0, th0, r0, k0, s0), (u1, p1, d1, th1, r1, k1, s1) = data
    del s0, s1
    rec = CoverageRecord(
        rid=len(state.spmap.records), edge=edge, face_served=bundle.front_face_out,
        bundle=bundle.bid, origin=bundle.origin, u0=u0, u1=u1, p0=p0, p1=p1,
        d0=d0, d1=d1, th0=th0, th1=th1, lo_ref=r0, hi_ref=r1, lo_k=k0, hi_k=k1,
    )
    state.spmap.add_record(rec)
    if state._touches_target((bundle.front_face_out, bundle.front_face_in)):
        state._target_dirty = True
    return _crossing_checks(state, rec, bundle)


def _crossing_checks(state: WavefrontState, rec: CoverageRecord, bundle: Bundle) -> bool:
    """Detect fronts crossing on a shared edge; retire the uniformly later one."""
    mesh = state.mesh
    elen = mesh.edge_length(rec.edge)
    min_olap = max(10 * mesh.tau_geom / max(elen, 1e-300), 1e-9)
    for other in state.spmap.live_on_edge(rec.edge):
        if other.rid == rec.rid or other.bundle == rec.bundle:
            continue
        if other.face_served != rec.face_served:
            continue
        lo = max(rec.u0, other.u0)
        hi = min(rec.u1, other.u1)
        if hi - lo <= min_olap:
            continue
        rd = _interp_at(rec, (lo, 0.5 * (lo + hi), hi))
        od = _interp_at(other, (lo, 0.5 * (lo + hi), hi))
        tau = [1e-9 * (1.0 + abs(x)) for x in od]
        if all(r >= o - t for r, o, t in zip(rd, od, tau)):
            bundle.status = "eliminated"
            rec.live = False
            state.stats["eliminations"] += 1
            state.note("eliminated", bundle=bundle.bid, against=other.bundle, edge=rec.edge)
            return False
        if all(o >= r + t for r, o, t in zip(rd, od, tau)):
            ob = state.bundles[other.bundle] if 0 <= other.bundle < len(state.bundles) else None
            if ob is not None and ob.status == "active":
                ob.status = "eliminated"
                state.stats["eliminations"] += 1
                state.note("eliminated", bundle=ob.bid, against=bundle.bid, edge=rec.edge)
    return True


def _interp_at(rec: CoverageRecord, us) -> list:
    span = rec.u1 - rec.u0
    out = []
    for u in us:
        g = 0.0 if span <= 0 else (u - rec.u0) / span
        out.append(rec.d0 + g * (rec.d1 - rec.d0))
    return out


# -- bundle advancement --------------------------------------------------------


def extend_bundle(state: WavefrontState, bundle: Bundle):
    """Process a sibling-strike event: advance, split, or hand off to critical."""
    lo_out = _front_outcome(bundle, 0)
    hi_out = _front_outcome(bundle, 1)

    if lo_out == "refract" and hi_out == "refract":
        nlo = _next_crossing(bundle, 0)
        nhi = _next_crossing(bundle, 1)
        if nlo is None or nhi is None:
            bundle.status = "retired"
            state.note("trace-end", bundle=bundle.bid)
            return
        if nlo.edge == nhi.edge:
            _advance_front(state, bundle, nlo.edge)
        elif bundle.source_kind == "segment":
            split_bundle_segment(state, bundle, nlo.edge, nhi.edge)
        else:
            split_bundle_tree(state, bundle, nlo.edge, nhi.edge)
        return

    refr = [s for s in (0, 1) if (lo_out, hi_out)[s] == "refract"]
    stop = [s for s in (0, 1) if (lo_out, hi_out)[s] in ("stop", "critical")]
    deadish = [s for s in (0, 1) if (lo_out, hi_out)[s] in _DEAD]

    if len(refr) == 1 and len(stop) == 1:
        state.push(bundle.lb, "critical", (bundle.bid, bundle.gen, stop[0], False))
        return
    if len(deadish) == 2:
        bundle.status = "retired"
        return
    if len(deadish) == 1:
        _repair(state, bundle, deadish[0])
        return
    # both siblings stop or run critical: probe the middle once
    _both_stopped(state, bundle, lo_out, hi_out)


def _both_stopped(state: WavefrontState, bundle: Bundle, lo_out: str, hi_out: str):
    probe = None
    if bundle.source_kind == "tree":
        atoms = state.book.span_atoms(bundle.lo, bundle.hi)
        n = state.book.atoms_count(atoms)
        if n > 0:
            probe = state.book.atoms_kth(atoms, n // 2)
    else:
        lo_i, hi_i = bundle.lo.param, bundle.hi.param
        if hi_i - lo_i > 1:
            probe = RayRef(bundle.lo.sid, (lo_i + hi_i) // 2)
    if probe is not None:
        outc, k = _probe_front_state(state, bundle, probe)
        if outc == "refract":
            _split_at_ray(state, bundle, probe, k)
            return
    for side, out in ((0, lo_out), (1, hi_out)):
        if out == "critical":
            state.push(bundle.lb, "critical", (bundle.bid, bundle.gen, side, True))
            return  # one event reforms the bundle; the other side retires with it
    bundle.status = "retired"


def _split_at_ray(state: WavefrontState, bundle: Bundle, ref: RayRef, k: int):
    """Split into halves sharing the probe ray (used when the middle refracts)."""
    tr = state.book.resolve(ref)
    for pair in ((bundle.lo, bundle.lo_trace, bundle.lo_k, ref, tr, k),
                 (ref, tr, k, bundle.hi, bundle.hi_trace, bundle.hi_k)):
        lo, lo_tr, lo_k, hi, hi_tr, hi_k = pair
        nb = Bundle(
            bid=len(state.bundles), source_kind=bundle.source_kind, origin=bundle.origin,
            lo=lo, hi=hi, lo_trace=lo_tr, hi_trace=hi_tr, lo_k=lo_k, hi_k=hi_k,
            front_edge=bundle.front_edge, front_face_in=bundle.front_face_in,
            front_face_out=bundle.front_face_out,
            front_pts=(tuple(lo_tr.crossings[lo_k].point) if lo_k >= 0 else bundle.front_pts[0],
                       tuple(hi_tr.crossings[hi_k].point) if hi_k >= 0 else bundle.front_pts[1]),
            front_dists=(lo_tr.crossings[lo_k].dist if lo_k >= 0 else bundle.front_dists[0],
                         hi_tr.crossings[hi_k].dist if hi_k >= 0 else bundle.front_dists[1]),
            front_thetas=bundle.front_thetas, lb=bundle.lb,
            edge_sequence=list(bundle.edge_sequence),
        )
        state.bundles.append(nb)
        state.stats["bundles"] += 1
        kind = "advance-segment" if nb.source_kind == "segment" else "advance-tree"
        state.push(nb.lb, kind, (nb.bid, nb.gen))
    bundle.status = "split"
    state.stats["splits"] += 1


def _probe_front_state(state: WavefrontState, bundle: Bundle, ref: RayRef):
    """Outcome of a virtual ray at the bundle's current front: (kind, crossing idx)."""
    tr = state.book.resolve(ref)
    src = state.book.sources[ref.sid]
    if bundle.front_face_in is None:
        if getattr(src, "edge", None) == bundle.front_edge:
            return "refract", -1
    for i, c in enumerate(tr.crossings):
        if c.edge == bundle.front_edge and (
            bundle.front_face_in is None or c.face_in == bundle.front_face_in
        ):
            if c.outcome is not None:
                return c.outcome.kind, i
            if tr.status == "vertex" and i == len(tr.crossings) - 1:
                return "vertex", i
            if tr.status == "boundary" and i == len(tr.crossings) - 1:
                return "boundary", i
            return "end", i
    return "dead", None


def _repair(state: WavefrontState, bundle: Bundle, dead_side: int):
    """Replace a terminated sibling with the nearest continuing virtual ray."""
    state.stats["repairs"] += 1
    if bundle.source_kind == "segment":
        lo_i, hi_i = bundle.lo.param, bundle.hi.param
        count = hi_i - lo_i - 1
        kth = lambda j: RayRef(bundle.lo.sid, lo_i + 1 + j)
    else:
        atoms = state.book.span_atoms(bundle.lo, bundle.hi)
        count = state.book.atoms_count(atoms)
        kth = lambda j: state.book.atoms_kth(atoms, j)
    step, probed = 0, 0
    j = 0
    while j < count and probed < 48:
        idx = j if dead_side == 0 else count - 1 - j
        ref = kth(idx)
        outc, k = _probe_front_state(state, bundle, ref)
        probed += 1
        if outc in ("refract", "stop", "critical"):
            _install_sibling(state, bundle, dead_side, ref, k)
            bundle.gen += 1
            kind = "advance-segment" if bundle.source_kind == "segment" else "advance-tree"
            state.push(bundle.lb, kind, (bundle.bid, bundle.gen))
            return
        step += 1
        j = (1 << step) - 1
    bundle.status = "retired"
    state.note("repair-exhausted", bundle=bundle.bid)


def _install_sibling(state: WavefrontState, bundle: Bundle, side: int, ref: RayRef, k: int):
    tr = state.book.resolve(ref)
    if k is None or k < 0:
        pt, d, th = bundle.front_pts[side], bundle.front_dists[side], None
    else:
        c = tr.crossings[k]
        pt, d, th = tuple(c.point), c.dist, c.theta_in * c.side
    if side == 0:
        bundle.lo, bundle.lo_trace, bundle.lo_k = ref, tr, k if k is not None else -1
        bundle.front_pts = (pt, bundle.front_pts[1])
        bundle.front_dists = (d, bundle.front_dists[1])
        bundle.front_thetas = (th, bundle.front_thetas[1])
    else:
        bundle.hi, bundle.hi_trace, bundle.hi_k = ref, tr, k if k is not None else -1
        bundle.front_pts = (bundle.front_pts[0], pt)
        bundle.front_dists = (bundle.front_dists[0], d)
        bundle.front_thetas = (bundle.front_thetas[0], th)


# -- splits ---------------------------------------------------------------------


def _flank_data(state: WavefrontState, bundle: Bundle, ref: RayRef, tr, k, side: int):
    """Front point/dist/theta for one flank of a (child) bundle."""
    if k is not None and k >= 0:
        c = tr.crossings[k]
        return tuple(c.point), c.dist, c.theta_in * c.side
    src = state.book.sources[ref.sid]
    if src.kind == "segment":
        origin, d0 = src.origin_of(ref.param)
        return tuple(origin), d0, None
    if src.kind == "critical":
        return tuple(src.point), src.d0, None
    return bundle.front_pts[side], bundle.front_dists[side], bundle.front_thetas[side]


def _make_child(state: WavefrontState, bundle: Bundle, lo: RayRef, lo_k: int,
                hi: RayRef, hi_k: int, advance_edge: int):
    lo_tr = state.book.resolve(lo)
    hi_tr = state.book.resolve(hi)
    p0, d0, t0 = _flank_data(state, bundle, lo, lo_tr, lo_k, 0)
    p1, d1, t1 = _flank_data(state, bundle, hi, hi_tr, hi_k, 1)
    lo_k = lo_k if lo_k is not None else -1
    hi_k = hi_k if hi_k is not None else -1
    nb = Bundle(
        bid=len(state.bundles), source_kind=bundle.source_kind, origin=bundle.origin,
        lo=lo, hi=hi, lo_trace=lo_tr, hi_trace=hi_tr, lo_k=lo_k, hi_k=hi_k,
        front_edge=bundle.front_edge, front_face_in=bundle.front_face_in,
        front_face_out=bundle.front_face_out, front_pts=(p0, p1),
        front_dists=(d0, d1), front_thetas=(t0, t1), lb=bundle.lb,
        edge_sequence=list(bundle.edge_sequence),
    )
    state.bundles.append(nb)
    state.stats["bundles"] += 1
    ok = True
    nxt_lo = _next_crossing(nb, 0)
    nxt_hi = _next_crossing(nb, 1)
    if (
        nxt_lo is not None and nxt_hi is not None
        and nxt_lo.edge == advance_edge and nxt_hi.edge == advance_edge
        and _front_outcome(nb, 0) == "refract" and _front_outcome(nb, 1) == "refract"
    ):
        ok = _advance_front(state, nb, advance_edge)
    else:
        # a flank terminates at the split face; let the event loop sort it out
        kind = "advance-segment" if nb.source_kind == "segment" else "advance-tree"
        state.push(nb.lb, kind, (nb.bid, nb.gen))
    return nb if ok else None


def split_bundle_tree(state: WavefrontState, bundle: Bundle, e_lo: int, e_hi: int):
    """Siblings exit the next face through different edges: bisect the span."""
    state.stats["splits"] += 1
    mesh = state.mesh
    f_next = _next_crossing(bundle, 0).face_in
    apex = mesh.face_other_vertex(f_next, bundle.front_edge) if bundle.front_edge is not None \
        else mesh.face_other_vertex(f_next, bundle.edge_sequence[-1])
    atoms = state.book.span_atoms(bundle.lo, bundle.hi)
    n = state.book.atoms_count(atoms)
    lo_idx, hi_idx = -1, n
    memo = {}
    while hi_idx - lo_idx > 1:
        mid = (lo_idx + hi_idx) // 2
        ref = state.book.atoms_kth(atoms, mid)
        side, k_exit = _classify_split(state, bundle, ref, f_next, e_lo, e_hi, apex)
        # the probe entered f_next one crossing before its exit crossing
        memo[mid] = (ref, side, k_exit - 1 if k_exit is not None else None)
        if side <= 0:
            lo_idx = mid
        else:
            hi_idx = mid
    if lo_idx >= 0:
        r1, _s, r1k = memo[lo_idx]
    else:
        r1, r1k = bundle.lo, bundle.lo_k
    if hi_idx < n:
        r2, _s, r2k = memo[hi_idx]
    else:
        r2, r2k = bundle.hi, bundle.hi_k
    _finish_split(state, bundle, r1, r1k, r2, r2k, e_lo, e_hi, apex)


def split_bundle_segment(state: WavefrontState, bundle: Bundle, e_lo: int, e_hi: int):
    """Parallel-ray bundle split: the boundary offset comes from similar triangles."""
    state.stats["splits"] += 1
    mesh = state.mesh
    f_next = _next_crossing(bundle, 0).face_in
    apex = mesh.face_other_vertex(f_next, bundle.front_edge)
    if bundle.lo_k >= 0:
        d_dir = bundle.lo_trace.crossings[bundle.lo_k].dir_out
    else:
        d_dir = state.book.sources[bundle.lo.sid].direction
    a_lo, a_hi = bundle.front_pts
    apex_pt = mesh.vertices[apex]
    denom = geom.cross(geom.sub(a_hi, a_lo), d_dir)
    if abs(denom) < 1e-300:
        gamma = 0.5
    else:
        gamma = geom.cross(geom.sub(apex_pt, a_lo), d_dir) / denom
    lo_i, hi_i = bundle.lo.param, bundle.hi.param
    i_split = lo_i + gamma * (hi_i - lo_i)
    near = round(i_split)
    if abs(i_split - near) < 1e-9 and lo_i < near < hi_i:
        k1 = k2 = int(near)  # apex sits on an existing ray: share it
    else:
        k1 = int(math.floor(i_split))
        k2 = k1 + 1
    k1 = min(max(k1, lo_i), hi_i)
    k2 = min(max(k2, lo_i), hi_i)
    sid = bundle.lo.sid
    r1 = RayRef(sid, k1)
    r2 = RayRef(sid, k2)
    _, r1k = _probe_front_state(state, bundle, r1)
    _, r2k = _probe_front_state(state, bundle, r2)
    _finish_split(state, bundle, r1, r1k if r1k is not None else -1,
                  r2, r2k if r2k is not None else -1, e_lo, e_hi, apex)


def _finish_split(state, bundle, r1, r1k, r2, r2k, e_lo, e_hi, apex):
    if r1k is None and r1 != bundle.lo:
        r1, r1k = bundle.lo, bundle.lo_k  # unusable probe: fall back to the flank
    if r2k is None and r2 != bundle.hi:
        r2, r2k = bundle.hi, bundle.hi_k
    _make_child(state, bundle, bundle.lo, bundle.lo_k, r1, r1k, e_lo)
    _make_child(state, bundle, r2, r2k, bundle.hi, bundle.hi_k, e_hi)
    bundle.status = "split"


def _classify_split(state, bundle, ref: RayRef, f_next: int, e_lo: int, e_hi: int, apex: int):
    tr = state.book.resolve(ref)
    for i, c in enumerate(tr.crossings):
        if c.face_in != f_next or c.edge not in (e_lo, e_hi):
            continue
        if c.outcome is None and tr.status == "vertex" and tr.end_vertex == apex:
            return 0, i
        return (-1, i) if c.edge == e_lo else (1, i)
    if tr.status == "vertex" and tr.end_vertex == apex:
        return 0, len(tr.crossings) - 1
    state.note("split-anomaly", bundle=bundle.bid, ref=(ref.sid, float(ref.param)))
    return -1, None


# -- critical incidence -----------------------------------------------------------


def _handle_critical_event(state: WavefrontState, bundle: Bundle, stop_side: int, solo: bool):
    state.stats["criticals"] += 1
    if bundle.source_kind == "segment":
        state.stats["rejected_criticals"] += 1
        state.note("critical-rejected", bundle=bundle.bid)
        _shrink_to_refracting(state, bundle, stop_side)
        return
    refr_side = 1 - stop_side
    refr_out = _front_outcome(bundle, refr_side)
    theta_lo = None
    if refr_out == "refract" and not solo:
        oc = bundle.side_trace(refr_side).crossings[bundle.side_k(refr_side)].outcome
        theta_lo = oc.theta_out
    stop_c = bundle.side_trace(stop_side).crossings[bundle.side_k(stop_side)]
    if stop_c.outcome is not None and stop_c.outcome.kind == "critical":
        b_ref = bundle.side_ref(stop_side)
        b_k = bundle.side_k(stop_side)
        y, d_y = tuple(stop_c.point), stop_c.dist
        glue = False
    else:
        b_ref, b_k, y, d_y, glue = _bisect_boundary(state, bundle, refr_side, stop_side)
    handle_critical_incidence(state, bundle, stop_side, y, d_y, b_ref, b_k,
                              theta_lo=theta_lo, glue=glue)


def _bisect_boundary(state: WavefrontState, bundle: Bundle, refr_side: int, stop_side: int):
    """Locate the grazing-incidence boundary ray between the two siblings."""
    book = state.book
    atoms = book.span_atoms(bundle.lo, bundle.hi)
    n = book.atoms_count(atoms)
    # orient the search from the refracting side toward the stopped side
    flip = refr_side == 1
    r_lo, r_hi = -1, n  # indices in refract-side-first order
    best_stop = (bundle.side_ref(stop_side), bundle.side_k(stop_side))
    while r_hi - r_lo > 1:
        mid = (r_lo + r_hi) // 2
        ref = book.atoms_kth(atoms, n - 1 - mid if flip else mid)
        outc, k = _probe_front_state(state, bundle, ref)
        if outc == "refract":
            r_lo = mid
        else:
            r_hi = mid
            if outc in ("stop", "critical"):
                best_stop = (ref, k)
    if r_lo >= 0:
        a_ref = book.atoms_kth(atoms, n - 1 - r_lo if flip else r_lo)
    else:
        a_ref = bundle.side_ref(refr_side)
    b_ref, b_k = best_stop
    node_a = book.node_of(a_ref)
    node_b = book.node_of(b_ref)
    if node_a != node_b:
        state.note("critical-glue-gap", bundle=bundle.bid)
        c = book.resolve(b_ref).crossings[b_k]
        return b_ref, b_k, tuple(c.point), c.dist, True
    sid = book.nodes[node_b].source_id
    pa, pb = float(a_ref.param), float(b_ref.param)
    last = (b_ref, b_k)
    theta_c = None
    for _ in range(80):
        pm = 0.5 * (pa + pb)
        ref = RayRef(sid, pm)
        outc, k = _probe_front_state(state, bundle, ref)
        if outc == "refract":
            pa = pm
            continue
        pb = pm
        if outc in ("stop", "critical") and k is not None:
            last = (ref, k)
            c = book.resolve(ref).crossings[k]
            theta_c = c.outcome.theta_c if c.outcome is not None else None
            if theta_c is not None and abs(c.theta_in - theta_c) <= state.book.tau_crit / 2:
                break
    b_ref, b_k = last
    c = book.resolve(b_ref).crossings[b_k]
    return b_ref, b_k, tuple(c.point), c.dist, False


def _shrink_to_refracting(state: WavefrontState, bundle: Bundle, stop_side: int):
    """Segment bundles shed their beyond-critical part instead of respawning."""
    lo_i, hi_i = bundle.lo.param, bundle.hi.param
    sid = bundle.lo.sid
    a, b = (lo_i, hi_i) if stop_side == 1 else (hi_i, lo_i)
    # invariant: a refracts, b stops
    while abs(b - a) > 1:
        m = (a + b) // 2
        outc, _k = _probe_front_state(state, bundle, RayRef(sid, m))
        if outc == "refract":
            a = m
        else:
            b = m
    ref = RayRef(sid, a)
    outc, k = _probe_front_state(state, bundle, ref)
    if outc != "refract":
        bundle.status = "retired"
        return
    _install_sibling(state, bundle, stop_side, ref, k)
    bundle.gen += 1
    state.push(bundle.lb, "advance-segment", (bundle.bid, bundle.gen))


def handle_critical_incidence(state: WavefrontState, bundle: Bundle, stop_side: int,
                              y, d_y: float, boundary_ref: RayRef, boundary_k: int,
                              theta_lo=None, glue: bool = False):
    """Spawn the along-edge critical segment and the grazing-cone fan at y."""
    mesh = state.mesh
    book = state.book
    if bundle.source_kind == "segment":
        state.note("critical-rejected", bundle=bundle.bid)
        _shrink_to_refracting(state, bundle, stop_side)
        return None
    edge = bundle.front_edge
    e = mesh.edges[edge]
    stop_c = bundle.side_trace(stop_side).crossings[bundle.side_k(stop_side)]
    f_from = stop_c.face_in
    g_to = stop_c.face_out
    if g_to is None:
        bundle.status = "retired"
        state.note("critical-boundary-edge", bundle=bundle.bid)
        return None
    w_f = mesh.faces[f_from].weight
    w_g = mesh.faces[g_to].weight
    ep = mesh.edge_points(edge)
    t_hat = geom.unit(geom.sub(ep[1], ep[0]))
    n_raw = geom.perp(t_hat)
    cen = mesh.face_centroid(g_to)
    n_hat = n_raw if geom.dot(n_raw, geom.sub(cen, y)) > 0 else geom.scale(n_raw, -1.0)
    side = 1.0 if geom.dot(stop_c.dir_in, t_hat) >= 0 else -1.0
    if theta_lo is None:
        theta_lo = math.asin(min(1.0, w_g / w_f))
        state.note("critical-fallback-angle", bundle=bundle.bid)
    theta_hi = math.pi / 2 - state.params.eps_prime
    if theta_hi < theta_lo:
        theta_hi = theta_lo

    b_node = book.node_of(boundary_ref)
    node_sign = book.nodes[b_node].sign
    attach = float(boundary_ref.param)
    if glue or isinstance(boundary_ref.param, int):
        # nudge the attach point strictly between the flanks
        attach -= (1.0 if stop_side == 1 else -1.0) * node_sign * 1e-6
    sign = -1.0 if stop_side == 1 else 1.0
    creator = (boundary_ref, boundary_k)
    src = book.new_critical_source(
        parent_node=b_node, attach_param=attach, sign=sign, point=y, edge=edge,
        face=g_to, d0=d_y, delta=state.params.delta, side=side, t_hat=t_hat,
        n_hat=n_hat, theta_hi=theta_hi, theta_lo=theta_lo, creator=creator,
        flagged="glue" if glue else None,
    )
    r2 = RayRef(src.sid, src.count - 1)
    r3 = RayRef(src.sid, 0)

    prefix = _dedup(state.ray_prefix(boundary_ref, boundary_k))
    state.spmap.point_records.append(
        PointRecord(point=tuple(y), dist=d_y, faces=(f_from, g_to), polyline=prefix)
    )
    if state._touches_target((f_from, g_to)):
        state._target_dirty = True

    # along-edge critical segment toward the far endpoint
    tdir = geom.scale(t_hat, side)
    up, vp = mesh.vertices[e.u], mesh.vertices[e.v]
    far_vertex = e.u if geom.dot(geom.sub(up, y), tdir) > geom.dot(geom.sub(vp, y), tdir) else e.v
    far_pt = mesh.vertices[far_vertex]
    seg_len = geom.dist(y, far_pt)
    d_far = d_y + e.weight * seg_len
    if far_vertex not in state.settled:
        state.push(d_far, "vertex", (far_vertex, d_far,
                                     ("crit_vertex", boundary_ref, boundary_k)))
    d_in = stop_c.dir_in
    refl = geom.unit(geom.sub(d_in, geom.scale(n_raw, 2.0 * geom.dot(d_in, n_raw))))
    seg_src = book.new_segment_source(
        edge=edge, entry=y, far=far_pt, far_vertex=far_vertex, face=f_from,
        d0=d_y, sigma=state.params.sigma, w_edge=e.weight, direction=refl,
        root_vertex=bundle.origin, creator=creator,
    )
    if seg_src is not None:
        _spawn_segment_bundle(state, seg_src)

    if src.count >= 2:
        pair = (r2, r3) if stop_side == 1 else (r3, r2)
        _spawn_creation_bundle(state, "tree", bundle.origin, pair[0], pair[1],
                               edge, g_to, (tuple(y), tuple(y)), (d_y, d_y), d_y)

    # reform the refracting flank with the joining fan ray
    refr_side = 1 - stop_side
    r_ref = bundle.side_ref(refr_side)
    r_tr = bundle.side_trace(refr_side)
    r_k = bundle.side_k(refr_side)
    if _front_outcome(bundle, refr_side) == "refract":
        if refr_side == 0:
            _spawn_reformed(state, bundle, r_ref, r_tr, r_k, r2, edge)
        else:
            _spawn_reformed(state, bundle, r2, None, -1, None, edge,
                            hi_ref=r_ref, hi_tr=r_tr, hi_k=r_k)
    bundle.status = "critical"
    return src


def _spawn_reformed(state, bundle, lo_ref, lo_tr, lo_k, r2, edge,
                    hi_ref=None, hi_tr=None, hi_k=None):
    book = state.book
    if r2 is not None:  # refracting flank on the lo side
        hi_ref, hi_tr, hi_k = r2, book.resolve(r2), -1
    else:
        lo_tr = book.resolve(lo_ref)
    lo_tr = lo_tr if lo_tr is not None else book.resolve(lo_ref)
    hi_tr = hi_tr if hi_tr is not None else book.resolve(hi_ref)

    def fp(tr, k, src_ref):
        if k >= 0:
            c = tr.crossings[k]
            return tuple(c.point), c.dist, c.theta_in * c.side
        src = book.sources[src_ref.sid]
        return tuple(src.point), src.d0, None

    p0, d0, t0 = fp(lo_tr, lo_k, lo_ref)
    p1, d1, t1 = fp(hi_tr, hi_k, hi_ref)
    nb = Bundle(
        bid=len(state.bundles), source_kind="tree", origin=bundle.origin,
        lo=lo_ref, hi=hi_ref, lo_trace=lo_tr, hi_trace=hi_tr, lo_k=lo_k, hi_k=hi_k,
        front_edge=edge, front_face_in=bundle.front_face_in,
        front_face_out=bundle.front_face_out, front_pts=(p0, p1),
        front_dists=(d0, d1), front_thetas=(t0, t1), lb=bundle.lb,
        edge_sequence=list(bundle.edge_sequence),
    )
    state.bundles.append(nb)
    state.stats["bundles"] += 1
    state.push(nb.lb, "advance-tree", (nb.bid, nb.gen))
    return nb


def _spawn_creation_bundle(state, source_kind, origin, lo, hi, edge, face_out,
                           pts, dists, lb):
    lo_tr = state.book.resolve(lo)
    hi_tr = state.book.resolve(hi)
    nb = Bundle(
        bid=len(state.bundles), source_kind=source_kind, origin=origin,
        lo=lo, hi=hi, lo_trace=lo_tr, hi_trace=hi_tr, lo_k=-1, hi_k=-1,
        front_edge=edge, front_face_in=None, front_face_out=face_out,
        front_pts=pts, front_dists=dists, front_thetas=(None, None), lb=lb,
    )
    state.bundles.append(nb)
    state.stats["bundles"] += 1
    kind = "advance-segment" if source_kind == "segment" else "advance-tree"
    state.push(nb.lb, kind, (nb.bid, nb.gen))
    return nb


def _spawn_segment_bundle(state: WavefrontState, src):
    lo = RayRef(src.sid, 0)
    hi = RayRef(src.sid, src.count - 1)
    o_lo, d_lo = src.origin_of(0)
    o_hi, d_hi = src.origin_of(src.count - 1)
    nb = _spawn_creation_bundle(state, "segment", src.root_vertex, lo, hi,
                                src.edge, src.face, (tuple(o_lo), tuple(o_hi)),
                                (d_lo, d_hi), d_lo)
    # the creation front itself is live coverage along the critical segment
    mesh = state.mesh
    a, b = mesh.edge_points(src.edge)
    u0 = geom.project_param(o_lo, a, b)
    u1 = geom.project_param(o_hi, a, b)
    rec = CoverageRecord(
        rid=len(state.spmap.records), edge=src.edge, face_served=src.face,
        bundle=nb.bid, origin=src.root_vertex,
        u0=min(u0, u1), u1=max(u0, u1),
        p0=tuple(o_lo) if u0 <= u1 else tuple(o_hi),
        p1=tuple(o_hi) if u0 <= u1 else tuple(o_lo),
        d0=d_lo if u0 <= u1 else d_hi, d1=d_hi if u0 <= u1 else d_lo,
        th0=None, th1=None, lo_ref=tuple(lo), hi_ref=tuple(hi), lo_k=-1, hi_k=-1,
    )
    state.spmap.add_record(rec)
    if state._touches_target((src.face,)):
        state._target_dirty = True
    _crossing_checks(state, rec, nb)
    return nb


# -- seeding --------------------------------------------------------------------


def _seed(state: WavefrontState, q):
    mesh = state.mesh
    loc = locate_point(mesh, q)
    if loc.kind == "outside":
        raise ValueError(f"source {q} lies outside the mesh")
    if loc.kind == "vertex":
        _settle(state, loc.index, 0.0, ("origin", None))
        return
    qt = tuple(q)
    if loc.kind == "face":
        faces = [loc.index]
    else:
        e = mesh.edges[loc.index]
        faces = [f for f in e.faces if f is not None]
        for z in (e.u, e.v):
            d = e.weight * geom.dist(mesh.vertices[z], qt)
            state.push(d, "vertex", (z, d, ("seed", qt)))
    src = state.book.new_vertex_source(-1, 0.0, state.params.delta, point=qt)
    state.spmap.point_records.append(
        PointRecord(point=qt, dist=0.0, faces=tuple(faces), polyline=[qt])
    )
    for f in faces:
        verts = mesh.faces[f].vertex_ids
        pts = [mesh.vertices[v] for v in verts]
        angs = [geom.angle_of(geom.sub(p, qt)) for p in pts]
        for i in range(3):
            j = (i + 1) % 3
            width = geom.ang_diff_ccw(angs[i], angs[j])
            if width <= 1e-12 or width >= math.pi - 1e-12:
                continue  # on-edge seeds: the collapsed wedge is the edge itself
            _spawn_fan_bundle(state, src, f, angs[i], width)
        for v, p in zip(verts, pts):
            d = mesh.faces[f].weight * geom.dist(p, qt)
            state.push(d, "vertex", (v, d, ("seed", qt)))


# -- driver ----------------------------------------------------------------------


def _dispatch(state: WavefrontState, kind: str, payload: tuple):
    if kind == "vertex":
        v, d, pred = payload
        _settle(state, v, d, pred)
        return
    bid, gen = payload[0], payload[1]
    bundle = state.bundles[bid]
    if bundle.status != "active" or bundle.gen != gen:
        return
    if kind == "critical":
        _handle_critical_event(state, bundle, payload[2], payload[3])
    else:
        extend_bundle(state, bundle)


def _is_stale(state: WavefrontState, kind: str, payload: tuple) -> bool:
    if kind == "vertex":
        return payload[0] in state.settled
    bundle = state.bundles[payload[0]]
    return bundle.status != "active" or bundle.gen != payload[1]


def _event_loop(state: WavefrontState):
    while state.heap and not state.done:
        key, _seq, kind, payload = heapq.heappop(state.heap)
        if key < state.last_key:
            state.violations += 1
        state.last_key = max(state.last_key, key)
        state.events += 1
        if state.event_budget is not None and state.events > state.event_budget:
            raise WavefrontError(
                f"event budget {state.event_budget} exhausted "
                f"({len(state.bundles)} bundles, {len(state.settled)} settled)"
            )
        stale = _is_stale(state, kind, payload)
        state._log_pop(key, kind, payload, stale)
        if stale:
            continue
        if state._target_dirty:
            state._refresh_target_bound()
        if state.target_bound < math.inf and key > state.target_bound * (1 + 1e-12) + 1e-15:
            break
        _dispatch(state, kind, payload)
    if state._target_dirty:
        state._refresh_target_bound()


def prepare_state(mesh: WeightedMesh, epsilon: float, mode: str = "practical",
                  trace_budget=None, event_budget=None) -> WavefrontState:
    params = compute_params(mesh.stats(), epsilon, mode=mode)
    return WavefrontState(mesh, params, trace_budget=trace_budget,
                          event_budget=event_budget)


def _site(mesh: WeightedMesh, q):
    """Accept a vertex id or a coordinate pair."""
    if isinstance(q, int) and not isinstance(q, bool):
        return mesh.vertices[q]
    return q


def run(mesh: WeightedMesh, source, target, epsilon: float, mode: str = "practical",
        trace_budget=None, event_budget=None) -> PathResult:
    """Approximate weighted shortest path between two points."""
    state = prepare_state(mesh, epsilon, mode=mode,
                          trace_budget=trace_budget, event_budget=event_budget)
    state.set_target(_site(mesh, target))
    _seed(state, _site(mesh, source))
    _event_loop(state)
    if state.target_vertex is not None:
        v = state.target_vertex
        if v not in state.settled:
            raise UnreachableError(
                f"target vertex {v} unreachable ({len(state.settled)} vertices settled)"
            )
        cost, poly = state.spmap.query_vertex(v, mesh)
    else:
        try:
            cost, poly = state.spmap.query(state.target, mesh)
        except ValueError as exc:
            raise UnreachableError(str(exc)) from exc
    return _result(state, cost, poly)


def build_sssp_map(mesh: WeightedMesh, source, epsilon: float, mode: str = "practical",
                   trace_budget=None, event_budget=None) -> SPMap:
    """Exhaust the wavefront and return the queryable shortest-path map."""
    state = prepare_state(mesh, epsilon, mode=mode,
                          trace_budget=trace_budget, event_budget=event_budget)
    _seed(state, _site(mesh, source))
    _event_loop(state)
    spmap = state.spmap
    spmap.run_info = _result(state, 0.0, []).stats  # lightweight diagnostics
    return spmap


def _result(state: WavefrontState, cost: float, poly: list) -> PathResult:
    stats = dict(state.stats)
    stats.update(events=state.events, settled=len(state.settled),
                 violations=state.violations, records=len(state.spmap.records))
    return PathResult(
        cost=cost, polyline=poly, events=state.events, epsilon=state.params.epsilon,
        params=state.params, spmap=state.spmap, log=state.log, notes=state.notes,
        stats=stats,
    )


def _dedup(pts, tol: float = 1e-12):
    out = []
    for p in pts:
        if not out or geom.dist(out[-1], p) > tol:
            out.append(tuple(p))
    return out
