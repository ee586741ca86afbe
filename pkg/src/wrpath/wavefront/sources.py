"""Ray sources, virtual ray references, and the per-root tree of rays.

Rays are never materialized eagerly: a RayRef names a source and a parameter
(grid index, or a fractional parameter for bisected boundary rays) and is
resolved to a cached trace on demand. The tree of rays orders every ray
spawned from one vertex's wavefront; in-order position tuples let bundle
splits binary-search the range between two siblings without enumerating it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .. import geom
from ..optics import trace_ray

_F_TWO_PI = Fraction(2 * math.pi)
_GOLDEN = 0.6180339887498949


class RayRef(NamedTuple):
    sid: int  # source id
    param: object  # int grid index, or float for bisected boundary rays


@dataclass
class FaceWedge:
    face: int
    i_lo: int
    i_hi: int  # inclusive; i_hi < i_lo means empty
    anchor_angle: float  # angle of ray i_lo
    delta: float

    def angle_of(self, index) -> float:
        # relative to the per-wedge anchor so huge grid indices stay accurate
        return self.anchor_angle + float(index - self.i_lo) * self.delta


@dataclass
class VertexSource:
    kind = "vertex"
    sid: int
    vertex: int
    point: tuple[float, float]
    d0: float
    delta: float
    tree_id: int
    node_id: int
    wedges: list[FaceWedge] = field(default_factory=list)

    def wedge_of(self, param) -> FaceWedge:
        # exact containment first: wedges of adjacent faces abut on the grid,
        # so a fuzzy match here would hand the ray to the wrong face
        for w in self.wedges:
            if w.i_lo <= param <= w.i_hi:
                return w
        for w in self.wedges:  # bisected float params may sit a hair outside
            if w.i_lo - 1 < param < w.i_hi + 1:
                return w
        raise KeyError(f"ray param {param} outside all wedges of vertex {self.vertex}")


@dataclass
class CriticalSource:
    kind = "critical"
    sid: int
    point: tuple[float, float]
    edge: int
    face: int  # face the fan shoots into
    d0: float
    delta: float
    tree_id: int
    node_id: int
    side: float  # tangential sign of the critical direction
    t_hat: tuple[float, float]
    n_hat: tuple[float, float]  # normal into `face`
    theta_hi: float  # angle of ray 0 (nearest the edge): pi/2 - eps'
    theta_lo: float  # angle of the last ray (parallel to the refracted neighbor)
    count: int  # grid ray count, >= 1; index count-1 sits exactly at theta_lo
    flagged: str | None = None  # diagnostics: "no-refracting-neighbor" etc.

    def angle_from_normal(self, param) -> float:
        last = self.count - 1
        if param >= last:
            return self.theta_lo  # final ray sits exactly at the neighbor angle
        a = self.theta_hi - float(param) * self.delta
        return max(a, self.theta_lo)

    def direction_of(self, param) -> tuple[float, float]:
        a = self.angle_from_normal(param)
        s, c = math.sin(a) * self.side, math.cos(a)
        return geom.unit(
            (s * self.t_hat[0] + c * self.n_hat[0], s * self.t_hat[1] + c * self.n_hat[1])
        )


@dataclass
class SegmentSource:
    kind = "segment"
    sid: int
    edge: int
    entry: tuple[float, float]  # critical point of entry y'
    far: tuple[float, float]  # edge endpoint v'' the segment runs toward
    far_vertex: int
    face: int  # face the reflected rays travel through
    d0: float
    sigma: float
    w_edge: float
    direction: tuple[float, float]  # shared unit direction of all reflected rays
    along: tuple[float, float]  # unit vector entry -> far
    length: float
    count: int  # grid rays at offsets i*sigma, i in [0, count)
    root_vertex: int = -1
    creator: tuple | None = None  # (RayRef, crossing index) that entered critically

    def origin_of(self, param):
        off = float(param) * self.sigma
        return (
            self.entry[0] + off * self.along[0],
            self.entry[1] + off * self.along[1],
        ), self.d0 + self.w_edge * off


@dataclass
class TreeNode:
    nid: int
    tree_id: int
    source_id: int
    parent: int | None
    attach_param: float | None  # parameter in the parent where this child hangs
    sign: float  # +1 when increasing param = increasing global order
    children: list[tuple[float, int]] = field(default_factory=list)  # (attach, nid)
    # creation provenance for path reconstruction
    creator: tuple | None = None  # (RayRef, crossing index)


@dataclass
class RayTree:
    tree_id: int
    root_vertex: int
    root_node: int


class SourceBook:
    """Registry of sources, trees, and the trace cache."""

    def __init__(self, mesh, budget: int, tau_crit: float = 1e-9):
        self.mesh = mesh
        self.budget = budget
        self.tau_crit = tau_crit
        self.sources: list = []
        self.trees: list[RayTree] = []
        self.nodes: list[TreeNode] = []
        self._trace_cache: dict[RayRef, object] = {}
        self._subtree_counts: dict[int, int] = {}

    # -- construction -------------------------------------------------

    def new_vertex_source(self, vertex: int, d0: float, delta: float, point=None) -> VertexSource:
        tree_id = len(self.trees)
        nid = len(self.nodes)
        sid = len(self.sources)
        if point is None:
            point = self.mesh.vertices[vertex]
        src = VertexSource(
            sid=sid,
            vertex=vertex,
            point=tuple(point),
            d0=d0,
            delta=delta,
            tree_id=tree_id,
            node_id=nid,
        )
        self.sources.append(src)
        self.nodes.append(TreeNode(nid, tree_id, sid, None, None, 1.0))
        self.trees.append(RayTree(tree_id, vertex, nid))
        return src

    def new_critical_source(
        self,
        parent_node: int,
        attach_param: float,
        sign: float,
        point,
        edge: int,
        face: int,
        d0: float,
        delta: float,
        side: float,
        t_hat,
        n_hat,
        theta_hi: float,
        theta_lo: float,
        creator=None,
        flagged=None,
    ) -> CriticalSource:
        parent = self.nodes[parent_node]
        tree_id = parent.tree_id
        nid = len(self.nodes)
        sid = len(self.sources)
        span = max(0.0, theta_hi - theta_lo)
        count = max(1, int(math.floor(span / delta)) + 1)
        src = CriticalSource(
            sid=sid,
            point=tuple(point),
            edge=edge,
            face=face,
            d0=d0,
            delta=delta,
            tree_id=tree_id,
            node_id=nid,
            side=side,
            t_hat=t_hat,
            n_hat=n_hat,
            theta_hi=theta_hi,
            theta_lo=theta_lo,
            count=count,
            flagged=flagged,
        )
        self.sources.append(src)
        node = TreeNode(nid, tree_id, sid, parent_node, attach_param, sign, creator=creator)
        self.nodes.append(node)
        parent.children.append((attach_param, nid))
        parent.children.sort(key=lambda ac: self.nodes[ac[1]].oriented_attach(parent.sign))
        self._subtree_counts.clear()
        return src

    def new_segment_source(
        self, edge, entry, far, far_vertex, face, d0, sigma, w_edge, direction, root_vertex, creator=None
    ) -> SegmentSource | None:
        length = geom.dist(entry, far)
        if length <= sigma * 1.5:
            return None
        count = int(math.floor((length - sigma) / sigma + 1e-12)) + 1
        if count < 2:
            return None
        sid = len(self.sources)
        src = SegmentSource(
            sid=sid,
            edge=edge,
            entry=tuple(entry),
            far=tuple(far),
            far_vertex=far_vertex,
            face=face,
            d0=d0,
            sigma=sigma,
            w_edge=w_edge,
            direction=geom.unit(direction),
            along=geom.unit(geom.sub(far, entry)),
            length=length,
            count=count,
            root_vertex=root_vertex,
            creator=creator,
        )
        self.sources.append(src)
        return src

    # -- wedges for vertex fans -----------------------------------------

    def add_wedge(self, src: VertexSource, face: int, ang_lo: float, width: float):
        """Register the grid-index interval of src's rays inside one face."""
        delta = src.delta
        base = math.fmod(_GOLDEN * (src.vertex + 1), 1.0) * delta
        lo_real = (ang_lo - base) / delta
        i_lo = int(math.floor(lo_real)) + 1
        i_hi = int(math.floor(lo_real + width / delta - 1e-12))
        if i_hi < i_lo:
            return None
        anchor = base + float((i_lo * Fraction(delta)) % _F_TWO_PI)
        # place the anchor angle in ang_lo's winding
        while anchor < ang_lo - 1e-9:
            anchor += 2 * math.pi
        while anchor > ang_lo + 2 * math.pi:
            anchor -= 2 * math.pi
        wedge = FaceWedge(face=face, i_lo=i_lo, i_hi=i_hi, anchor_angle=anchor, delta=delta)
        src.wedges.append(wedge)
        return wedge

    # -- ray resolution --------------------------------------------------

    def emission(self, ref: RayRef):
        """(origin point, face, unit direction, start_edge, base distance)."""
        src = self.sources[ref.sid]
        if src.kind == "vertex":
            wedge = src.wedge_of(ref.param)
            ang = wedge.angle_of(ref.param)
            return src.point, wedge.face, geom.from_angle(ang), None, src.d0
        if src.kind == "critical":
            return src.point, src.face, src.direction_of(ref.param), src.edge, src.d0
        origin, d0 = src.origin_of(ref.param)
        return origin, src.face, src.direction, src.edge, d0

    def resolve(self, ref: RayRef):
        tr = self._trace_cache.get(ref)
        if tr is None:
            origin, face, direction, start_edge, d0 = self.emission(ref)
            tr = trace_ray(
                self.mesh,
                origin,
                face,
                direction,
                budget=self.budget,
                start_edge=start_edge,
                origin_ref=ref,
                tau_crit=self.tau_crit,
                start_dist=d0,
            )
            self._trace_cache[ref] = tr
        return tr

    # -- in-order positions and spans -------------------------------------

    def node_of(self, ref: RayRef) -> int:
        src = self.sources[ref.sid]
        if src.kind == "segment":
            raise ValueError("segment rays are not tree-ordered")
        return src.node_id

    def pos(self, ref: RayRef) -> tuple:
        node = self.nodes[self.node_of(ref)]
        comps = [node.sign * float(ref.param)]
        while node.parent is not None:
            parent = self.nodes[node.parent]
            comps.append(parent.sign * node.attach_param)
            node = parent
        comps.reverse()
        return tuple(comps)

    def _grid_range(self, node: TreeNode):
        src = self.sources[node.source_id]
        if src.kind == "vertex":
            # the root covers all wedges; treat each wedge interval separately
            return [(w.i_lo, w.i_hi) for w in src.wedges]
        return [(0, src.count - 1)]

    def subtree_count(self, nid: int) -> int:
        cached = self._subtree_counts.get(nid)
        if cached is not None:
            return cached
        node = self.nodes[nid]
        total = sum(hi - lo + 1 for lo, hi in self._grid_range(node))
        for _attach, cid in node.children:
            total += self.subtree_count(cid)
        self._subtree_counts[nid] = total
        return total

    def _atoms_in(self, nid: int, o_lo, o_hi):
        """Ordered atoms of node nid strictly between oriented params o_lo, o_hi.

        Atom = ("range", nid, start, stop) iterated start->stop in global order
        (start/stop are raw integer params), or ("node", nid) for a whole
        subtree. Bounds of None mean unbounded on that side. Grid ranges are
        split at child attach positions so pieces and subtrees interleave in
        true global order.
        """
        node = self.nodes[nid]
        sign = node.sign
        items = []  # (oriented key, tiebreak, atom); ranges sort before ties
        kid_oks = []
        for attach, cid in node.children:
            ok = sign * attach
            if (o_lo is None or ok > o_lo) and (o_hi is None or ok < o_hi):
                items.append((ok, 1, ("node", cid)))
                kid_oks.append(ok)
        for lo, hi in self._grid_range(node):
            a, b = (sign * lo, sign * hi) if sign > 0 else (sign * hi, sign * lo)
            lo_b = a if o_lo is None else max(a, o_lo)
            hi_b = b if o_hi is None else min(b, o_hi)
            if lo_b > hi_b:
                continue
            # oriented integer grid positions in [lo_b, hi_b]
            g_lo = math.ceil(lo_b - 1e-12)
            g_hi = math.floor(hi_b + 1e-12)
            if o_lo is not None and g_lo <= o_lo:
                g_lo = _strict_int_above(o_lo)
            if o_hi is not None and g_hi >= o_hi:
                g_hi = _strict_int_below(o_hi)
            if g_lo > g_hi:
                continue
            cuts = sorted({math.floor(ok + 1e-12) for ok in kid_oks if g_lo <= ok <= g_hi})
            start = g_lo
            for c in cuts:
                if c < start:
                    continue
                if c >= g_hi:
                    break
                items.append((float(start), 0, _range_atom(nid, sign, start, c)))
                start = c + 1
            items.append((float(start), 0, _range_atom(nid, sign, start, g_hi)))
        items.sort(key=lambda kv: (kv[0], kv[1]))
        return [atom for _k, _t, atom in items]

    def _chain(self, ref: RayRef):
        """[(node id, oriented local position), ...] from the ray's node to root."""
        node = self.nodes[self.node_of(ref)]
        out = [(node.nid, node.sign * float(ref.param))]
        while node.parent is not None:
            parent = self.nodes[node.parent]
            out.append((parent.nid, parent.sign * node.attach_param))
            node = parent
        return out

    def span_atoms(self, ref_a: RayRef, ref_b: RayRef):
        """Atoms strictly between the two rays in global order (exclusive)."""
        if self.pos(ref_a) > self.pos(ref_b):
            ref_a, ref_b = ref_b, ref_a
        ch_a = self._chain(ref_a)
        ch_b = self._chain(ref_b)
        depth_a = {nid: (i, opos) for i, (nid, opos) in enumerate(ch_a)}
        lca = None
        for i, (nid, opos) in enumerate(ch_b):
            if nid in depth_a:
                lca = nid
                ia, oa = depth_a[nid][0], depth_a[nid][1]
                ib, ob = i, opos
                break
        if lca is None:
            raise ValueError("rays belong to different trees")
        atoms = []
        for nid, opos in ch_a[:ia]:
            atoms.extend(self._atoms_in(nid, opos, None))
        atoms.extend(self._atoms_in(lca, oa, ob))
        for nid, opos in reversed(ch_b[:ib]):
            atoms.extend(self._atoms_in(nid, None, opos))
        return atoms

    def atoms_count(self, atoms) -> int:
        total = 0
        for atom in atoms:
            if atom[0] == "node":
                total += self.subtree_count(atom[1])
            else:
                _tag, _n, start, stop = atom
                total += abs(stop - start) + 1
        return total

    def atoms_kth(self, atoms, k: int) -> RayRef:
        for atom in atoms:
            if atom[0] == "node":
                size = self.subtree_count(atom[1])
                if k < size:
                    inner = self._atoms_in(atom[1], None, None)
                    return self.atoms_kth(inner, k)
                k -= size
            else:
                _tag, nid, start, stop = atom
                size = abs(stop - start) + 1
                if k < size:
                    step = 1 if stop >= start else -1
                    param = start + step * k
                    return RayRef(self.nodes[nid].source_id, param)
                k -= size
        raise IndexError("k outside span")


def _range_atom(nid: int, sign: float, g_lo, g_hi):
    """Oriented integer interval -> raw-param range atom."""
    start = int(g_lo) if sign > 0 else int(-g_lo)
    stop = int(g_hi) if sign > 0 else int(-g_hi)
    return ("range", nid, start, stop)


def _strict_int_above(x) -> int:
    f = math.floor(x)
    return int(f + 1) if f == x else int(math.ceil(x))


def _strict_int_below(x) -> int:
    c = math.ceil(x)
    return int(c - 1) if c == x else int(math.floor(x))


def _oriented_attach(self, parent_sign: float) -> float:
    return parent_sign * self.attach_param


TreeNode.oriented_attach = _oriented_attach

SourceRef = (VertexSource, CriticalSource, SegmentSource)
