"""Weighted triangulated planar subdivision: file format, validation, queries.

The mesh is immutable after construction. Every face is a counterclockwise
triangle with a positive weight; every edge knows its one or two incident
faces and carries the minimum incident face weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from . import geom


class MeshError(Exception):
    """Base class for mesh problems."""


class MeshFormatError(MeshError):
    """Malformed mesh file."""


class MeshValidationError(MeshError):
    """Structurally invalid mesh."""


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Face:
    a: int
    b: int
    c: int
    weight: float
    # edge ids aligned so edges[m] joins vertex m and vertex (m+1) % 3
    edges: tuple[int, int, int] = (-1, -1, -1)

    @property
    def vertex_ids(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    faces: tuple[int, ...]
    weight: float

    @property
    def is_boundary(self) -> bool:
        return len(self.faces) == 1


class MeshStats(NamedTuple):
    n: int
    l_min: float
    l_max: float
    w_min: float
    w_max: float
    mu: float
    theta_cm: float
    # extensions: minimum interior angle and largest absolute coordinate;
    # informational only, no runtime decision reads them
    theta_min: float = 0.0
    coord_max: float = 0.0


class Location(NamedTuple):
    kind: str  # "vertex" | "edge" | "face" | "outside"
    index: int | None


@dataclass
class WeightedMesh:
    vertices: list[Point2]
    faces: list[Face]
    edges: list[Edge]
    edge_index: dict[tuple[int, int], int] = field(default_factory=dict)
    vertex_faces: list[list[int]] = field(default_factory=list)
    vertex_edges: list[list[int]] = field(default_factory=list)
    _stats: MeshStats | None = None

    # -- adjacency helpers -------------------------------------------------

    def edge_id(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        return self.edge_index[key]

    def other_face(self, edge_id: int, face_id: int) -> int | None:
        fs = self.edges[edge_id].faces
        if len(fs) == 1:
            return None
        return fs[1] if fs[0] == face_id else fs[0]

    def face_points(self, face_id: int) -> tuple[Point2, Point2, Point2]:
        f = self.faces[face_id]
        return (self.vertices[f.a], self.vertices[f.b], self.vertices[f.c])

    def edge_points(self, edge_id: int) -> tuple[Point2, Point2]:
        e = self.edges[edge_id]
        return (self.vertices[e.u], self.vertices[e.v])

    def edge_length(self, edge_id: int) -> float:
        a, b = self.edge_points(edge_id)
        return geom.dist(a, b)

    def face_other_vertex(self, face_id: int, edge_id: int) -> int:
        """The face vertex opposite to the given edge."""
        e = self.edges[edge_id]
        for vid in self.faces[face_id].vertex_ids:
            if vid != e.u and vid != e.v:
                return vid
        raise ValueError(f"edge {edge_id} not on face {face_id}")

    def face_centroid(self, face_id: int) -> Point2:
        a, b, c = self.face_points(face_id)
        return Point2((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)

    @property
    def tau_geom(self) -> float:
        return 1e-9 * self.stats().l_max

    def stats(self) -> MeshStats:
        if self._stats is None:
            self._stats = compute_stats(self)
        return self._stats


# -- construction ----------------------------------------------------------


def build_mesh(
    vertices: list[tuple[float, float]],
    faces: list[tuple[int, int, int, float]],
    allow_disconnected: bool = False,
) -> WeightedMesh:
    """Assemble and validate a mesh from raw vertex/face data."""
    pts = [Point2(float(x), float(y)) for x, y in vertices]
    for i, p in enumerate(pts):
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise MeshValidationError(f"vertex {i}: non-finite coordinate")

    nv = len(pts)
    oriented: list[tuple[int, int, int, float]] = []
    for fi, (a, b, c, w) in enumerate(faces):
        for vid in (a, b, c):
            if not 0 <= vid < nv:
                raise MeshValidationError(f"face {fi}: vertex index {vid} out of range")
        if len({a, b, c}) < 3:
            raise MeshValidationError(f"face {fi}: degenerate triangle (repeated vertex)")
        if not (math.isfinite(w) and w > 0.0):
            raise MeshValidationError(f"face {fi}: non-positive weight {w}")
        area2 = geom.tri_area2(pts[a], pts[b], pts[c])
        if area2 == 0.0:
            raise MeshValidationError(f"face {fi}: degenerate triangle (zero area)")
        if area2 < 0.0:
            b, c = c, b  # normalize to counterclockwise
        oriented.append((a, b, c, float(w)))

    seen_tris: set[tuple[int, int, int]] = set()
    for fi, (a, b, c, _w) in enumerate(oriented):
        key3 = tuple(sorted((a, b, c)))
        if key3 in seen_tris:
            raise MeshValidationError(f"face {fi}: duplicate triangle {key3}")
        seen_tris.add(key3)

    edge_faces: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c, _w) in enumerate(oriented):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_faces.setdefault(key, []).append(fi)

    for key, fs in edge_faces.items():
        if len(fs) > 2:
            raise MeshValidationError(f"non-manifold edge {key}: {len(fs)} incident faces")

    edge_keys = sorted(edge_faces)
    edge_index = {key: i for i, key in enumerate(edge_keys)}
    edges = []
    for key in edge_keys:
        fs = edge_faces[key]
        w_e = min(oriented[fi][3] for fi in fs)
        edges.append(Edge(key[0], key[1], tuple(fs), w_e))

    face_objs = []
    for a, b, c, w in oriented:
        eids = tuple(
            edge_index[(u, v) if u < v else (v, u)] for u, v in ((a, b), (b, c), (c, a))
        )
        face_objs.append(Face(a, b, c, w, eids))

    vertex_faces: list[list[int]] = [[] for _ in range(nv)]
    vertex_edges: list[list[int]] = [[] for _ in range(nv)]
    for fi, f in enumerate(face_objs):
        for vid in f.vertex_ids:
            vertex_faces[vid].append(fi)
    for ei, e in enumerate(edges):
        vertex_edges[e.u].append(ei)
        vertex_edges[e.v].append(ei)

    if not allow_disconnected:
        _check_connected(nv, edges)

    mesh = WeightedMesh(pts, face_objs, edges, edge_index, vertex_faces, vertex_edges)
    return mesh


def _check_connected(nv: int, edges: list[Edge]) -> None:
    if nv == 0:
        raise MeshValidationError("mesh has no vertices")
    adj: list[list[int]] = [[] for _ in range(nv)]
    for e in edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    seen = [False] * nv
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    if count != nv:
        raise MeshValidationError(f"disconnected mesh: {nv - count} unreachable vertices")


# -- file format -----------------------------------------------------------

MAGIC = "WRP 1"


def parse_mesh(text: str, allow_disconnected: bool = False) -> WeightedMesh:
    lines = []
    for raw in text.splitlines():
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append(body)
    if not lines:
        raise MeshFormatError("empty mesh file")
    if lines[0] != MAGIC:
        raise MeshFormatError(f"bad magic line {lines[0]!r}, expected {MAGIC!r}")
    it = iter(lines[1:])

    def next_line(what: str) -> str:
        try:
            return next(it)
        except StopIteration:
            raise MeshFormatError(f"unexpected end of file, expected {what}") from None

    def parse_count(what: str) -> int:
        tok = next_line(what)
        try:
            value = int(tok)
        except ValueError:
            raise MeshFormatError(f"bad {what} {tok!r}") from None
        if value < 0:
            raise MeshFormatError(f"negative {what}")
        return value

    nv = parse_count("vertex count")
    vertices = []
    for i in range(nv):
        parts = next_line(f"vertex {i}").split()
        if len(parts) != 2:
            raise MeshFormatError(f"vertex {i}: expected 'x y', got {len(parts)} fields")
        try:
            vertices.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshFormatError(f"vertex {i}: bad coordinate") from None

    nf = parse_count("face count")
    faces = []
    for i in range(nf):
        parts = next_line(f"face {i}").split()
        if len(parts) != 4:
            raise MeshFormatError(f"face {i}: expected 'i j k w', got {len(parts)} fields")
        try:
            faces.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        except ValueError:
            raise MeshFormatError(f"face {i}: bad field") from None

    try:
        extra = next(it)
    except StopIteration:
        extra = None
    if extra is not None:
        raise MeshFormatError(f"trailing content after faces: {extra!r}")

    return build_mesh(vertices, faces, allow_disconnected=allow_disconnected)


def load_mesh(path, allow_disconnected: bool = False) -> WeightedMesh:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_mesh(text, allow_disconnected=allow_disconnected)


def format_mesh(mesh: WeightedMesh) -> str:
    # repr() emits the shortest decimal string that round-trips the float
    out = [MAGIC, str(len(mesh.vertices))]
    for p in mesh.vertices:
        out.append(f"{p.x!r} {p.y!r}")
    out.append(str(len(mesh.faces)))
    for f in mesh.faces:
        out.append(f"{f.a} {f.b} {f.c} {f.weight!r}")
    return "\n".join(out) + "\n"


def save_mesh(mesh: WeightedMesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_mesh(mesh))


# -- queries ---------------------------------------------------------------


def compute_stats(mesh: WeightedMesh) -> MeshStats:
    if not mesh.faces:
        raise MeshValidationError("mesh has no faces")
    lengths = [mesh.edge_length(i) for i in range(len(mesh.edges))]
    weights = [f.weight for f in mesh.faces]
    l_min, l_max = min(lengths), max(lengths)
    w_min, w_max = min(weights), max(weights)
    theta_cm = 0.0
    for e in mesh.edges:
        if len(e.faces) == 2:
            wa = mesh.faces[e.faces[0]].weight
            wb = mesh.faces[e.faces[1]].weight
            if wa != wb:
                theta_cm = max(theta_cm, math.asin(min(wa, wb) / max(wa, wb)))
    theta_min = math.pi
    for f in mesh.faces:
        pa = mesh.vertices[f.a]
        pb = mesh.vertices[f.b]
        pc = mesh.vertices[f.c]
        for p, q, r in ((pa, pb, pc), (pb, pc, pa), (pc, pa, pb)):
            v1 = geom.unit(geom.sub(q, p))
            v2 = geom.unit(geom.sub(r, p))
            theta_min = min(theta_min, math.acos(max(-1.0, min(1.0, geom.dot(v1, v2)))))
    coord_max = max(max(abs(p.x), abs(p.y)) for p in mesh.vertices)
    return MeshStats(
        n=len(mesh.vertices),
        l_min=l_min,
        l_max=l_max,
        w_min=w_min,
        w_max=w_max,
        mu=w_max / w_min,
        theta_cm=theta_cm,
        theta_min=theta_min,
        coord_max=coord_max,
    )


def locate_point(mesh: WeightedMesh, p) -> Location:
    """Lowest-dimensional feature containing p, with tolerance tau_geom."""
    tau = mesh.tau_geom
    px, py = float(p[0]), float(p[1])
    pt = (px, py)

    best_v, best_vd = -1, math.inf
    for i, v in enumerate(mesh.vertices):
        d = geom.dist(pt, v)
        if d < best_vd:
            best_v, best_vd = i, d
    if best_vd <= tau:
        return Location("vertex", best_v)

    best_e, best_ed = -1, math.inf
    for i in range(len(mesh.edges)):
        a, b = mesh.edge_points(i)
        d = geom.seg_point_dist(pt, a, b)
        if d < best_ed:
            best_e, best_ed = i, d
    if best_ed <= tau:
        return Location("edge", best_e)

    for i, f in enumerate(mesh.faces):
        a, b, c = mesh.vertices[f.a], mesh.vertices[f.b], mesh.vertices[f.c]
        d1 = geom.tri_area2(a, b, pt)
        d2 = geom.tri_area2(b, c, pt)
        d3 = geom.tri_area2(c, a, pt)
        if d1 > 0.0 and d2 > 0.0 and d3 > 0.0:
            return Location("face", i)
    return Location("outside", None)


def edge_sequence_faces(mesh: WeightedMesh, edge_ids: list[int], start_face: int) -> list[int]:
    """Faces visited when crossing edge_ids in order, starting in start_face."""
    if not 0 <= start_face < len(mesh.faces):
        raise MeshError(f"start face {start_face} out of range")
    out = [start_face]
    current = start_face
    for ei in edge_ids:
        e = mesh.edges[ei]
        if current not in e.faces:
            raise MeshError(f"edge {ei} does not border face {current}")
        nxt = mesh.other_face(ei, current)
        if nxt is None:
            raise MeshError(f"edge {ei} is a boundary edge, cannot cross")
        out.append(nxt)
        current = nxt
    return out
