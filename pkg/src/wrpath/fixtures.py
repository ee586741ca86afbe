"""Mesh fixture generators: tiny analytic cases plus seeded random meshes."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import Delaunay

from . import geom
from .mesh import WeightedMesh, build_mesh

KINDS = ("single", "two-region", "strip", "random-delaunay", "fan")


def single(weight: float = 2.0) -> WeightedMesh:
    """One right triangle; every edge weight equals the face weight."""
    return build_mesh([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)], [(0, 1, 2, weight)])


def two_region(w_left: float = 1.0, w_right: float = 4.0) -> WeightedMesh:
    """Two rectangular regions split by the vertical interface x = 2.

    Vertices 0..5 are the 2x3 grid; vertex 0 = (0,0), vertex 5 = (4,2).
    """
    vertices = [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (0.0, 2.0), (2.0, 2.0), (4.0, 2.0)]
    faces = [
        (0, 1, 4, w_left),
        (0, 4, 3, w_left),
        (1, 2, 5, w_right),
        (1, 5, 4, w_right),
    ]
    return build_mesh(vertices, faces)


def strip(quads: int = 6, weights=None, height: float = 1.0) -> WeightedMesh:
    """Horizontal strip of quads, each split into two triangles."""
    if weights is None:
        weights = [1.0] * quads
    if len(weights) != quads:
        raise ValueError("need one weight per quad")
    vertices = []
    for x in range(quads + 1):
        vertices.append((float(x), 0.0))
    for x in range(quads + 1):
        vertices.append((float(x), height))
    top = quads + 1
    faces = []
    for i in range(quads):
        w = float(weights[i])
        faces.append((i, i + 1, top + i + 1, w))
        faces.append((i, top + i + 1, top + i, w))
    return build_mesh(vertices, faces)


def fan(sectors: int = 8, weight: float = 1.0, radius: float = 4.0) -> WeightedMesh:
    """Convex fan of triangles around a hub, spanning 170 to 10 degrees.

    The chord between the two extreme rim vertices stays inside the region,
    so uniform-weight geodesics between them are straight segments.
    """
    if sectors < 2:
        raise ValueError("need at least 2 sectors")
    vertices = [(0.0, 0.0)]
    a_lo, a_hi = math.radians(170.0), math.radians(10.0)
    for i in range(sectors + 1):
        a = a_lo + (a_hi - a_lo) * i / sectors
        vertices.append((radius * math.cos(a), radius * math.sin(a)))
    faces = [(0, i + 1, i + 2, weight) for i in range(sectors)]
    return build_mesh(vertices, faces)


def random_delaunay(
    seed: int,
    n: int = 20,
    weight_range: tuple[int, int] = (1, 8),
    size: float = 12.0,
    min_angle_deg: float = 8.0,
) -> WeightedMesh:
    """Seeded Delaunay triangulation of a jittered grid, sliver-free.

    Jittered grid points keep triangle quality high; a fresh jitter is drawn
    until every interior angle clears min_angle_deg.
    """
    rng = np.random.default_rng(seed)
    side = max(2, math.ceil(math.sqrt(n)))
    min_angle = math.radians(min_angle_deg)

    for _attempt in range(60):
        # the full jittered grid: subsets leave collinear hull gaps -> slivers
        xs, ys = np.meshgrid(np.arange(side), np.arange(side))
        pts = np.column_stack([xs.ravel(), ys.ravel()]).astype(float)
        pts *= size / max(1, side - 1)
        pts += rng.uniform(-0.28, 0.28, pts.shape) * size / max(1, side - 1)
        try:
            tri = Delaunay(pts)
        except Exception:
            continue
        tris = _trim_hull_slivers(pts, [tuple(map(int, s)) for s in tri.simplices], min_angle)
        if not tris or _min_tri_angle(pts, tris) < min_angle:
            continue
        used = sorted({v for t in tris for v in t})
        remap = {v: i for i, v in enumerate(used)}
        weights = rng.integers(weight_range[0], weight_range[1] + 1, len(tris))
        faces = [
            (remap[a], remap[b], remap[c], float(w))
            for (a, b, c), w in zip(tris, weights)
        ]
        verts = [(float(pts[v][0]), float(pts[v][1])) for v in used]
        try:
            return build_mesh(verts, faces)
        except Exception:
            continue
    raise RuntimeError(f"could not generate a clean mesh for seed {seed}")


def _trim_hull_slivers(pts, tris: list, min_angle: float) -> list:
    """Peel thin boundary triangles; jittered-grid hulls always grow a few."""
    tris = list(tris)
    for _round in range(3 * len(tris)):
        counts: dict[tuple[int, int], int] = {}
        for a, b, c in tris:
            for u, v in ((a, b), (b, c), (c, a)):
                k = (u, v) if u < v else (v, u)
                counts[k] = counts.get(k, 0) + 1
        peeled = False
        for i, (a, b, c) in enumerate(tris):
            on_hull = any(
                counts[(u, v) if u < v else (v, u)] == 1
                for u, v in ((a, b), (b, c), (c, a))
            )
            if on_hull and _min_tri_angle(pts, [tris[i]]) < min_angle:
                del tris[i]
                peeled = True
                break
        if not peeled:
            break
    return tris


def _min_tri_angle(pts, simplices) -> float:
    worst = math.pi
    for a, b, c in simplices:
        pa, pb, pc = pts[a], pts[b], pts[c]
        for p, q, r in ((pa, pb, pc), (pb, pc, pa), (pc, pa, pb)):
            v1 = geom.unit((q[0] - p[0], q[1] - p[1]))
            v2 = geom.unit((r[0] - p[0], r[1] - p[1]))
            worst = min(worst, math.acos(max(-1.0, min(1.0, geom.dot(v1, v2)))))
    return worst


def corner_vertices(mesh: WeightedMesh) -> tuple[int, int]:
    """Vertex ids nearest the lower-left and upper-right bounding corners."""
    xs = [p.x for p in mesh.vertices]
    ys = [p.y for p in mesh.vertices]
    lo = (min(xs), min(ys))
    hi = (max(xs), max(ys))
    s = min(range(len(mesh.vertices)), key=lambda i: geom.dist(mesh.vertices[i], lo))
    t = min(range(len(mesh.vertices)), key=lambda i: geom.dist(mesh.vertices[i], hi))
    return s, t


def make(kind: str, seed: int = 0, size: int = 20) -> WeightedMesh:
    """Build a fixture by kind name (the `gen` command's worker)."""
    if kind == "single":
        return single()
    if kind == "two-region":
        return two_region()
    if kind == "strip":
        return strip()
    if kind == "fan":
        return fan()
    if kind == "random-delaunay":
        return random_delaunay(seed, n=size)
    raise ValueError(f"unknown fixture kind {kind!r}; choose from {KINDS}")
