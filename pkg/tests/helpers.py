"""Shared test utilities: random interior points, Snell residuals, fixtures."""

import contextlib
import math
import random

from wrpath import geom
from wrpath.mesh import Point2, build_mesh, locate_point, parse_mesh
from wrpath.wavefront import engine as wf_engine

# Hand-derived reference values for the two-region fixture (weights 1 | 4,
# vertical interface at x = 2); the crossing ordinate solves the stationarity
# condition of  w_l*|s-x| + w_r*|x-t|  along the interface.
CORNER_COST = 10.71369599644763       # (0,0) -> (4,2)
CORNER_CROSS_Y = 1.6747750171355407
INTERIOR_COST = 6.180391487353639     # (0.2,1.7) -> (3.0,0.4)
INTERIOR_CROSS_Y = 0.5369434706422436

ASIN_QUARTER = 0.25268025514207865    # arcsin(1/4)

DISCONNECTED_TEXT = """\
WRP 1
6
0 0
1 0
0 1
10 10
11 10
10 11
2
0 1 2 1.0
3 4 5 1.0
"""


def disconnected_mesh():
    return parse_mesh(DISCONNECTED_TEXT, allow_disconnected=True)


def two_face_mesh(w0: float = 1.0, w1: float = 2.0):
    """Unit square split along the 0-2 diagonal."""
    return build_mesh(
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        [(0, 1, 2, w0), (0, 2, 3, w1)],
    )


def random_interior_point(mesh, rng: random.Random) -> Point2:
    """Point strictly inside a uniformly chosen face."""
    for _ in range(100):
        f = mesh.faces[rng.randrange(len(mesh.faces))]
        a, b, c = (mesh.vertices[i] for i in f.vertex_ids)
        u, v = rng.random(), rng.random()
        if u + v > 1.0:
            u, v = 1.0 - u, 1.0 - v
        # pull toward the centroid so the point stays clear of the edges
        u = 1.0 / 3.0 + 0.8 * (u - 1.0 / 3.0)
        v = 1.0 / 3.0 + 0.8 * (v - 1.0 / 3.0)
        p = Point2(
            a.x + u * (b.x - a.x) + v * (c.x - a.x),
            a.y + u * (b.y - a.y) + v * (c.y - a.y),
        )
        if locate_point(mesh, p).kind == "face":
            return p
    raise RuntimeError("could not sample an interior point")


def _segment_face_weight(mesh, p, q):
    mid = geom.lerp(p, q, 0.5)
    loc = locate_point(mesh, mid)
    if loc.kind == "face":
        return mesh.faces[loc.index].weight
    if loc.kind == "edge":
        return mesh.edges[loc.index].weight
    return None


def snell_residuals(mesh, polyline):
    """|w_in*sin(th_in) - w_out*sin(th_out)| at each interior bend of the path.

    Only joints that sit on an interior edge between faces of different weight
    count; straight continuations and edge-hugging joints contribute nothing.
    """
    out = []
    for a, b, c in zip(polyline, polyline[1:], polyline[2:]):
        loc = locate_point(mesh, b)
        if loc.kind != "edge":
            continue
        edge = mesh.edges[loc.index]
        if None in edge.faces:
            continue
        w_in = _segment_face_weight(mesh, a, b)
        w_out = _segment_face_weight(mesh, b, c)
        if w_in is None or w_out is None or w_in == w_out:
            continue
        u, v = mesh.edge_points(loc.index)
        t_hat = geom.unit(geom.sub(v, u))
        d_in = geom.unit(geom.sub(b, a))
        d_out = geom.unit(geom.sub(c, b))
        sin_in = abs(geom.dot(d_in, t_hat))
        sin_out = abs(geom.dot(d_out, t_hat))
        out.append(abs(w_in * sin_in - w_out * sin_out))
    return out


def log_keys(log):
    return [e["key"] for e in log]


def assert_nondecreasing(keys):
    for a, b in zip(keys, keys[1:]):
        assert b >= a, f"event key regressed: {a} -> {b}"


def straightness_defect(polyline):
    """Max deviation of interior joints from the chord (collinearity check)."""
    if len(polyline) < 3:
        return 0.0
    a, b = polyline[0], polyline[-1]
    d = geom.unit(geom.sub(b, a))
    return max(abs(geom.cross(d, geom.sub(p, a))) for p in polyline[1:-1])


@contextlib.contextmanager
def spy_splits():
    """Record every bundle split's probe pair as the engine performs it."""
    orig = wf_engine._finish_split
    calls = []

    def wrapper(state, bundle, r1, r1k, r2, r2k, e_lo, e_hi, apex):
        first_child = len(state.bundles)
        out = orig(state, bundle, r1, r1k, r2, r2k, e_lo, e_hi, apex)
        calls.append((state, bundle, r1, r2, first_child))
        return out

    wf_engine._finish_split = wrapper
    try:
        yield calls
    finally:
        wf_engine._finish_split = orig


def assert_split_probes_successive(book, r1, r2):
    """The bisection probes must be adjacent in the bundle's ray order."""
    src = book.sources[r1.sid]
    if src.kind == "segment":
        assert r2.sid == r1.sid
        assert 0.0 <= float(r2.param) - float(r1.param) <= 1.0
    else:
        assert book.pos(r1) <= book.pos(r2)
        if r1 != r2:
            assert book.atoms_count(book.span_atoms(r1, r2)) == 0
