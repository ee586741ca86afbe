"""Steiner-graph verification baseline.

Equi-spaced points on every edge, all-pairs arcs within each face, Dijkstra
over the resulting sparse graph. Entirely independent of the wavefront
engine so the two can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .mesh import WeightedMesh, locate_point


class OracleError(Exception):
    pass


@dataclass
class SteinerGraph:
    mesh: WeightedMesh
    m: int  # Steiner points per edge
    positions: np.ndarray  # (num_nodes, 2); first |V| rows are mesh vertices
    rows: np.ndarray
    cols: np.ndarray
    costs: np.ndarray
    # node ids per edge: [u, s_1..s_m, v] in order along the edge
    edge_nodes: list[np.ndarray]
    node_edge: np.ndarray  # owning edge id per node, -1 for mesh vertices
    _matrix: object = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.positions)

    def matrix(self):
        if self._matrix is None:
            n = self.num_nodes
            self._matrix = coo_matrix(
                (self.costs, (self.rows, self.cols)), shape=(n, n)
            ).tocsr()
        return self._matrix


@dataclass
class OracleResult:
    cost: float
    polyline: list[tuple[float, float]]
    slack: float
    m: int = 0


def build_steiner_graph(mesh: WeightedMesh, m: int) -> SteinerGraph:
    if m < 0:
        raise ValueError("m must be >= 0")
    nv = len(mesh.vertices)
    positions = [np.array([[p.x, p.y] for p in mesh.vertices], dtype=float)]
    edge_nodes: list[np.ndarray] = []
    node_edge = [np.full(nv, -1, dtype=np.int64)]
    next_id = nv
    for ei in range(len(mesh.edges)):
        e = mesh.edges[ei]
        a, b = mesh.edge_points(ei)
        ids = [e.u]
        if m > 0:
            ts = np.arange(1, m + 1, dtype=float) / (m + 1)
            pts = np.outer(1 - ts, [a.x, a.y]) + np.outer(ts, [b.x, b.y])
            positions.append(pts)
            node_edge.append(np.full(m, ei, dtype=np.int64))
            ids.extend(range(next_id, next_id + m))
            next_id += m
        ids.append(e.v)
        edge_nodes.append(np.array(ids, dtype=np.int64))
    pos = np.vstack(positions)
    node_edge = np.concatenate(node_edge)

    rows_parts, cols_parts, costs_parts = [], [], []

    # along-edge arcs between consecutive nodes, at edge weight
    for ei, ids in enumerate(edge_nodes):
        w_e = mesh.edges[ei].weight
        seg = pos[ids]
        lens = np.hypot(*(seg[1:] - seg[:-1]).T)
        rows_parts.append(ids[:-1])
        cols_parts.append(ids[1:])
        costs_parts.append(lens * w_e)

    # within-face arcs between boundary nodes on different edges, at face weight
    for fi, f in enumerate(mesh.faces):
        ids = np.unique(np.concatenate([edge_nodes[ei] for ei in f.edges]))
        p = pos[ids]
        iu, ju = np.triu_indices(len(ids), k=1)
        keep = np.ones(len(iu), dtype=bool)
        for ei in f.edges:
            members = np.isin(ids, edge_nodes[ei])
            keep &= ~(members[iu] & members[ju])
        iu, ju = iu[keep], ju[keep]
        lens = np.hypot(p[iu, 0] - p[ju, 0], p[iu, 1] - p[ju, 1])
        rows_parts.append(ids[iu])
        cols_parts.append(ids[ju])
        costs_parts.append(lens * f.weight)

    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    costs = np.concatenate(costs_parts)
    # symmetrize
    rows_full = np.concatenate([rows, cols])
    cols_full = np.concatenate([cols, rows])
    costs_full = np.concatenate([costs, costs])
    return SteinerGraph(mesh, m, pos, rows_full, cols_full, costs_full, edge_nodes, node_edge)


def _node_faces(graph: SteinerGraph, node: int) -> set[int]:
    mesh = graph.mesh
    if node >= len(graph.node_edge):
        return set()
    ei = int(graph.node_edge[node])
    if ei >= 0:
        return set(mesh.edges[ei].faces)
    return set(mesh.vertex_faces[node])


def _arc_face(graph: SteinerGraph, u: int, v: int) -> int:
    """Face crossed by arc (u, v), or -1 for along-edge travel."""
    mesh = graph.mesh
    eu = int(graph.node_edge[u]) if u < len(graph.node_edge) else -2
    ev = int(graph.node_edge[v]) if v < len(graph.node_edge) else -2
    if eu == -2 or ev == -2:
        # temporary query node: attributed to its face by the caller
        return -2
    if eu >= 0 and eu == ev:
        return -1
    if eu == -1 and ev == -1:
        return -1  # vertex-vertex arcs exist only along edges
    if eu >= 0 and v in (mesh.edges[eu].u, mesh.edges[eu].v):
        return -1
    if ev >= 0 and u in (mesh.edges[ev].u, mesh.edges[ev].v):
        return -1
    shared = _node_faces(graph, u) & _node_faces(graph, v)
    if not shared:
        return -1
    return min(shared, key=lambda fi: mesh.faces[fi].weight)


def _face_spacing(mesh: WeightedMesh, m: int, fi: int) -> float:
    f = mesh.faces[fi]
    return max(mesh.edge_length(ei) for ei in f.edges) / (m + 1)


def _arc_edge(graph: SteinerGraph, u: int, v: int) -> int:
    """Edge an along-edge arc travels on, or -1 when not identifiable."""
    mesh = graph.mesh
    eu = int(graph.node_edge[u]) if u < len(graph.node_edge) else -1
    ev = int(graph.node_edge[v]) if v < len(graph.node_edge) else -1
    if eu >= 0:
        return eu
    if ev >= 0:
        return ev
    if u < len(mesh.vertices) and v < len(mesh.vertices):
        return mesh.edge_id(u, v)
    return -1


def _path_slack(graph: SteinerGraph, node_path: list[int], query_face: int | None = None) -> float:
    """A posteriori error bound on (graph cost - true cost).

    Face-crossing arcs pay twice the snapping detour of their face. Along-edge
    arcs additionally charge each adjacent face once: the continuum optimum may
    cut through a face the returned path merely skirts, and those shortcuts
    carry the same snapping detour.
    """
    mesh = graph.mesh
    slack = 0.0
    skirted: set[int] = set()
    for u, v in zip(node_path, node_path[1:]):
        fi = _arc_face(graph, u, v)
        if fi == -2:
            fi = query_face if query_face is not None else -1
        if fi >= 0:
            slack += 2.0 * mesh.faces[fi].weight * _face_spacing(mesh, graph.m, fi)
        else:
            ei = _arc_edge(graph, u, v)
            if ei >= 0:
                skirted.update(f for f in mesh.edges[ei].faces if f is not None)
    for fi in skirted:
        slack += 2.0 * mesh.faces[fi].weight * _face_spacing(mesh, graph.m, fi)
    return slack


def _walk_predecessors(pred, source: int, target: int) -> list[int]:
    path = [target]
    while path[-1] != source:
        p = pred[path[-1]]
        if p < 0:
            raise OracleError(f"target {target} unreachable from {source}")
        path.append(int(p))
    path.reverse()
    return path


def _solve(graph: SteinerGraph, s: int, t: int, query_face: int | None = None) -> OracleResult:
    dist, pred = _csgraph_dijkstra(
        graph.matrix(), directed=False, indices=s, return_predecessors=True
    )
    if not np.isfinite(dist[t]):
        raise OracleError(f"target {t} unreachable from {s}")
    nodes = _walk_predecessors(pred, s, t)
    poly = [tuple(map(float, graph.positions[i])) for i in nodes]
    return OracleResult(float(dist[t]), poly, _path_slack(graph, nodes, query_face), graph.m)


def oracle_shortest(graph: SteinerGraph, s: int, t: int) -> OracleResult:
    """Exact shortest path in the Steiner graph between two node ids."""
    if not (0 <= s < graph.num_nodes and 0 <= t < graph.num_nodes):
        raise OracleError("node id out of range")
    return _solve(graph, s, t)


def augment_with_point(graph: SteinerGraph, q) -> tuple[SteinerGraph, int, int]:
    """Copy of graph with q appended as a node arced across its face(s).

    Returns (augmented graph, q's node id, q's face id)."""
    mesh = graph.mesh
    loc = locate_point(mesh, q)
    if loc.kind == "outside":
        raise OracleError(f"query point {tuple(q)} outside the mesh")
    if loc.kind == "vertex":
        return graph, loc.index, -1
    if loc.kind == "edge":
        face_ids = list(mesh.edges[loc.index].faces)
    else:
        face_ids = [loc.index]

    qid = graph.num_nodes
    q = (float(q[0]), float(q[1]))
    rows, cols, costs = [graph.rows], [graph.cols], [graph.costs]
    for fi in face_ids:
        f = mesh.faces[fi]
        ids = np.unique(np.concatenate([graph.edge_nodes[ei] for ei in f.edges]))
        p = graph.positions[ids]
        lens = np.hypot(p[:, 0] - q[0], p[:, 1] - q[1]) * f.weight
        full = np.full(len(ids), qid, dtype=np.int64)
        rows.extend([full, ids])
        cols.extend([ids, full])
        costs.extend([lens, lens])

    aug = SteinerGraph(
        mesh,
        graph.m,
        np.vstack([graph.positions, [q]]),
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(costs),
        graph.edge_nodes,
        graph.node_edge,
    )
    return aug, qid, face_ids[0]


def oracle_with_point(mesh: WeightedMesh, m: int, s: int, q, graph: SteinerGraph | None = None) -> OracleResult:
    """Shortest path from vertex s to an arbitrary point q inside the mesh."""
    if graph is None:
        graph = build_steiner_graph(mesh, m)
    aug, qid, qface = augment_with_point(graph, q)
    if qid < aug.num_nodes and aug is graph:
        return _solve(graph, s, qid)
    return _solve(aug, s, qid, query_face=qface)


def oracle_auto(
    mesh: WeightedMesh,
    s: int,
    t: int,
    epsilon: float,
    slack_fraction: float | None = None,
    m_start: int = 8,
    m_cap: int = 1024,
    query_point=None,
) -> OracleResult:
    """Double m (powers of two) until slack <= slack_fraction of the current
    best cost estimate; default fraction is epsilon/4.

    Doubling also stops once the projected arc count would exceed ~2e7,
    whichever comes first, so dense meshes cannot exhaust memory.
    """
    frac = slack_fraction if slack_fraction is not None else epsilon / 4.0
    m = m_start
    while True:
        if query_point is not None:
            result = oracle_with_point(mesh, m, s, query_point)
        else:
            result = oracle_shortest(build_steiner_graph(mesh, m), s, t)
        arcs_next = 3 * (2 * m) ** 2 * len(mesh.faces)
        if result.slack <= frac * result.cost or m >= m_cap or arcs_next > 2e7:
            return result
        m *= 2


def oracle_vertex_distances(mesh: WeightedMesh, s: int, m: int) -> np.ndarray:
    """Distances from vertex s to every mesh vertex (for batch checks)."""
    graph = build_steiner_graph(mesh, m)
    dist = _csgraph_dijkstra(graph.matrix(), directed=False, indices=s)
    return dist[: len(mesh.vertices)]
