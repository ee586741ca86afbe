import math

import pytest

from wrpath.optics import path_cost
from wrpath.oracle import (
    OracleError,
    build_steiner_graph,
    oracle_auto,
    oracle_shortest,
    oracle_vertex_distances,
    oracle_with_point,
)

from helpers import CORNER_COST, disconnected_mesh, two_face_mesh


def test_node_counts(single_mesh):
    assert build_steiner_graph(single_mesh, 0).num_nodes == 3
    assert build_steiner_graph(single_mesh, 1).num_nodes == 6
    two = two_face_mesh()
    assert build_steiner_graph(two, 2).num_nodes == 4 + 5 * 2


def test_m0_arcs_are_the_edges(single_mesh):
    g = build_steiner_graph(single_mesh, 0)
    pairs = {frozenset((int(u), int(v))) for u, v in zip(g.rows, g.cols)}
    want = {frozenset((e.u, e.v)) for e in single_mesh.edges}
    assert pairs == want


def test_adjacent_vertices_use_edge_weight_any_m(single_mesh):
    for m in (0, 1, 7):
        g = build_steiner_graph(single_mesh, m)
        res = oracle_shortest(g, 0, 1)
        assert res.cost == pytest.approx(8.0, rel=1e-12)


def test_uniform_convex_monotone_in_m(fan_mesh):
    s, t = 1, len(fan_mesh.vertices) - 1
    straight = math.dist(fan_mesh.vertices[s], fan_mesh.vertices[t])
    costs = []
    # nested subdivisions ((m+1) divides the next m+1) so refinement only adds nodes
    for m in (2, 5, 11, 23):
        res = oracle_shortest(build_steiner_graph(fan_mesh, m), s, t)
        costs.append(res.cost)
        assert res.cost >= straight - 1e-9  # oracle is an upper-bounding graph
        assert abs(res.cost - straight) <= res.slack + 1e-9
    for a, b in zip(costs, costs[1:]):
        assert b <= a + 1e-12


def test_two_region_against_interface_minimization(two_region_mesh):
    res = oracle_shortest(build_steiner_graph(two_region_mesh, 400), 0, 5)
    assert abs(res.cost - CORNER_COST) <= res.slack
    assert res.cost >= CORNER_COST - 1e-9


def test_polyline_cost_matches_reported(two_region_mesh):
    res = oracle_shortest(build_steiner_graph(two_region_mesh, 24), 0, 5)
    assert path_cost(two_region_mesh, res.polyline) == pytest.approx(res.cost, abs=1e-9)
    assert res.polyline[0] == (0.0, 0.0) and res.polyline[-1] == (4.0, 2.0)


def test_slack_decreases_with_m(two_region_mesh):
    slacks = [
        oracle_shortest(build_steiner_graph(two_region_mesh, m), 0, 5).slack
        for m in (4, 16, 64)
    ]
    assert slacks[0] > slacks[1] > slacks[2] > 0.0


def test_oracle_auto_meets_slack_fraction(two_region_mesh):
    res = oracle_auto(two_region_mesh, 0, 5, epsilon=0.1, slack_fraction=0.01)
    assert res.slack <= 0.01 * res.cost
    assert abs(res.cost - CORNER_COST) <= res.slack


def test_with_point_at_vertex_matches_plain(two_region_mesh):
    g = build_steiner_graph(two_region_mesh, 8)
    direct = oracle_shortest(g, 0, 5)
    via_point = oracle_with_point(two_region_mesh, 8, 0, two_region_mesh.vertices[5], graph=g)
    assert via_point.cost == direct.cost


def test_with_point_centroid_direct_leg(single_mesh):
    c = single_mesh.face_centroid(0)
    res = oracle_with_point(single_mesh, 4, 0, c)
    assert res.cost == pytest.approx(2.0 * math.dist(single_mesh.vertices[0], c), rel=1e-12)


def test_with_point_outside_errors(single_mesh):
    with pytest.raises(OracleError):
        oracle_with_point(single_mesh, 2, 0, (50.0, 50.0))


def test_unreachable_errors():
    mesh = disconnected_mesh()
    g = build_steiner_graph(mesh, 2)
    with pytest.raises(OracleError):
        oracle_shortest(g, 0, 3)


def test_vertex_distances_batch(two_region_mesh):
    d = oracle_vertex_distances(two_region_mesh, 0, 16)
    assert d[0] == 0.0
    assert len(d) == 6
    single = oracle_shortest(build_steiner_graph(two_region_mesh, 16), 0, 5)
    assert d[5] == pytest.approx(single.cost, rel=1e-12)
