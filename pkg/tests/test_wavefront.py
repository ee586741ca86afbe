import math

import pytest

from wrpath import fixtures, geom
from wrpath.mesh import locate_point
from wrpath.optics import path_cost
from wrpath.oracle import build_steiner_graph, oracle_auto, oracle_shortest
from wrpath.wavefront import UnreachableError, WavefrontError, build_sssp_map, run
from wrpath.wavefront.engine import _event_loop, _seed, prepare_state

from helpers import (
    CORNER_COST,
    INTERIOR_COST,
    assert_nondecreasing,
    assert_split_probes_successive,
    disconnected_mesh,
    log_keys,
    snell_residuals,
    spy_splits,
    straightness_defect,
)


def _band(res_cost, ora, epsilon):
    lo = ora.cost - ora.slack
    hi = (1.0 + epsilon) * (ora.cost + ora.slack)
    return lo - 1e-9 <= res_cost <= hi + 1e-9


def test_single_face_vertices_exact(single_mesh):
    for s, t, want in ((0, 1, 8.0), (0, 2, 6.0), (1, 2, 10.0)):
        r = run(single_mesh, s, t, epsilon=0.1)
        assert r.cost == pytest.approx(want, rel=1e-9)
        assert r.polyline[0] == tuple(single_mesh.vertices[s])
        assert r.polyline[-1] == tuple(single_mesh.vertices[t])
        assert straightness_defect(r.polyline) <= 1e-9


def test_single_face_interior_pair(single_mesh):
    s, t = (0.5, 0.5), (2.0, 1.0)
    r = run(single_mesh, s, t, epsilon=0.1)
    assert r.cost == pytest.approx(2.0 * math.dist(s, t), rel=1e-9)
    assert r.polyline == [s, t]


def test_uniform_fan_rim_chord(fan_mesh):
    s, t = 1, len(fan_mesh.vertices) - 1
    want = math.dist(fan_mesh.vertices[s], fan_mesh.vertices[t])
    r = run(fan_mesh, s, t, epsilon=0.1)
    assert r.cost == pytest.approx(want, rel=1e-6)
    assert straightness_defect(r.polyline) <= 1e-6


def test_two_region_corner_pair(two_region_mesh):
    r = run(two_region_mesh, 0, 5, epsilon=0.1)
    # the engine reports an honest path cost, so it can never beat the optimum
    assert r.cost >= CORNER_COST - 1e-9
    assert r.cost <= (1.0 + 0.1) * CORNER_COST + 1e-9
    assert path_cost(two_region_mesh, r.polyline) == pytest.approx(r.cost, abs=1e-9)
    ora = oracle_auto(two_region_mesh, 0, 5, epsilon=0.1, slack_fraction=0.01)
    assert _band(r.cost, ora, 0.1)
    res = snell_residuals(two_region_mesh, r.polyline)
    assert res and max(res) <= 1e-6


def test_two_region_interior_pair(two_region_mesh):
    r = run(two_region_mesh, (0.2, 1.7), (3.0, 0.4), epsilon=0.1)
    assert r.cost >= INTERIOR_COST - 1e-9
    assert r.cost == pytest.approx(INTERIOR_COST, rel=1e-6)
    res = snell_residuals(two_region_mesh, r.polyline)
    assert res and max(res) <= 1e-6


def test_strip_band(strip_mesh):
    s, t = fixtures.corner_vertices(strip_mesh)
    r = run(strip_mesh, s, t, epsilon=0.1)
    ora = oracle_auto(strip_mesh, s, t, epsilon=0.1)
    assert _band(r.cost, ora, 0.1)
    assert r.stats["violations"] == 0


def test_random_mesh_band(rand_mesh):
    s, t = fixtures.corner_vertices(rand_mesh)
    r = run(rand_mesh, s, t, epsilon=0.1)
    ora = oracle_auto(rand_mesh, s, t, epsilon=0.1)
    assert _band(r.cost, ora, 0.1)
    assert path_cost(rand_mesh, r.polyline) == pytest.approx(r.cost, abs=1e-9)


def test_vertex_distance_dominance(rand_mesh):
    s, _t = fixtures.corner_vertices(rand_mesh)
    spmap = build_sssp_map(rand_mesh, s, epsilon=0.1)
    g = build_steiner_graph(rand_mesh, 64)
    for v in range(len(rand_mesh.vertices)):
        if v == s:
            assert spmap.vdist[v] == 0.0
            continue
        ora = oracle_shortest(g, s, v)
        wf = spmap.vdist[v]
        assert wf >= ora.cost - ora.slack - 1e-9
        assert wf <= (1.0 + 0.1) * (ora.cost + ora.slack) + 1e-9


def test_log_keys_monotone_zero_violations(rand_mesh):
    s, t = fixtures.corner_vertices(rand_mesh)
    r = run(rand_mesh, s, t, epsilon=0.1)
    assert_nondecreasing(log_keys(r.log))
    assert r.stats["violations"] == 0


def test_snell_on_reconstructed_random_path(rand_mesh):
    s, t = fixtures.corner_vertices(rand_mesh)
    r = run(rand_mesh, s, t, epsilon=0.1)
    res = snell_residuals(rand_mesh, r.polyline)
    if res:  # some meshes route through vertices only
        assert max(res) <= 1e-6


def test_event_budget_exhaustion(rand_mesh):
    s, t = fixtures.corner_vertices(rand_mesh)
    with pytest.raises(WavefrontError):
        run(rand_mesh, s, t, epsilon=0.1, event_budget=5)


def test_unreachable_target():
    mesh = disconnected_mesh()
    with pytest.raises(UnreachableError, match="unreachable"):
        run(mesh, 0, 3, epsilon=0.1)


def test_source_outside_rejected(single_mesh):
    with pytest.raises(ValueError):
        run(single_mesh, (-3.0, -3.0), 1, epsilon=0.1)
    with pytest.raises(ValueError):
        run(single_mesh, 0, (50.0, 50.0), epsilon=0.1)


def test_seed_covers_incident_faces(fan_mesh):
    state = prepare_state(fan_mesh, 0.1)
    _seed(state, fan_mesh.vertices[0])  # the hub touches every sector
    faces = {b.front_face_in for b in state.bundles}
    assert faces == set(range(len(fan_mesh.faces)))


def test_seed_interior_point_single_face(two_region_mesh):
    state = prepare_state(two_region_mesh, 0.1)
    p = two_region_mesh.face_centroid(2)
    _seed(state, p)
    assert state.bundles
    assert {b.front_face_in for b in state.bundles} == {2}
    assert state.spmap.point_records and state.spmap.point_records[0].dist == 0.0


def _exhaust(mesh, source_vertex, epsilon=0.1):
    state = prepare_state(mesh, epsilon)
    _seed(state, mesh.vertices[source_vertex])
    _event_loop(state)
    return state


def test_critical_machinery_fires(rand_mesh):
    s, _t = fixtures.corner_vertices(rand_mesh)
    state = _exhaust(rand_mesh, s)
    assert state.stats["criticals"] >= 1
    assert state.violations == 0


def test_split_probes_successive_and_children_flank():
    mesh = fixtures.random_delaunay(1)
    s, _t = fixtures.corner_vertices(mesh)
    with spy_splits() as calls:
        state = _exhaust(mesh, s)
    assert state.stats["splits"] >= 1
    # ray-sharing halvings bypass the probe search, so calls <= splits
    assert 1 <= len(calls) <= state.stats["splits"]
    for st, parent, r1, r2, first_child in calls:
        assert_split_probes_successive(st.book, r1, r2)
        assert parent.status == "split"
        c1, c2 = st.bundles[first_child], st.bundles[first_child + 1]
        assert c1.lo == parent.lo and c2.hi == parent.hi


def test_sibling_flanks_agree_at_front(rand_mesh):
    s, _t = fixtures.corner_vertices(rand_mesh)
    state = _exhaust(rand_mesh, s)
    inspected = 0
    for b in state.bundles:
        if b.status not in ("active", "retired") or b.lo_k < 0 or b.hi_k < 0:
            continue
        assert b.lo_trace.crossings[b.lo_k].edge == b.front_edge
        assert b.hi_trace.crossings[b.hi_k].edge == b.front_edge
        inspected += 1
    assert inspected >= 5
