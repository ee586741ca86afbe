import math

import pytest
from scipy.spatial import ConvexHull

from wrpath import fixtures, geom
from wrpath.mesh import (
    MeshError,
    MeshFormatError,
    MeshValidationError,
    build_mesh,
    compute_stats,
    edge_sequence_faces,
    format_mesh,
    load_mesh,
    locate_point,
    parse_mesh,
    save_mesh,
)

from helpers import DISCONNECTED_TEXT, two_face_mesh


def test_single_counts(single_mesh):
    assert len(single_mesh.vertices) == 3
    assert len(single_mesh.faces) == 1
    assert len(single_mesh.edges) == 3
    assert all(e.weight == 2.0 for e in single_mesh.edges)


def test_edge_weight_is_min_of_incident_faces(two_region_mesh, strip_mesh, rand_mesh):
    for mesh in (two_region_mesh, strip_mesh, rand_mesh):
        for e in mesh.edges:
            ws = [mesh.faces[f].weight for f in e.faces if f is not None]
            assert e.weight == min(ws)


def test_faces_positively_oriented_and_area_sums(single_mesh, fan_mesh, two_region_mesh):
    for mesh in (single_mesh, fan_mesh, two_region_mesh):
        total = 0.0
        for f in mesh.faces:
            a, b, c = (mesh.vertices[i] for i in f.vertex_ids)
            area = 0.5 * geom.cross(geom.sub(b, a), geom.sub(c, a))
            assert area > 0.0
            total += area
        hull = ConvexHull([(p.x, p.y) for p in mesh.vertices])
        assert total == pytest.approx(hull.volume, rel=1e-9)


def test_format_round_trip_bit_exact(rand_mesh, tmp_path):
    text = format_mesh(rand_mesh)
    again = parse_mesh(text)
    assert format_mesh(again) == text
    assert again.vertices == rand_mesh.vertices
    assert [f.weight for f in again.faces] == [f.weight for f in rand_mesh.faces]
    path = tmp_path / "m.wrp"
    save_mesh(rand_mesh, path)
    assert format_mesh(load_mesh(path)) == text


def test_parse_ignores_comments_and_blank_lines(single_mesh):
    text = format_mesh(single_mesh)
    noisy = "# header\n\n" + text.replace("\n3\n", "\n3\n# count above\n", 1) + "\n# trailer\n"
    assert format_mesh(parse_mesh(noisy)) == text


def test_parse_rejects_bad_magic():
    with pytest.raises(MeshFormatError):
        parse_mesh("WRP 9\n0\n0\n")


def test_parse_rejects_truncation():
    with pytest.raises(MeshFormatError):
        parse_mesh("WRP 1\n3\n0 0\n1 0\n")


def test_build_rejects_degenerate_face():
    with pytest.raises(MeshValidationError):
        build_mesh([(0, 0), (1, 1), (2, 2)], [(0, 1, 2, 1.0)])


def test_build_rejects_nonpositive_weight():
    with pytest.raises(MeshValidationError):
        build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2, 0.0)])
    with pytest.raises(MeshValidationError):
        build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2, -2.0)])


def test_build_rejects_bad_vertex_index():
    with pytest.raises(MeshValidationError):
        build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 7, 1.0)])


def test_build_rejects_nonmanifold_edge():
    pts = [(0, 0), (2, 0), (1, 1), (1, -1), (3, 1)]
    faces = [(0, 1, 2, 1.0), (0, 3, 1, 1.0), (0, 1, 4, 1.0)]
    with pytest.raises(MeshValidationError):
        build_mesh(pts, faces)


def test_disconnected_rejected_unless_allowed():
    with pytest.raises(MeshValidationError):
        parse_mesh(DISCONNECTED_TEXT)
    mesh = parse_mesh(DISCONNECTED_TEXT, allow_disconnected=True)
    assert len(mesh.faces) == 2


def test_locate_point_features(two_region_mesh):
    mesh = two_region_mesh
    for i in range(len(mesh.vertices)):
        assert locate_point(mesh, mesh.vertices[i]) == ("vertex", i)
    for i in range(len(mesh.faces)):
        assert locate_point(mesh, mesh.face_centroid(i)) == ("face", i)
    for ei, e in enumerate(mesh.edges):
        mid = geom.lerp(*mesh.edge_points(ei), 0.5)
        assert locate_point(mesh, mid) == ("edge", ei)
    assert locate_point(mesh, (-5.0, -5.0)).kind == "outside"
    assert locate_point(mesh, (2.0, 7.0)).kind == "outside"


def test_edge_sequence_faces_basics():
    mesh = two_face_mesh()
    diag = mesh.edge_id(0, 2)
    assert edge_sequence_faces(mesh, [], 1) == [1]
    assert edge_sequence_faces(mesh, [diag], 0) == [0, 1]
    with pytest.raises(MeshError):
        # after crossing the diagonal we are in face 1, which edge (1,2) does not border
        edge_sequence_faces(mesh, [diag, mesh.edge_id(1, 2)], 0)
    with pytest.raises(MeshError):
        edge_sequence_faces(mesh, [mesh.edge_id(0, 1)], 0)  # boundary edge


def test_stats_single(single_mesh):
    st = compute_stats(single_mesh)
    assert st.n == 3
    assert st.l_min == 3.0 and st.l_max == 5.0
    assert st.w_min == st.w_max == 2.0
    assert st.mu == 1.0
    assert st.theta_cm == 0.0  # no weight contrast anywhere


def test_stats_two_region(two_region_mesh):
    st = compute_stats(two_region_mesh)
    assert st.n == 6
    assert st.mu == 4.0
    # steepest critical incidence over interior edges: entering 1 from 4
    assert st.theta_cm == pytest.approx(math.asin(0.25), abs=1e-15)


def test_mesh_helpers(two_region_mesh):
    mesh = two_region_mesh
    diag = mesh.edge_id(1, 4)
    f0, f1 = mesh.edges[diag].faces
    assert mesh.other_face(diag, f0) == f1
    assert mesh.other_face(diag, f1) == f0
    opp = mesh.face_other_vertex(f0, diag)
    assert opp not in (mesh.edges[diag].u, mesh.edges[diag].v)
    a, b = mesh.edge_points(diag)
    assert mesh.edge_length(diag) == pytest.approx(geom.dist(a, b), rel=1e-15)
