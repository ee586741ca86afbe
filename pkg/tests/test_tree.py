"""In-order indexing of the ray family tree: spans, counts, k-th selection."""

import math
import random

import pytest

from wrpath.wavefront.sources import RayRef, SourceBook

from helpers import two_face_mesh


def _family_book():
    """Vertex fan with two wedges plus nested critical children.

    Geometry is irrelevant for ordering; only attach parameters, signs, and
    grid counts matter.
    """
    book = SourceBook(two_face_mesh(), budget=32)
    src = book.new_vertex_source(0, 0.0, delta=0.01)
    w0 = book.add_wedge(src, 0, 0.10, 0.50)
    w1 = book.add_wedge(src, 1, 0.70, 0.40)
    assert w0 is not None and w1 is not None

    frame = dict(point=(0.0, 0.0), edge=0, face=0, d0=1.0, side=1.0,
                 t_hat=(1.0, 0.0), n_hat=(0.0, 1.0))
    a1 = w0.i_lo + 2.5
    c1 = book.new_critical_source(src.node_id, a1, 1.0, delta=0.05,
                                  theta_hi=0.30, theta_lo=0.05, **frame)
    a2 = w1.i_lo + 1.3
    c2 = book.new_critical_source(src.node_id, a2, -1.0, delta=0.04,
                                  theta_hi=0.28, theta_lo=0.10, **frame)
    # grandchild hanging inside c1's grid
    c3 = book.new_critical_source(c1.node_id, 1.5, -1.0, delta=0.04,
                                  theta_hi=0.20, theta_lo=0.10, **frame)
    return book, src, (c1, c2, c3)


def _all_refs(book):
    refs = []
    for src in book.sources:
        if src.kind == "vertex":
            for w in src.wedges:
                refs.extend(RayRef(src.sid, i) for i in range(w.i_lo, w.i_hi + 1))
        else:
            refs.extend(RayRef(src.sid, i) for i in range(src.count))
    return refs


def test_wedge_grid_spacing_and_bounds():
    book, src, _ = _family_book()
    windows = [(0.10, 0.60), (0.70, 1.10)]
    for w, (lo, hi) in zip(src.wedges, windows):
        angs = [w.angle_of(i) for i in range(w.i_lo, w.i_hi + 1)]
        for a, b in zip(angs, angs[1:]):
            assert b - a == pytest.approx(w.delta, abs=1e-12)
        assert angs[0] >= lo - 1e-12
        assert angs[-1] <= hi + 1e-12


def test_subtree_count_matches_enumeration():
    book, src, _ = _family_book()
    assert book.subtree_count(src.node_id) == len(_all_refs(book))


def test_children_order_between_parent_rays():
    book, src, (c1, _c2, _c3) = _family_book()
    base = c1.node_id  # attached at i_lo + 2.5 of wedge 0
    lo_i = src.wedges[0].i_lo
    p_lo = book.pos(RayRef(src.sid, lo_i + 2))
    p_hi = book.pos(RayRef(src.sid, lo_i + 3))
    for i in range(c1.count):
        p = book.pos(RayRef(c1.sid, i))
        assert p_lo < p < p_hi
    assert book.nodes[base].parent == src.node_id


def test_span_atoms_against_brute_force():
    book, _src, _ = _family_book()
    ordered = sorted(_all_refs(book), key=book.pos)
    rng = random.Random(5)
    n = len(ordered)
    for _ in range(200):
        i = rng.randrange(n - 1)
        j = rng.randrange(i + 1, n)
        atoms = book.span_atoms(ordered[i], ordered[j])
        assert book.atoms_count(atoms) == j - i - 1
        if j - i - 1 > 0:
            for k in {0, (j - i - 2) // 2, j - i - 2}:
                got = book.atoms_kth(atoms, k)
                assert book.pos(got) == book.pos(ordered[i + 1 + k])


def test_span_adjacent_is_empty():
    book, _src, _ = _family_book()
    ordered = sorted(_all_refs(book), key=book.pos)
    for a, b in zip(ordered, ordered[1:]):
        assert book.atoms_count(book.span_atoms(a, b)) == 0


def test_span_is_orientation_free():
    book, _src, _ = _family_book()
    ordered = sorted(_all_refs(book), key=book.pos)
    a, b = ordered[3], ordered[-4]
    fwd = book.atoms_count(book.span_atoms(a, b))
    rev = book.atoms_count(book.span_atoms(b, a))
    assert fwd == rev == len(ordered) - 8


def test_critical_source_grid_angles():
    book, _src, (c1, _c2, _c3) = _family_book()
    assert c1.count == math.floor((0.30 - 0.05) / 0.05) + 1
    assert c1.angle_from_normal(0) == pytest.approx(0.30, abs=1e-15)
    assert c1.angle_from_normal(c1.count - 1) == pytest.approx(0.05, abs=1e-15)
    for i in range(c1.count):
        d = c1.direction_of(i)
        assert math.hypot(*d) == pytest.approx(1.0, abs=1e-12)


def test_segment_source_rejects_short_intervals():
    book, _src, _ = _family_book()
    got = book.new_segment_source(
        edge=0, entry=(0.0, 0.0), far=(0.001, 0.0), far_vertex=1, face=0,
        d0=0.0, sigma=0.01, w_edge=1.0, direction=(0.0, 1.0), root_vertex=0,
    )
    assert got is None
