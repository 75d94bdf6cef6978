"""Mesh construction, uniform refinement, and conforming local refinement."""

import numpy as np
import pytest

from conftest import assert_valid_refinement, find_tjunctions, two_triangle_square

from oseenstress.mesh import (
    Mesh,
    build_mesh,
    load_mesh,
    make_lshape_mesh,
    make_square_piecewise_uniform,
    mesh_stats,
    is_piecewise_uniform,
    refine_marked,
    save_mesh,
    uniform_quad_refine,
)


def canonical_triangle_set(mesh: Mesh):
    """Order-independent geometric fingerprint of a triangulation."""
    pts = np.round(mesh.vertices[mesh.triangles], 12)  # (nt, 3, 2)
    # Sort vertices within each triangle, then sort triangles.
    order = np.lexsort((pts[:, :, 1], pts[:, :, 0]))
    inner = np.take_along_axis(pts, order[:, :, None], axis=1).reshape(mesh.nt, 6)
    outer = np.lexsort(inner.T[::-1])
    return inner[outer]


# ----------------------------------------------------------------------
# construction and invariants
# ----------------------------------------------------------------------


def test_square_mesh_basic_counts():
    mesh = make_square_piecewise_uniform()
    assert mesh.nt == 19
    assert np.array_equal(np.sort(np.unique(mesh.region)), np.arange(19))
    # Euler formula for a simply connected planar triangulation.
    assert mesh.nv - mesh.ne + mesh.nt == 1
    assert mesh.tri_areas().sum() == pytest.approx(1.0, abs=1e-14)


def test_lshape_mesh_basic_counts():
    mesh = make_lshape_mesh()
    assert mesh.nt == 24
    assert mesh.nv - mesh.ne + mesh.nt == 1
    assert mesh.tri_areas().sum() == pytest.approx(3.0, abs=1e-14)
    # The reentrant corner is a mesh vertex.
    d = np.linalg.norm(mesh.vertices, axis=1)
    assert d.min() == 0.0


def test_uniform_refinement_sequence():
    h_prev = None
    for level in range(4):
        mesh = make_square_piecewise_uniform(level)
        assert mesh.nt == 19 * 4**level
        assert is_piecewise_uniform(mesh)
        stats = mesh_stats(mesh)
        if h_prev is not None:
            assert stats.h_max == pytest.approx(h_prev / 2.0, rel=1e-12)
        h_prev = stats.h_max
        assert mesh.tri_areas().sum() == pytest.approx(1.0, abs=1e-12)


def test_uniform_quad_refine_preserves_region_and_orientation():
    mesh = make_square_piecewise_uniform()
    fine = uniform_quad_refine(mesh)
    assert fine.nt == 4 * mesh.nt
    assert np.all(fine.tri_areas() > 0)
    # Each child inherits its parent's region tag; area per region preserved.
    for r in range(19):
        coarse_area = mesh.tri_areas()[mesh.region == r].sum()
        fine_area = fine.tri_areas()[fine.region == r].sum()
        assert fine_area == pytest.approx(coarse_area, rel=1e-13)


def test_interior_edge_signs_are_opposite():
    mesh = make_square_piecewise_uniform(1)
    count = np.zeros(mesh.ne, dtype=int)
    total = np.zeros(mesh.ne, dtype=int)
    for t in range(mesh.nt):
        for le in range(3):
            e = mesh.tri_edges[t, le]
            count[e] += 1
            total[e] += mesh.tri_signs[t, le]
    interior = count == 2
    assert np.all(total[interior] == 0)
    boundary = count == 1
    assert np.array_equal(np.flatnonzero(boundary), np.sort(mesh.boundary_edges))


def test_build_mesh_validation():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    with pytest.raises(ValueError, match="duplicate"):
        build_mesh(np.vstack([verts, verts[:1]]), tris)
    with pytest.raises((ValueError, IndexError)):
        build_mesh(verts, np.array([[0, 1, 7]]))
    with pytest.raises(ValueError):
        build_mesh(verts, np.array([[0, 1, 1]]))  # degenerate triangle
    with pytest.raises(ValueError, match="nonconforming"):
        # Three triangles sharing one edge cannot be a planar 2-manifold.
        v5 = np.vstack([verts, [[0.5, -1.0]]])
        build_mesh(v5, np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]]))
    with pytest.raises(ValueError):
        build_mesh(verts, tris, region=np.zeros(5, dtype=int))


def test_build_mesh_reorients_clockwise_triangles():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = build_mesh(verts, np.array([[0, 2, 1], [0, 3, 2]]))
    assert np.all(mesh.tri_areas() > 0)
    assert mesh.tri_areas().sum() == pytest.approx(1.0, abs=1e-14)


def test_map_ref_points_hits_vertices():
    mesh = make_square_piecewise_uniform()
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    pts = mesh.map_ref_points(ref, np.arange(mesh.nt))
    assert pts.shape == (mesh.nt, 3, 2)
    expected = mesh.vertices[mesh.triangles]
    assert np.abs(pts - expected).max() < 1e-14


# ----------------------------------------------------------------------
# local refinement: red-green with conformity closure
# ----------------------------------------------------------------------


def test_refine_marked_single_triangle():
    mesh = two_triangle_square()
    fine = refine_marked(mesh, np.array([0]))
    # One red split (4 children) plus a green bisection of the neighbour.
    assert fine.nt == 6
    assert fine.green_pairs.shape == (1, 2)
    assert_valid_refinement(fine)
    assert fine.tri_areas().sum() == pytest.approx(1.0, abs=1e-14)


def test_refine_marked_all_matches_uniform_refinement():
    mesh = make_square_piecewise_uniform()
    a = refine_marked(mesh, np.arange(mesh.nt))
    b = uniform_quad_refine(mesh)
    assert a.nt == b.nt == 76
    assert a.nv == b.nv == 52
    assert a.green_pairs.size == 0
    assert np.array_equal(canonical_triangle_set(a), canonical_triangle_set(b))


def test_refine_marked_empty_is_identity():
    mesh = make_square_piecewise_uniform()
    same = refine_marked(mesh, np.array([], dtype=int))
    assert same.nt == mesh.nt
    assert np.array_equal(canonical_triangle_set(same), canonical_triangle_set(mesh))


def test_refine_marked_rejects_out_of_range():
    mesh = two_triangle_square()
    with pytest.raises(IndexError):
        refine_marked(mesh, np.array([5]))


def test_refine_marked_green_member():
    # Marking one member of a green pair must not leave a hanging node:
    # the parent is re-split red instead of stacking bisections.
    mesh = two_triangle_square()
    fine = refine_marked(mesh, np.array([0]))
    t1, t2 = fine.green_pairs[0]
    finer = refine_marked(fine, np.array([int(t1)]))
    assert_valid_refinement(finer)
    assert finer.tri_areas().sum() == pytest.approx(1.0, abs=1e-13)


def test_refine_marked_hanging_node_on_green_half_edge():
    # Regression: a red split whose new midpoint lands on the *half edge*
    # of an existing green bisection used to survive the skeleton closure
    # (the coalesced parent hides the sub-edge) and produce a geometric
    # T-junction that crashed the next refinement round.
    mesh = two_triangle_square()
    fine = refine_marked(mesh, np.array([0]))
    # Triangle 0 of `fine` is a non-green corner child whose edges include
    # half-edges of the coarse diagonal; marking it red forces the cascade.
    finer = refine_marked(fine, np.array([0]))
    assert_valid_refinement(finer)
    assert finer.nt == 13
    assert finer.tri_areas().sum() == pytest.approx(1.0, abs=1e-13)
    # And the result must remain refinable.
    again = refine_marked(finer, np.arange(finer.nt))
    assert_valid_refinement(again)


def test_refine_marked_random_drill():
    rng = np.random.default_rng(42)
    for start in ("square", "lshape"):
        mesh = make_square_piecewise_uniform() if start == "square" else make_lshape_mesh()
        total = mesh.tri_areas().sum()
        for _ in range(60):
            k = int(rng.integers(1, max(2, mesh.nt // 3)))
            marked = rng.choice(mesh.nt, size=k, replace=False)
            mesh = refine_marked(mesh, marked)
            assert_valid_refinement(mesh)
            assert mesh.tri_areas().sum() == pytest.approx(total, rel=1e-12)
            if mesh.nt > 4000:
                break


def test_refine_marked_repeated_corner_marking_keeps_shape_regularity():
    # Repeatedly refining only the elements at the reentrant corner is the
    # adaptive worst case; green closure must keep the aspect ratios bounded.
    mesh = make_lshape_mesh()
    for _ in range(10):
        d = np.linalg.norm(mesh.tri_centroids(), axis=1)
        marked = np.argsort(d)[:4]
        mesh = refine_marked(mesh, marked)
        assert_valid_refinement(mesh)
    assert mesh_stats(mesh).max_ratio <= 8.0


# ----------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    mesh = refine_marked(make_lshape_mesh(), np.array([0, 5, 7]))
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.region, mesh.region)
    assert np.array_equal(back.vertices, mesh.vertices)


def test_load_mesh_rejects_truncated_file(tmp_path):
    mesh = make_square_piecewise_uniform()
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:-3]) + "\n")
    with pytest.raises(ValueError):
        load_mesh(path)


def test_find_tjunctions_detects_constructed_one():
    # Sanity-check the scanner itself on a deliberately nonconforming set
    # of coordinates (not a Mesh: build_mesh would reject it).
    class Fake:
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [0.5, 1.0]])
        edges = np.array([[0, 1], [0, 3], [1, 3], [2, 3]])

    assert find_tjunctions(Fake()) == [(0, 1, 2)]
