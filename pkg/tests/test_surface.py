import numpy as np
import pytest
from hypothesis import given, strategies as st

from arpipe import vtk
from arpipe.errors import DegenerateSegment, InvalidParameter, MissingNormals, NoLineCells, NoSurfaceCells
from arpipe.mesh import SurfaceMesh, compute_vertex_normals, euler_characteristic
from arpipe.surface import (
    boundary_faces,
    chain_segments,
    extract_boundary,
    solidify,
    triangulate_quads,
    tube,
)
from arpipe.synthetic import grid_from_cells, hex_lattice, icosphere, quad_grid, undulated_fiber
from oracles import (
    boundary_edge_count,
    brute_boundary_faces,
    grid_arrays,
    oriented_consistently,
    random_mixed_grid,
    watertight,
)


def one_hex():
    points, hexes = hex_lattice(1, 1, 1)
    return grid_from_cells(points, hexes, vtk.HEXAHEDRON)


def test_single_hex():
    m = extract_boundary(one_hex())
    assert (m.n_vertices, m.n_triangles) == (8, 12)
    assert watertight(m.triangles) and oriented_consistently(m.triangles)


def test_two_hexes_sharing_a_face():
    points, hexes = hex_lattice(2, 1, 1)
    grid = grid_from_cells(points, hexes, vtk.HEXAHEDRON)
    tris, _, quads, _ = boundary_faces(grid)
    assert len(tris) == 0 and len(quads) == 10
    expected = brute_boundary_faces(grid.cells)
    assert {tuple(sorted(q)) for q in quads.tolist()} == expected
    assert extract_boundary(grid).n_triangles == 20


def test_single_tetra_euler(tetra_bytes):
    m = extract_boundary(vtk.parse_vtk(tetra_bytes))
    assert m.n_triangles == 4 and m.n_vertices == 4
    assert euler_characteristic(m.triangles) == 2


def test_faces_point_away_from_their_cell():
    points, cells = random_mixed_grid(np.random.default_rng(3))
    grid = vtk.UnstructuredGrid(*grid_arrays(points, cells))
    tris, tri_keys, quads, quad_keys = boundary_faces(grid)
    for faces, keys in ((tris, tri_keys), (quads, quad_keys)):
        for face, (cell, _) in zip(faces.tolist(), keys.tolist()):
            p = points[face]
            normal = np.cross(p[1] - p[0], p[2] - p[0])
            centroid = points[list(cells[cell][1])].mean(axis=0)
            assert normal @ (p.mean(axis=0) - centroid) > 0


def test_full_lattice_is_closed_and_consistent():
    points, hexes = hex_lattice(3, 2, 2)
    m = extract_boundary(grid_from_cells(points, hexes, vtk.HEXAHEDRON))
    assert watertight(m.triangles) and oriented_consistently(m.triangles)
    assert euler_characteristic(m.triangles) == 2


def test_quad_split_rule():
    np.testing.assert_array_equal(triangulate_quads([[10, 11, 12, 13]]), [[10, 11, 12], [10, 12, 13]])


def test_surface_cells_pass_through_with_fields():
    points, quads = quad_grid(3, 2)
    grid = grid_from_cells(points, quads, vtk.QUAD, {"s": np.arange(len(points), dtype=float)})
    m = extract_boundary(grid)
    assert m.n_triangles == 12
    np.testing.assert_array_equal(m.point_data["s"], m.source_ids)


def test_lines_only_grid_has_no_surface():
    with pytest.raises(NoSurfaceCells):
        extract_boundary(undulated_fiber(5))


@pytest.mark.parametrize("seed", range(25))
def test_random_grids_match_brute_force(seed):
    points, cells = random_mixed_grid(np.random.default_rng(seed))
    grid = vtk.UnstructuredGrid(*grid_arrays(points, cells))
    tris, _, quads, _ = boundary_faces(grid)
    got = [tuple(sorted(f)) for f in tris.tolist() + quads.tolist()]
    assert len(got) == len(set(got))
    assert set(got) == brute_boundary_faces(cells)


# --------------------------------------------------------------------------
# solidify


def unit_quad_surface():
    return compute_vertex_normals(SurfaceMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]]))


def test_solidify_single_quad():
    src = unit_quad_surface()
    out = solidify(src, 0.1)
    b = boundary_edge_count(src.triangles)
    assert b == 4
    assert out.n_triangles == 2 * src.n_triangles + 2 * b == 12
    assert watertight(out.triangles) and oriented_consistently(out.triangles)
    np.testing.assert_allclose(out.positions[:4, 2], 0.05)
    np.testing.assert_allclose(out.positions[4:, 2], -0.05)


def test_solidify_closed_surface_doubles():
    sphere = icosphere(1)
    out = solidify(sphere, 0.05)
    assert out.n_triangles == 2 * sphere.n_triangles


def test_solidify_contracts():
    with pytest.raises(InvalidParameter):
        solidify(unit_quad_surface(), 0.0)
    with pytest.raises(MissingNormals):
        solidify(SurfaceMesh(np.eye(3), [[0, 1, 2]]), 0.1)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.001, 0.5))
def test_solidify_open_sheet_is_watertight(n, m, thickness):
    points, quads = quad_grid(n, m)
    sheet = extract_boundary(grid_from_cells(points, quads, vtk.QUAD))
    out = solidify(sheet, thickness)
    assert watertight(out.triangles)
    assert oriented_consistently(out.triangles)
    assert out.n_triangles == 2 * sheet.n_triangles + 2 * boundary_edge_count(sheet.triangles)


# --------------------------------------------------------------------------
# tubes


def polyline_grid(points):
    segs = [[i, i + 1] for i in range(len(points) - 1)]
    return grid_from_cells(np.asarray(points, dtype=float), segs, vtk.LINE)


def test_single_segment_counts():
    m = tube(polyline_grid([[0, 0, 0], [0, 0, 1]]), 0.1, sides=8, capped=True)
    assert m.n_vertices == 2 * 8 + 2
    assert m.n_triangles == 16 + 2 * 8 == 32
    assert watertight(m.triangles) and oriented_consistently(m.triangles)


def test_straight_polyline_counts():
    m = tube(polyline_grid([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]), 0.1, sides=4, capped=False)
    assert m.n_vertices == 16 and m.n_triangles == 24


def test_l_shape_radii():
    grid = polyline_grid([[0, 0, 0], [1, 0, 0], [1, 1, 0]])
    m = tube(grid, 0.05, sides=12)
    # oracle: distance from every ring vertex to its own polyline point
    for k, pid in enumerate([0, 1, 2]):
        ring = m.positions[k * 12:(k + 1) * 12]
        np.testing.assert_allclose(np.linalg.norm(ring - grid.points[pid], axis=1), 0.05, atol=1e-9)
    # the corner ring lies in the bisector plane
    corner = m.positions[12:24] - grid.points[1]
    bisector = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    np.testing.assert_allclose(corner @ bisector, 0.0, atol=1e-12)


def test_outward_normals_on_tube():
    grid = undulated_fiber(20)
    m = tube(grid, 0.05, sides=6, capped=False)
    radial = m.positions - grid.points[m.source_ids]
    assert np.all(np.einsum("ij,ij->i", radial, m.normals) > 0)


def test_closed_loop_and_branches():
    square = grid_from_cells(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1], [1, 2], [2, 3], [3, 0]], vtk.LINE
    )
    m = tube(square, 0.1, sides=5)
    assert m.n_vertices == 20  # a loop has no ends, so no caps
    assert watertight(m.triangles)
    star = grid_from_cells([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1], [0, 2], [0, 3]], vtk.LINE)
    chains = chain_segments(np.array([[0, 1], [0, 2], [0, 3]]))
    assert len(chains) == 3 and all(not closed for _, closed in chains)
    assert tube(star, 0.1, 4).n_vertices == 3 * (2 * 4 + 2)


def test_tube_errors():
    with pytest.raises(NoLineCells):
        tube(one_hex(), 0.1)
    with pytest.raises(DegenerateSegment):
        tube(polyline_grid([[0, 0, 0], [0, 0, 0]]), 0.1)
    with pytest.raises(InvalidParameter):
        tube(polyline_grid([[0, 0, 0], [1, 0, 0]]), 0.1, sides=2)


@given(
    st.lists(st.tuples(*[st.floats(-5, 5)] * 3), min_size=2, max_size=15),
    st.floats(0.001, 1.0),
    st.integers(3, 16),
    st.booleans(),
)
def test_tube_invariants(pts, radius, sides, capped):
    pts = np.array(pts)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if (seg < 1e-3).any():
        return
    grid = polyline_grid(pts)
    m = tube(grid, radius, sides, capped)
    assert m.n_vertices == len(pts) * sides + (2 if capped else 0)
    d = np.linalg.norm(m.positions - grid.points[m.source_ids], axis=1)
    rings = d[: len(pts) * sides]
    np.testing.assert_allclose(rings, radius, atol=1e-9)
