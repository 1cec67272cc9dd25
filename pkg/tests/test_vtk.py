import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from arpipe import vtk
from arpipe.errors import (
    BadComponent,
    EmptySeries,
    HeaderMalformed,
    IndexOutOfRange,
    TruncatedPayload,
    UnknownField,
    UnsupportedCellType,
    UnsupportedDataset,
)
from arpipe.synthetic import bending_series, grid_from_cells
from oracles import tetra_binary


def test_parse_tetra_fixture(tetra_bytes):
    g = vtk.parse_vtk(tetra_bytes)
    assert g.n_points == 4 and g.n_cells == 1
    assert g.cells == [(vtk.TETRA, (0, 1, 2, 3))]
    assert g.points.dtype == np.float64
    np.testing.assert_array_equal(g.point_fields["stress"], [0.5, 1.25, -2.0, 3.75])
    assert g.describe() == "4 points, 1 cell (tetra), fields: stress[4]"


def test_binary_fixture_matches_ascii(tetra_bytes):
    assert vtk.parse_vtk(tetra_binary()) == vtk.parse_vtk(tetra_bytes)


def test_index_out_of_range(tetra_bytes):
    bad = tetra_bytes.replace(b"4 0 1 2 3", b"4 0 1 2 7")
    with pytest.raises(IndexOutOfRange):
        vtk.parse_vtk(bad)


def test_error_cases(tetra_bytes):
    with pytest.raises(HeaderMalformed):
        vtk.parse_vtk(b"not a vtk file\n\n\n")
    with pytest.raises(UnsupportedDataset):
        vtk.parse_vtk(tetra_bytes.replace(b"UNSTRUCTURED_GRID", b"POLYDATA"))
    with pytest.raises(UnsupportedCellType):
        vtk.parse_vtk(tetra_bytes.replace(b"CELL_TYPES 1\n10", b"CELL_TYPES 1\n14"))
    with pytest.raises((TruncatedPayload, HeaderMalformed)):
        vtk.parse_vtk(tetra_bytes.split(b"CELLS")[0] + b"CELLS 1 5\n4 0 1")
    with pytest.raises(TruncatedPayload):
        vtk.parse_vtk(tetra_binary()[:-10])
    with pytest.raises(HeaderMalformed):
        vtk.parse_vtk(tetra_bytes.replace(b"CELL_TYPES 1\n10\n", b""))


def test_version_5_offsets_layout():
    text = b"""# vtk DataFile Version 5.1
v5
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 5 float
0 0 0 1 0 0 0 1 0 0 0 1 1 1 1
CELLS 3 6
OFFSETS vtktypeint64
0 4 6
CONNECTIVITY vtktypeint64
0 1 2 3 3 4
CELL_TYPES 2
10
3
CELL_DATA 2
FIELD FieldData 1
id 1 2 int
7 8
"""
    g = vtk.parse_vtk(text)
    assert g.cells == [(vtk.TETRA, (0, 1, 2, 3)), (vtk.LINE, (3, 4))]
    np.testing.assert_array_equal(g.cell_fields["id"], [7, 8])


def test_vectors_and_metadata_are_handled(tetra_bytes):
    extra = b"""VECTORS displacement double
3 4 0 0 0 0 1 0 0 0 0 2
METADATA
INFORMATION 0

"""
    g = vtk.parse_vtk(tetra_bytes + extra)
    assert g.point_fields["displacement"].shape == (4, 3)
    np.testing.assert_allclose(vtk.select_field(g, "displacement"), [5.0, 0.0, 1.0, 2.0])
    np.testing.assert_allclose(vtk.select_field(g, "displacement", "mag"), [5.0, 0.0, 1.0, 2.0])
    np.testing.assert_array_equal(vtk.select_field(g, "displacement", "y"), [4, 0, 0, 0])


def test_select_field_contracts(tetra_bytes):
    g = vtk.parse_vtk(tetra_bytes)
    np.testing.assert_array_equal(vtk.select_field(g, "stress", "x"), g.point_fields["stress"])
    with pytest.raises(UnknownField):
        vtk.select_field(g, "strain")
    vec = grid_from_cells(g.points, [[0, 1, 2, 3]], vtk.TETRA, {"u": np.tile([3.0, 4.0, 0.0], (4, 1))})
    assert vtk.select_field(vec, "u", "magnitude")[0] == 5.0
    with pytest.raises(BadComponent):
        vtk.select_field(vec, "u", "w")


def test_cell_field_is_averaged_to_points(caplog):
    g = vtk.UnstructuredGrid(
        np.eye(3).tolist() + [[0, 0, 0], [5, 5, 5]],
        [vtk.TRIANGLE, vtk.TRIANGLE], [0, 3, 6], [0, 1, 2, 0, 1, 3],
        cell_fields={"p": [1.0, 3.0]},
    )
    with caplog.at_level(logging.WARNING):
        values = vtk.select_field(g, "p")
    assert "cell data" in caplog.text
    # points 0 and 1 shared by both cells; point 4 is isolated and gets the mean
    np.testing.assert_allclose(values, [2.0, 2.0, 1.0, 3.0, 2.0])


def test_series_constant_connectivity(tmp_path, tetra_bytes, hex_bytes):
    paths = []
    for i in range(3):
        p = tmp_path / f"t{i}.vtk"
        p.write_bytes(tetra_bytes)
        paths.append(p)
    s = vtk.load_series(paths, workers=2)
    assert len(s) == 3 and s.constant_connectivity
    h = tmp_path / "h.vtk"
    h.write_bytes(hex_bytes)
    mixed = vtk.load_series([paths[0], h])
    assert not mixed.constant_connectivity and mixed.first_mismatch() == 1
    with pytest.raises(EmptySeries):
        vtk.load_series([])


def test_bending_series_connectivity(tmp_path):
    frames = bending_series(10)
    paths = []
    for i, g in enumerate(frames):
        p = tmp_path / f"frame_{i}.vtk"
        p.write_bytes(vtk.write_vtk(g, binary=i % 2 == 1))
        paths.append(p)
    s = vtk.load_series(paths)
    assert len(s) == 10 and s.constant_connectivity
    assert all(a == b for a, b in zip(s.frames, frames))


def test_parse_errors_name_the_file(tmp_path):
    p = tmp_path / "broken.vtk"
    p.write_bytes(b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\n")
    with pytest.raises(UnsupportedDataset, match="broken.vtk"):
        vtk.read_vtk(p)


def test_parallel_parse_is_deterministic(tmp_path):
    paths = []
    for i, g in enumerate(bending_series(6)):
        p = tmp_path / f"f{i}.vtk"
        p.write_bytes(vtk.write_vtk(g))
        paths.append(p)
    one = vtk.load_series(paths, workers=1)
    many = vtk.load_series(paths, workers=4)
    assert all(a == b for a, b in zip(one.frames, many.frames))


def test_grid_is_immutable(tetra_bytes):
    g = vtk.parse_vtk(tetra_bytes)
    with pytest.raises(ValueError):
        g.points[0, 0] = 1.0


# --------------------------------------------------------------------------
# round-trip properties

ARITY = {vtk.LINE: 2, vtk.TRIANGLE: 3, vtk.QUAD: 4, vtk.TETRA: 4, vtk.HEXAHEDRON: 8, vtk.WEDGE: 6}


@st.composite
def small_grids(draw):
    n_points = draw(st.integers(8, 30))
    floats = st.floats(-1e6, 1e6, allow_nan=False, width=64)
    points = np.array(draw(st.lists(floats, min_size=3 * n_points, max_size=3 * n_points))).reshape(-1, 3)
    n_cells = draw(st.integers(0, 50))
    types = draw(st.lists(st.sampled_from(sorted(ARITY)), min_size=n_cells, max_size=n_cells))
    conn = [draw(st.lists(st.integers(0, n_points - 1), min_size=ARITY[t], max_size=ARITY[t])) for t in types]
    offsets = np.concatenate([[0], np.cumsum([ARITY[t] for t in types])]).astype(int)
    fields = {}
    if draw(st.booleans()):
        fields["s"] = np.array(draw(st.lists(floats, min_size=n_points, max_size=n_points)))
    if draw(st.booleans()):
        fields["v"] = np.array(draw(st.lists(floats, min_size=3 * n_points, max_size=3 * n_points))).reshape(-1, 3)
    cell_fields = {}
    if n_cells and draw(st.booleans()):
        cell_fields["t2"] = np.array(draw(st.lists(floats, min_size=2 * n_cells, max_size=2 * n_cells))).reshape(-1, 2)
    flat = [i for c in conn for i in c]
    return vtk.UnstructuredGrid(points, types, offsets, flat, fields, cell_fields)


@given(small_grids())
def test_binary_round_trip_exact(grid):
    assert vtk.parse_vtk(vtk.write_vtk(grid, binary=True)) == grid


@given(small_grids())
def test_ascii_round_trip_exact(grid):
    assert vtk.parse_vtk(vtk.write_vtk(grid, binary=False)) == grid
