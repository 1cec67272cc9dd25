import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arpipe import vtk
from arpipe.decimate import decimate, replay
from arpipe.errors import BadRatio, ConnectivityMismatch
from arpipe.mesh import SurfaceMesh, boundary_edges, euler_characteristic
from arpipe.surface import extract_boundary
from arpipe.synthetic import grid_from_cells, icosphere, quad_grid
from oracles import oriented_consistently, triangle_areas, watertight


@pytest.fixture(scope="module")
def sphere():
    return icosphere(3)


@pytest.fixture(scope="module")
def half(sphere):
    return decimate(sphere, 0.5)


def test_ratio_one_is_identity(sphere):
    out, log = decimate(sphere, 1.0)
    assert out is sphere and len(log) == 0
    assert replay(sphere, log) is sphere


def test_icosphere_half(sphere, half):
    out, log = half
    assert sphere.n_triangles == 1280
    assert out.n_triangles <= 640
    assert watertight(out.triangles) and oriented_consistently(out.triangles)
    assert euler_characteristic(out.triangles) == 2
    mean_in = triangle_areas(sphere.positions, sphere.triangles).mean()
    assert triangle_areas(out.positions, out.triangles).min() > 1e-12 * mean_in
    assert len(log) == sphere.n_vertices - out.n_vertices


def test_replay_on_origin_reproduces_connectivity(sphere, half):
    out, log = half
    again = replay(sphere, log)
    np.testing.assert_array_equal(again.triangles, out.triangles)


def test_replay_translated_frames(sphere, half):
    out, log = half
    base = replay(sphere, log)
    for k in range(1, 5):
        shift = np.array([0.3 * k, -0.1 * k, 2.0])
        frame = sphere.with_(positions=sphere.positions + shift)
        r = replay(frame, log)
        np.testing.assert_array_equal(r.triangles, out.triangles)
        np.testing.assert_allclose(r.positions, base.positions + shift, atol=1e-12)


def test_replay_guard(sphere, half):
    _, log = half
    extra = sphere.with_(triangles=np.vstack([sphere.triangles, [[0, 1, 2]]]))
    with pytest.raises(ConnectivityMismatch):
        replay(extra, log)


def test_deterministic(sphere, half):
    _, log = half
    _, log2 = decimate(sphere, 0.5)
    assert log == log2


def test_bad_ratio(sphere):
    for r in (0.0, -0.5, 1.5):
        with pytest.raises(BadRatio):
            decimate(sphere, r)


def test_boundary_vertices_stay_put():
    points, quads = quad_grid(8, 8)
    rng = np.random.default_rng(0)
    points[:, 2] = 0.05 * rng.standard_normal(len(points))
    sheet = extract_boundary(grid_from_cells(points, quads, vtk.QUAD))
    rim = np.unique(boundary_edges(sheet.triangles))
    out, log = decimate(sheet, 0.3)
    assert out.n_triangles < sheet.n_triangles
    assert not np.isin(log.pairs, rim).any()
    kept = log.remap[rim]
    np.testing.assert_array_equal(out.positions[kept], sheet.positions[rim])
    assert len(boundary_edges(out.triangles)) == len(boundary_edges(sheet.triangles))


def test_colors_follow_kept_vertex(sphere):
    colors = np.zeros((sphere.n_vertices, 4), np.uint8)
    colors[:, 0] = np.arange(sphere.n_vertices) % 251
    colors[:, 3] = 255
    out, log = decimate(sphere.with_(colors=colors), 0.5)
    survivors = np.flatnonzero(log.remap >= 0)
    np.testing.assert_array_equal(out.colors, colors[survivors])
    # the kept endpoint is always the lower index
    assert np.all(log.pairs[:, 0] < log.pairs[:, 1])


def test_tetrahedron_cannot_collapse():
    tet = SurfaceMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float),
                      [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
    out, log = decimate(tet, 0.1)
    assert out.n_triangles == 4 and len(log) == 0


@settings(max_examples=15)
@given(st.floats(0.1, 1.0))
def test_ratio_property(ratio):
    m = icosphere(2)
    out, log = decimate(m, ratio)
    assert out.n_triangles <= math.ceil(ratio * m.n_triangles)
    assert watertight(out.triangles)
    r = replay(m.with_(positions=m.positions * 2.0), log)
    np.testing.assert_array_equal(r.triangles, out.triangles)
