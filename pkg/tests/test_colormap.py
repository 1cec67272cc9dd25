import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from arpipe import vtk
from arpipe.colormap import (
    ColorMap,
    RangeSpec,
    builtin_colormaps,
    compute_range,
    compute_ranges,
    get_colormap,
    map_scalars,
    parse_colormap,
)
from arpipe.errors import InvalidParameter
from arpipe.synthetic import grid_from_cells

BW = ColorMap("bw", [[0, 0, 0, 0], [1, 1, 1, 1]])


def test_endpoints_and_midpoint():
    out = map_scalars([0.0, 10.0, 5.0], BW, (0.0, 10.0))
    np.testing.assert_array_equal(out, [[0, 0, 0, 255], [255, 255, 255, 255], [128, 128, 128, 255]])


def test_clamping_and_nan():
    out = map_scalars([-1e9, 1e9, np.nan, np.inf], BW, (0.0, 1.0))
    np.testing.assert_array_equal(out[:, 0], [0, 255, 0, 255])


def test_builtin_maps():
    assert builtin_colormaps() == ["coolwarm", "grayscale", "jet", "plasma", "viridis"]
    for name in builtin_colormaps():
        cmap = get_colormap(name)
        assert 8 <= len(cmap.control_points) <= 32
    assert get_colormap("gray").name == "grayscale"
    with pytest.raises(InvalidParameter):
        get_colormap("nope")


@pytest.mark.parametrize("name", ["viridis", "plasma", "coolwarm", "jet"])
def test_tables_track_reference_maps(name):
    mpl = pytest.importorskip("matplotlib")
    ref = mpl.colormaps[name]
    # compare at the reference lookup table's own nodes, entry i sits at i/255
    i = np.arange(ref.N)
    ours = get_colormap(name)(i / (ref.N - 1))
    assert np.abs(ours - ref(i)[:, :3]).max() < 1.0 / 255.0


def test_user_colormap_file(tmp_path):
    path = tmp_path / "fire.txt"
    path.write_text("# t r g b\n0 0 0 0\n0.5 1 0 0\n1 1 1 0\n")
    cmap = get_colormap(str(path))
    np.testing.assert_array_equal(map_scalars([0.5], cmap, (0, 1))[0], [255, 0, 0, 255])
    with pytest.raises(InvalidParameter):
        parse_colormap("0 0 0 0\n0.5 1 0\n")
    with pytest.raises(InvalidParameter):
        parse_colormap("0.2 0 0 0\n1 1 1 1\n")


def test_range_spec_parse():
    assert RangeSpec.parse("global") == RangeSpec("global")
    assert RangeSpec.parse("perframe").mode == "perframe"
    assert RangeSpec.parse("-2.5:1e3") == RangeSpec("explicit", -2.5, 1000.0)
    for bad in ("3:1", "abc", "1:x"):
        with pytest.raises(InvalidParameter):
            RangeSpec.parse(bad)


def test_constant_field_range(caplog):
    with caplog.at_level(logging.WARNING):
        assert compute_ranges([np.full(10, 5.0)], RangeSpec()) == [(5.0, 6.0)]
    assert "degenerate" in caplog.text


def test_global_and_perframe_ranges():
    pts = np.eye(4)[:, :3]
    frames = [
        grid_from_cells(pts, [[0, 1, 2, 3]], vtk.TETRA, {"s": np.array(v)})
        for v in ([0.5, 1.0, 0.2, 0.7], [-1.0, 3.0, 0.0, 2.0])
    ]
    series = vtk.TimeSeries(tuple(frames))
    assert compute_range(series, "s") == [(-1.0, 3.0), (-1.0, 3.0)]
    assert compute_range(series, "s", spec=RangeSpec("perframe")) == [(0.2, 1.0), (-1.0, 3.0)]
    assert compute_range(series, "s", spec=RangeSpec.parse("0:10")) == [(0.0, 10.0)] * 2


def test_empty_values():
    assert map_scalars([], BW, (0, 1)).shape == (0, 4)


values = arrays(np.float64, st.integers(1, 200), elements=st.floats(-1e6, 1e6))


@given(values, st.floats(-100, 100), st.floats(0.001, 100))
def test_grayscale_monotone(v, lo, width):
    gray = get_colormap("grayscale")
    order = np.argsort(v, kind="stable")
    out = map_scalars(v[order], gray, (lo, lo + width)).astype(int)
    assert np.all(np.diff(out[:, :3], axis=0) >= 0)
    assert np.all(out[:, 3] == 255)


@given(values, st.integers(1, 7))
def test_chunking_does_not_change_colors(v, chunks):
    cmap = get_colormap("viridis")
    whole = map_scalars(v, cmap, (-10.0, 10.0))
    parts = np.concatenate([map_scalars(p, cmap, (-10.0, 10.0)) for p in np.array_split(v, chunks)])
    np.testing.assert_array_equal(whole, parts)
