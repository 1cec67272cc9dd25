import json
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from arpipe.animate import build_morph, build_stop_motion
from arpipe.errors import EmptyGeometry
from arpipe.gltf import export_glb, pack_glb, read_glb, summarize_glb, validate_glb
from arpipe.mesh import SurfaceMesh, Transform, compute_vertex_normals, quat_from_axis_angle
from arpipe.surface import extract_boundary
from arpipe.synthetic import bending_series, icosphere
from oracles import DecodedGLB


def triangle():
    return SurfaceMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]],
                       colors=[[255, 0, 0], [0, 255, 0], [0, 0, 255]])


def test_header_of_minimal_mesh():
    data = export_glb(triangle())
    assert data[:4] == bytes([0x67, 0x6C, 0x54, 0x46])
    magic, version, length = struct.unpack_from("<III", data)
    assert version == 2 and length == len(data)


def test_json_chunk_padding():
    for source in (triangle(), icosphere(1), build_stop_motion([icosphere(0)] * 3, 4)):
        data = export_glb(source)
        jlen, jtype = struct.unpack_from("<I4s", data, 12)
        assert jtype == b"JSON" and jlen % 4 == 0
        text = data[20:20 + jlen]
        pad = len(text) - len(text.rstrip(b" "))
        assert text.rstrip(b" ").endswith(b"}") and pad < 4
        assert b"\x00" not in text


def test_decode_reproduces_mesh():
    mesh = compute_vertex_normals(icosphere(2))
    rng = np.random.default_rng(1)
    mesh = mesh.with_(colors=rng.integers(0, 256, (mesh.n_vertices, 4), dtype=np.uint8))
    g = DecodedGLB(export_glb(mesh))
    np.testing.assert_array_equal(g.positions(), mesh.positions.astype(np.float32))
    np.testing.assert_array_equal(g.indices(), mesh.triangles)
    np.testing.assert_array_equal(g.colors(), mesh.colors)
    acc = g.json["accessors"][g.primitive()["attributes"]["COLOR_0"]]
    assert acc["normalized"] and acc["componentType"] == 5121 and acc["type"] == "VEC4"
    assert g.json["accessors"][g.primitive()["indices"]]["componentType"] == 5123


def test_large_mesh_uses_32bit_indices():
    n = 70000
    pos = np.random.default_rng(0).normal(size=(n, 3))
    tris = np.arange(n - n % 3).reshape(-1, 3)
    data = export_glb(SurfaceMesh(pos, tris))
    g = DecodedGLB(data)
    assert g.json["accessors"][g.primitive()["indices"]]["componentType"] == 5125
    np.testing.assert_array_equal(g.indices(), tris)
    assert validate_glb(data).ok


def test_morph_layout_for_ten_frames():
    meshes = [extract_boundary(f) for f in bending_series(10)]
    data = export_glb(build_morph(meshes, 10))
    g = DecodedGLB(data)
    assert len(g.morph_targets()) == 9
    times, out, interp = g.sampler(0, 0)
    assert len(times) == 10 and len(out) == 90 and interp == "STEP"
    for i, m in enumerate(meshes):
        got = g.morph_positions(times[i])
        scale = np.abs(m.positions).max()
        assert np.abs(got - m.positions).max() <= 1e-6 * scale
    report = validate_glb(data)
    assert report.ok, str(report)


def test_stop_motion_layout():
    meshes = [icosphere(1).with_(positions=icosphere(1).positions * (1 + i)) for i in range(4)]
    data = export_glb(build_stop_motion(meshes, 2))
    g = DecodedGLB(data)
    assert len(g.json["meshes"]) == 4
    assert g.json["nodes"][0]["children"] == [1, 2, 3, 4]
    for t, node in ((0.1, 1), (0.6, 2), (1.2, 3), (1.9, 4)):
        visible = [k for k in range(1, 5) if g.node_scale_at(k, t)[0] == 1.0]
        assert visible == [node]
    extras = g.json["animations"][0]["extras"]
    assert extras["mode"] == "stop_motion" and extras["duration"] == 2.0
    assert validate_glb(data).ok


def test_materials():
    lit = DecodedGLB(export_glb(triangle())).json
    mat = lit["materials"][0]
    assert mat["doubleSided"] and mat["pbrMetallicRoughness"]["metallicFactor"] == 0.0
    assert "extensionsUsed" not in lit
    unlit = DecodedGLB(export_glb(triangle(), "unlit")).json
    assert unlit["extensionsUsed"] == ["KHR_materials_unlit"]
    assert "KHR_materials_unlit" in unlit["materials"][0]["extensions"]


def test_root_transform():
    t = Transform(0.5, quat_from_axis_angle([0, 1, 0], 0.3), [1, 2, 3])
    root = DecodedGLB(export_glb(triangle(), transform=t)).json["nodes"][0]
    assert root["scale"] == [0.5] * 3
    np.testing.assert_allclose(root["rotation"], t.rotation)
    assert root["translation"] == [1.0, 2.0, 3.0]


def test_determinism():
    meshes = [extract_boundary(f) for f in bending_series(4)]
    plan = build_morph(meshes, 5, "linear")
    assert export_glb(plan) == export_glb(plan)
    doc, _ = read_glb(export_glb(plan))
    raw = export_glb(plan)[20:20 + struct.unpack_from("<I", export_glb(plan), 12)[0]].rstrip(b" ")
    assert raw == json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def test_empty_geometry():
    with pytest.raises(EmptyGeometry):
        export_glb(SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3))))


def test_validator_flags_length_mismatch():
    data = bytearray(export_glb(triangle()))
    struct.pack_into("<I", data, 8, len(data) + 4)
    report = validate_glb(bytes(data))
    assert any("length mismatch" in m for m in report.messages())


def test_validator_flags_tampered_min():
    doc, binary = read_glb(export_glb(icosphere(1)))
    pos = doc["meshes"][0]["primitives"][0]["attributes"]["POSITION"]
    doc["accessors"][pos]["min"][0] += 1
    report = validate_glb(pack_glb(doc, binary))
    assert any("min/max mismatch" in m for m in report.messages())
    assert report.violations[0].offset > 0


def test_validator_flags_bad_index_and_truncation():
    doc, binary = read_glb(export_glb(triangle()))
    idx = doc["meshes"][0]["primitives"][0]["indices"]
    view = doc["bufferViews"][doc["accessors"][idx]["bufferView"]]
    b = bytearray(binary)
    struct.pack_into("<H", b, view["byteOffset"], 9)
    assert any("out of range" in m for m in validate_glb(pack_glb(doc, bytes(b))).messages())
    assert not validate_glb(export_glb(triangle())[:-8]).ok
    assert not validate_glb(b"garbage").ok


def test_summary():
    meshes = [extract_boundary(f) for f in bending_series(10)]
    info = summarize_glb(export_glb(build_morph(meshes, 5)))
    assert info["mode"] == "morph" and info["morph_targets"] == 9
    assert info["duration"] == pytest.approx(2.0)


@given(
    arrays(np.float64, st.tuples(st.integers(3, 40), st.just(3)), elements=st.floats(-1e4, 1e4)),
    st.data(),
)
def test_round_trip_property(pos, data):
    n = len(pos)
    k = data.draw(st.integers(1, 30))
    tris = data.draw(arrays(np.int64, (k, 3), elements=st.integers(0, n - 1)))
    colors = data.draw(arrays(np.uint8, (n, 4)))
    mesh = SurfaceMesh(pos, tris, colors=colors)
    out = export_glb(mesh)
    g = DecodedGLB(out)
    np.testing.assert_array_equal(g.positions(), pos.astype(np.float32))
    np.testing.assert_array_equal(g.indices(), tris)
    np.testing.assert_array_equal(g.colors(), colors)
    assert validate_glb(out).ok
