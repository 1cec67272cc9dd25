"""PLY surface meshes with per-vertex colors (ASCII and binary little-endian)."""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from .errors import HeaderMalformed, TruncatedPayload, UnsupportedEncoding
from .mesh import SurfaceMesh, compute_vertex_normals
from .surface import triangulate_quads

log = logging.getLogger(__name__)

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
_KNOWN_VERTEX = {"x", "y", "z", "nx", "ny", "nz", "red", "green", "blue", "alpha"}


def write_ply(mesh: SurfaceMesh, encoding: str = "binary_little_endian") -> bytes:
    """Serialize triangles, normals and (when present) RGB colors.

    Vertex properties are written in the fixed order
    ``x y z nx ny nz [red green blue]``.
    """
    if encoding not in ("ascii", "binary_little_endian"):
        raise UnsupportedEncoding(f"cannot write PLY encoding {encoding!r}")
    if mesh.normals is None:
        mesh = compute_vertex_normals(mesh)
    colored = mesh.colors is not None
    header = [
        "ply",
        f"format {encoding} 1.0",
        "comment arpipe",
        f"element vertex {mesh.n_vertices}",
        "property float x", "property float y", "property float z",
        "property float nx", "property float ny", "property float nz",
    ]
    if colored:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header += [f"element face {mesh.n_triangles}", "property list uchar int vertex_indices", "end_header"]
    head = ("\n".join(header) + "\n").encode("ascii")

    fields = [("pos", "<f4", 3), ("nrm", "<f4", 3)]
    if colored:
        fields.append(("rgb", "u1", 3))
    verts = np.empty(mesh.n_vertices, dtype=fields)
    verts["pos"] = mesh.positions
    verts["nrm"] = mesh.normals
    if colored:
        verts["rgb"] = mesh.colors[:, :3]
    faces = np.empty(mesh.n_triangles, dtype=[("n", "u1"), ("idx", "<i4", 3)])
    faces["n"] = 3
    faces["idx"] = mesh.triangles

    if encoding == "binary_little_endian":
        return head + verts.tobytes() + faces.tobytes()
    lines = []
    pos = verts["pos"].astype(np.float64).tolist()
    nrm = verts["nrm"].astype(np.float64).tolist()
    rgb = mesh.colors[:, :3].tolist() if colored else None
    for i in range(mesh.n_vertices):
        row = [_f32(v) for v in pos[i]] + [_f32(v) for v in nrm[i]]
        if colored:
            row += [str(c) for c in rgb[i]]
        lines.append(" ".join(row))
    for a, b, c in mesh.triangles.tolist():
        lines.append(f"3 {a} {b} {c}")
    return head + ("\n".join(lines) + "\n").encode("ascii")


def _f32(v: float) -> str:
    # 9 significant digits round-trip any float32
    return f"{v:.9g}"


def _parse_header(data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise HeaderMalformed("not a PLY file (missing 'ply' magic or end_header)")
    nl = data.find(b"\n", end)
    body_start = len(data) if nl < 0 else nl + 1
    lines = data[:end].decode("latin-1").splitlines()[1:]
    encoding = None
    elements: List[Tuple[str, int, list]] = []
    for line in lines:
        parts = line.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if len(parts) < 2:
                raise HeaderMalformed("format line incomplete")
            encoding = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3 or not parts[2].isdigit():
                raise HeaderMalformed(f"bad element line {line!r}")
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise HeaderMalformed("property before any element")
            if len(parts) == 5 and parts[1] == "list":
                if parts[2] not in _PLY_TYPES or parts[3] not in _PLY_TYPES:
                    raise HeaderMalformed(f"bad list property {line!r}")
                elements[-1][2].append((parts[4], "list", _PLY_TYPES[parts[2]], _PLY_TYPES[parts[3]]))
            elif len(parts) == 3 and parts[1] in _PLY_TYPES:
                elements[-1][2].append((parts[2], "scalar", _PLY_TYPES[parts[1]], None))
            else:
                raise HeaderMalformed(f"bad property line {line!r}")
        else:
            raise HeaderMalformed(f"unexpected header line {line!r}")
    if encoding is None:
        raise HeaderMalformed("PLY header lacks a format line")
    if encoding == "binary_big_endian":
        raise UnsupportedEncoding("big-endian PLY is not supported")
    if encoding not in ("ascii", "binary_little_endian"):
        raise HeaderMalformed(f"unknown PLY format {encoding!r}")
    return encoding, elements, body_start


def _read_binary_element(data, pos, count, props):
    """Returns (dict of per-property values, new position)."""
    if all(kind == "scalar" for _, kind, _, _ in props):
        dtype = np.dtype([(name, "<" + t) for name, _, t, _ in props])
        nbytes = dtype.itemsize * count
        if pos + nbytes > len(data):
            raise TruncatedPayload(f"element needs {nbytes} bytes, {len(data) - pos} available")
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        return {n: arr[n] for n in arr.dtype.names}, pos + nbytes
    # fast path: a single list property whose lengths are all 3 (or all 4)
    if len(props) == 1 and props[0][1] == "list":
        name, _, ct, it = props[0]
        cnt_size = np.dtype(ct).itemsize
        if pos + cnt_size <= len(data) and count:
            first = int(np.frombuffer(data, dtype="<" + ct, count=1, offset=pos)[0])
            dtype = np.dtype([("n", "<" + ct), ("v", "<" + it, (first,))])
            if pos + dtype.itemsize * count <= len(data):
                arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
                if (arr["n"] == first).all():
                    return {name: np.array(arr["v"], dtype=np.int64)}, pos + dtype.itemsize * count
    out = {name: [] for name, *_ in props}
    for _ in range(count):
        for name, kind, t, it in props:
            size = np.dtype(t).itemsize
            if pos + size > len(data):
                raise TruncatedPayload("PLY payload ends inside an element")
            value = np.frombuffer(data, dtype="<" + t, count=1, offset=pos)[0]
            pos += size
            if kind == "list":
                n = int(value)
                isz = np.dtype(it).itemsize
                if pos + n * isz > len(data):
                    raise TruncatedPayload("PLY payload ends inside a list")
                out[name].append(np.frombuffer(data, dtype="<" + it, count=n, offset=pos).tolist())
                pos += n * isz
            else:
                out[name].append(value)
    result = {}
    for name, kind, t, _ in props:
        result[name] = out[name] if kind == "list" else np.array(out[name], dtype=t)
    return result, pos


def _read_ascii_element(tokens, i, count, props):
    out = {name: [] for name, *_ in props}
    for _ in range(count):
        for name, kind, t, _ in props:
            if i >= len(tokens):
                raise TruncatedPayload("PLY payload ends inside an element")
            if kind == "list":
                n = int(tokens[i])
                if i + 1 + n > len(tokens):
                    raise TruncatedPayload("PLY payload ends inside a list")
                out[name].append([int(x) for x in tokens[i + 1:i + 1 + n]])
                i += 1 + n
            else:
                out[name].append(float(tokens[i]))
                i += 1
    result = {}
    for name, kind, t, _ in props:
        result[name] = out[name] if kind == "list" else np.array(out[name], dtype=t)
    return result, i


def _triangulate(polys) -> np.ndarray:
    if isinstance(polys, np.ndarray):
        polys = polys.reshape(len(polys), -1)
        if polys.shape[1] == 3:
            return polys.astype(np.int64)
        if polys.shape[1] == 4:
            return triangulate_quads(polys)
        polys = polys.tolist()
    tris = []
    for poly in polys:
        if len(poly) < 3:
            continue
        for k in range(1, len(poly) - 1):
            tris.append((poly[0], poly[k], poly[k + 1]))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def read_ply(data: bytes) -> SurfaceMesh:
    """Parse a PLY surface.  Quads split along (v0, v2), larger polygons are
    fanned; missing normals are recomputed; alpha is forced to 255."""
    encoding, elements, pos = _parse_header(data)
    parsed = {}
    tokens, ti = None, 0
    if encoding == "ascii":
        tokens = data[pos:].split()
    for name, count, props in elements:
        if encoding == "ascii":
            parsed[name], ti = _read_ascii_element(tokens, ti, count, props)
        else:
            parsed[name], pos = _read_binary_element(data, pos, count, props)

    vertex = parsed.get("vertex")
    if vertex is None or not all(k in vertex for k in ("x", "y", "z")):
        raise HeaderMalformed("PLY has no vertex element with x, y, z")
    for name in vertex:
        if name not in _KNOWN_VERTEX:
            log.warning("skipping unknown PLY vertex property %r", name)
    for name in parsed:
        if name not in ("vertex", "face"):
            log.warning("skipping unknown PLY element %r", name)
    positions = np.column_stack([np.asarray(vertex[k], dtype=np.float64) for k in "xyz"])
    normals = None
    if all(k in vertex for k in ("nx", "ny", "nz")):
        normals = np.column_stack([np.asarray(vertex[k], dtype=np.float64) for k in ("nx", "ny", "nz")])
    colors = None
    if all(k in vertex for k in ("red", "green", "blue")):
        rgb = np.column_stack([np.asarray(vertex[k]) for k in ("red", "green", "blue")])
        if rgb.dtype.kind == "f" and rgb.max(initial=0) <= 1.0:
            rgb = np.round(rgb * 255.0)
        colors = np.concatenate([rgb.astype(np.uint8), np.full((len(rgb), 1), 255, np.uint8)], axis=1)

    face = parsed.get("face", {})
    lists = face.get("vertex_indices", face.get("vertex_index"))
    tris = _triangulate(lists) if lists is not None else np.zeros((0, 3), dtype=np.int64)
    mesh = SurfaceMesh(positions, tris, normals, colors)
    return compute_vertex_normals(mesh) if normals is None else mesh
