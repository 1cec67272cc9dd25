"""
Binary glTF 2.0 (GLB) writer and structural validator.

Layout: a single buffer, one buffer view per accessor, every view starting
on a 4-byte boundary.  The JSON chunk is serialized with sorted keys and
Python's shortest round-trip float repr, so equal inputs give equal bytes.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .animate import MORPH, STATIC, STOP_MOTION, AnimationPlan, static_plan
from .errors import EmptyGeometry, TooManyVertices, TruncatedPayload, UnknownFormat
from .mesh import SurfaceMesh, Transform, compute_vertex_normals

log = logging.getLogger(__name__)

GLB_MAGIC = 0x46546C67
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

FLOAT = 5126
UNSIGNED_BYTE = 5121
UNSIGNED_SHORT = 5123
UNSIGNED_INT = 5125
ARRAY_BUFFER = 34962
ELEMENT_ARRAY_BUFFER = 34963

COMPONENT_DTYPES = {
    5120: np.dtype("<i1"),
    5121: np.dtype("<u1"),
    5122: np.dtype("<i2"),
    5123: np.dtype("<u2"),
    5125: np.dtype("<u4"),
    5126: np.dtype("<f4"),
}
TYPE_SIZES = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4, "MAT2": 4, "MAT3": 9, "MAT4": 16}

MORPH_TARGET_WARN = 8
SIZE_WARN_BYTES = 25 * 1024 * 1024
MAX_VERTICES = 2 ** 32 - 1


class _Buffer:
    def __init__(self):
        self.data = bytearray()
        self.views: List[dict] = []
        self.accessors: List[dict] = []

    def add(self, array: np.ndarray, kind: str, component: int,
            target: Optional[int] = None, normalized: bool = False,
            minmax: bool = False) -> int:
        arr = np.ascontiguousarray(array, dtype=COMPONENT_DTYPES[component])
        self.data += b"\x00" * (-len(self.data) % 4)
        view = {"buffer": 0, "byteOffset": len(self.data), "byteLength": arr.nbytes}
        if target is not None:
            view["target"] = target
        self.data += arr.tobytes()
        self.views.append(view)
        count = len(arr) if kind != "SCALAR" else arr.size
        acc = {"bufferView": len(self.views) - 1, "componentType": component,
               "count": int(count), "type": kind}
        if normalized:
            acc["normalized"] = True
        if minmax:
            flat = arr.reshape(count, -1)
            acc["min"] = flat.min(axis=0).tolist()
            acc["max"] = flat.max(axis=0).tolist()
        self.accessors.append(acc)
        return len(self.accessors) - 1


def _material(mode: str) -> Tuple[dict, List[str]]:
    mat = {
        "name": "vertex_colors",
        "doubleSided": True,
        "pbrMetallicRoughness": {
            "baseColorFactor": [1.0, 1.0, 1.0, 1.0],
            "metallicFactor": 0.0,
            "roughnessFactor": 1.0,
        },
    }
    if mode == "unlit":
        mat["extensions"] = {"KHR_materials_unlit": {}}
        return mat, ["KHR_materials_unlit"]
    if mode != "lit":
        raise ValueError(f"material mode must be lit or unlit, got {mode!r}")
    return mat, []


def _primitive(buf: _Buffer, mesh: SurfaceMesh, targets: Optional[np.ndarray] = None) -> dict:
    if mesh.n_vertices == 0 or mesh.n_triangles == 0:
        raise EmptyGeometry("mesh has no triangles to export")
    if mesh.n_vertices > MAX_VERTICES:
        raise TooManyVertices(f"{mesh.n_vertices} vertices exceed the 32-bit index limit")
    if mesh.normals is None:
        mesh = compute_vertex_normals(mesh)
    attrs = {
        "POSITION": buf.add(mesh.positions, "VEC3", FLOAT, ARRAY_BUFFER, minmax=True),
        "NORMAL": buf.add(mesh.normals, "VEC3", FLOAT, ARRAY_BUFFER),
    }
    if mesh.colors is not None:
        attrs["COLOR_0"] = buf.add(mesh.colors, "VEC4", UNSIGNED_BYTE, ARRAY_BUFFER, normalized=True)
    index_type = UNSIGNED_SHORT if mesh.n_vertices <= 65535 else UNSIGNED_INT
    prim = {
        "attributes": attrs,
        "indices": buf.add(mesh.triangles.ravel(), "SCALAR", index_type, ELEMENT_ARRAY_BUFFER),
        "material": 0,
        "mode": 4,
    }
    if targets is not None and len(targets):
        prim["targets"] = [
            {"POSITION": buf.add(d, "VEC3", FLOAT, ARRAY_BUFFER, minmax=True)} for d in targets
        ]
    return prim


def _root_node(transform: Optional[Transform]) -> dict:
    node = {"name": "model"}
    if transform is not None and not transform.is_identity():
        if transform.scale != 1.0:
            node["scale"] = [transform.scale] * 3
        if transform.rotation.tolist() != [0.0, 0.0, 0.0, 1.0]:
            node["rotation"] = transform.rotation.tolist()
        if transform.translation.any():
            node["translation"] = transform.translation.tolist()
    return node


def export_glb(
    source: Union[AnimationPlan, SurfaceMesh],
    material_mode: str = "lit",
    transform: Optional[Transform] = None,
) -> bytes:
    """Serialize a mesh or an animation plan as a GLB byte string.

    ``transform`` is stored on a root node that parents every frame node;
    vertex data is written as given.
    """
    plan = static_plan(source) if isinstance(source, SurfaceMesh) else source
    if plan.mode not in (MORPH, STOP_MOTION, STATIC):
        raise ValueError(f"unknown plan mode {plan.mode!r}")
    buf = _Buffer()
    material, ext_used = _material(material_mode)
    root = _root_node(transform)
    nodes = [root]
    meshes = []
    animation = None

    if plan.mode == MORPH:
        prim = _primitive(buf, plan.base, plan.targets)
        meshes.append({"primitives": [prim], "weights": [0.0] * plan.n_targets})
        nodes.append({"mesh": 0, "name": "frame_morph"})
        interp = "STEP" if plan.interpolation == "step" else "LINEAR"
        sampler = {
            "input": buf.add(plan.key_times.astype(np.float32), "SCALAR", FLOAT, minmax=True),
            "output": buf.add(plan.weights.ravel(), "SCALAR", FLOAT),
            "interpolation": interp,
        }
        animation = {
            "name": "morph",
            "channels": [{"sampler": 0, "target": {"node": 1, "path": "weights"}}],
            "samplers": [sampler],
        }
        if plan.n_targets > MORPH_TARGET_WARN:
            log.warning("%d morph targets; some viewers activate at most %d at once",
                        plan.n_targets, MORPH_TARGET_WARN)
    else:
        for i, mesh in enumerate(plan.frames):
            meshes.append({"primitives": [_primitive(buf, mesh)]})
            node = {"mesh": i, "name": f"frame_{i:03d}"}
            if plan.mode == STOP_MOTION and i > 0:
                node["scale"] = [0.0, 0.0, 0.0]
            nodes.append(node)
        if plan.mode == STOP_MOTION:
            samplers, channels = [], []
            for i, track in enumerate(plan.scale_tracks):
                samplers.append({
                    "input": buf.add(track.times.astype(np.float32), "SCALAR", FLOAT, minmax=True),
                    "output": buf.add(np.repeat(track.values[:, None], 3, axis=1), "VEC3", FLOAT),
                    "interpolation": "STEP",
                })
                channels.append({"sampler": i, "target": {"node": i + 1, "path": "scale"}})
            animation = {"name": "stop_motion", "channels": channels, "samplers": samplers}
    root["children"] = list(range(1, len(nodes)))

    doc = {
        "asset": {"version": "2.0", "generator": "arpipe"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": nodes,
        "meshes": meshes,
        "materials": [material],
        "accessors": buf.accessors,
        "bufferViews": buf.views,
        "buffers": [{"byteLength": len(buf.data)}],
    }
    if animation is not None:
        animation["extras"] = {"mode": plan.mode, "fps": plan.fps, "duration": plan.duration}
        doc["animations"] = [animation]
    if ext_used:
        doc["extensionsUsed"] = ext_used
    out = pack_glb(doc, bytes(buf.data))
    if plan.mode == MORPH and len(out) > SIZE_WARN_BYTES:
        log.warning("GLB is %.1f MB; consider --decimate for slow connections", len(out) / 2 ** 20)
    return out


def pack_glb(doc: dict, binary: bytes) -> bytes:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    text += b" " * (-len(text) % 4)
    binary = binary + b"\x00" * (-len(binary) % 4)
    chunks = struct.pack("<II", len(text), CHUNK_JSON) + text
    if binary:
        chunks += struct.pack("<II", len(binary), CHUNK_BIN) + binary
    return struct.pack("<III", GLB_MAGIC, 2, 12 + len(chunks)) + chunks


# --------------------------------------------------------------------------
# reading


def read_glb(data: bytes) -> Tuple[dict, bytes]:
    """Split a GLB into its JSON document and BIN payload."""
    if len(data) < 12 or struct.unpack_from("<I", data, 0)[0] != GLB_MAGIC:
        raise UnknownFormat("not a GLB file (bad magic)")
    _, _, length = struct.unpack_from("<III", data, 0)
    if len(data) < 20 or length > len(data):
        raise TruncatedPayload("GLB shorter than its declared length")
    jlen, jtype = struct.unpack_from("<II", data, 12)
    if jtype != CHUNK_JSON or 20 + jlen > len(data):
        raise TruncatedPayload("GLB JSON chunk missing or truncated")
    doc = json.loads(data[20:20 + jlen].decode("utf-8"))
    pos = 20 + jlen
    binary = b""
    if pos + 8 <= length:
        blen, btype = struct.unpack_from("<II", data, pos)
        if btype == CHUNK_BIN:
            binary = bytes(data[pos + 8:pos + 8 + blen])
    return doc, binary


def accessor_array(doc: dict, binary: bytes, index: int) -> np.ndarray:
    acc = doc["accessors"][index]
    view = doc["bufferViews"][acc["bufferView"]]
    dtype = COMPONENT_DTYPES[acc["componentType"]]
    width = TYPE_SIZES[acc["type"]]
    start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    arr = np.frombuffer(binary, dtype=dtype, count=acc["count"] * width, offset=start)
    return arr.reshape(acc["count"], width) if width > 1 else arr


def summarize_glb(data: bytes) -> dict:
    doc, binary = read_glb(data)
    n_vertices = n_triangles = n_targets = 0
    for mesh in doc.get("meshes", []):
        for prim in mesh["primitives"]:
            n_vertices += doc["accessors"][prim["attributes"]["POSITION"]]["count"]
            if "indices" in prim:
                n_triangles += doc["accessors"][prim["indices"]]["count"] // 3
            n_targets += len(prim.get("targets", []))
    info = {
        "meshes": len(doc.get("meshes", [])),
        "nodes": len(doc.get("nodes", [])),
        "vertices": n_vertices,
        "triangles": n_triangles,
        "morph_targets": n_targets,
        "colors": any("COLOR_0" in p["attributes"] for m in doc.get("meshes", []) for p in m["primitives"]),
        "mode": "static",
        "duration": 0.0,
    }
    anims = doc.get("animations", [])
    if anims:
        extras = anims[0].get("extras", {})
        longest = max(
            (doc["accessors"][s["input"]].get("max", [0.0])[0] for a in anims for s in a["samplers"]),
            default=0.0,
        )
        info["mode"] = extras.get("mode", "animated")
        info["duration"] = float(extras.get("duration", longest))
    return info


# --------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    offset: int
    message: str

    def __str__(self):
        return f"@{self.offset}: {self.message}"


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, offset: int, message: str):
        self.violations.append(Violation(int(offset), message))

    def messages(self) -> List[str]:
        return [v.message for v in self.violations]

    def __str__(self):
        if self.ok:
            return "valid GLB"
        return "\n".join(str(v) for v in self.violations)


def validate_glb(data: bytes) -> ValidationReport:
    """Structural checks on a GLB byte string; never raises."""
    report = ValidationReport()
    try:
        _validate(data, report)
    except Exception as exc:  # malformed input must end up in the report
        report.add(0, f"unreadable structure: {type(exc).__name__}: {exc}")
    return report


def _validate(data: bytes, report: ValidationReport):
    if len(data) < 12:
        report.add(0, "file shorter than GLB header")
        return
    magic, version, length = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        report.add(0, "bad magic")
        return
    if version != 2:
        report.add(4, f"unsupported version {version}")
    if length != len(data):
        report.add(8, f"length mismatch: header says {length}, file has {len(data)}")
    if length % 4:
        report.add(8, "total length not a multiple of 4")

    chunks = []
    pos = 12
    while pos + 8 <= len(data):
        clen, ctype = struct.unpack_from("<II", data, pos)
        if clen % 4:
            report.add(pos, f"chunk length {clen} not a multiple of 4")
        if pos + 8 + clen > len(data):
            report.add(pos, "chunk extends past end of file")
            break
        chunks.append((pos + 8, clen, ctype))
        pos += 8 + clen
    if pos != len(data):
        report.add(pos, "trailing bytes after last chunk")
    if not chunks or chunks[0][2] != CHUNK_JSON:
        report.add(12, "first chunk is not JSON")
        return
    if len(chunks) > 1 and chunks[1][2] != CHUNK_BIN:
        report.add(chunks[1][0] - 8, "second chunk is not BIN")

    jstart, jlen, _ = chunks[0]
    raw = data[jstart:jstart + jlen]
    stripped = raw.rstrip(b" ")
    if b"\x00" in raw:
        report.add(jstart, "JSON chunk padded with NUL instead of spaces")
    try:
        doc = json.loads(stripped.decode("utf-8"))
    except ValueError as exc:
        report.add(jstart, f"JSON chunk does not parse: {exc}")
        return
    binary = b""
    bstart = 0
    if len(chunks) > 1 and chunks[1][2] == CHUNK_BIN:
        bstart, blen, _ = chunks[1]
        binary = data[bstart:bstart + blen]

    if doc.get("asset", {}).get("version") != "2.0":
        report.add(jstart, "asset.version is not 2.0")
    buffers = doc.get("buffers", [])
    buf_len = buffers[0].get("byteLength", 0) if buffers else 0
    if buffers and buf_len > len(binary):
        report.add(bstart, f"buffer byteLength {buf_len} exceeds BIN chunk ({len(binary)})")
    if buffers and len(binary) - buf_len > 3:
        report.add(bstart, "BIN chunk longer than buffer plus padding")

    views = doc.get("bufferViews", [])
    for i, v in enumerate(views):
        off, ln = v.get("byteOffset", 0), v.get("byteLength", 0)
        if off + ln > buf_len:
            report.add(bstart + off, f"bufferView {i} exceeds buffer")

    accessors = doc.get("accessors", [])
    arrays: Dict[int, Optional[np.ndarray]] = {}
    for i, acc in enumerate(accessors):
        arrays[i] = None
        vi = acc.get("bufferView")
        if vi is None or vi >= len(views):
            report.add(jstart, f"accessor {i} references missing bufferView")
            continue
        view = views[vi]
        ctype = acc.get("componentType")
        if ctype not in COMPONENT_DTYPES or acc.get("type") not in TYPE_SIZES:
            report.add(jstart, f"accessor {i} has bad componentType/type")
            continue
        csize = COMPONENT_DTYPES[ctype].itemsize
        width = TYPE_SIZES[acc["type"]]
        elem = csize * width
        stride = view.get("byteStride", elem)
        aoff = acc.get("byteOffset", 0)
        start = view.get("byteOffset", 0) + aoff
        count = acc.get("count", 0)
        need = aoff + (stride * (count - 1) + elem if count else 0)
        if need > view.get("byteLength", 0):
            report.add(bstart + start, f"accessor {i} exceeds bufferView {vi}")
            continue
        if start % csize:
            report.add(bstart + start, f"accessor {i} misaligned")
        if start + need - aoff > len(binary):
            continue
        if stride == elem:
            arr = np.frombuffer(binary, dtype=COMPONENT_DTYPES[ctype], count=count * width, offset=start)
            arrays[i] = arr.reshape(count, width)

    def position_check(idx, where):
        acc = accessors[idx]
        arr = arrays.get(idx)
        off = bstart + views[acc["bufferView"]].get("byteOffset", 0) if acc.get("bufferView", -1) < len(views) else bstart
        if "min" not in acc or "max" not in acc:
            report.add(off, f"{where}: POSITION accessor {idx} lacks min/max")
            return
        if arr is None or not len(arr):
            return
        lo = arr.min(axis=0).astype(np.float32)
        hi = arr.max(axis=0).astype(np.float32)
        if (not np.array_equal(np.float32(acc["min"]), lo)
                or not np.array_equal(np.float32(acc["max"]), hi)):
            report.add(off, f"{where}: min/max mismatch on accessor {idx}")

    for mi, mesh in enumerate(doc.get("meshes", [])):
        n_targets = None
        for pi, prim in enumerate(mesh.get("primitives", [])):
            where = f"mesh {mi} primitive {pi}"
            attrs = prim.get("attributes", {})
            bad = [a for a in list(attrs.values()) + [prim.get("indices", 0)] if a >= len(accessors)]
            if bad or "POSITION" not in attrs:
                report.add(jstart, f"{where}: missing or dangling accessor reference")
                continue
            n_vert = accessors[attrs["POSITION"]]["count"]
            position_check(attrs["POSITION"], where)
            for name, a in attrs.items():
                if accessors[a]["count"] != n_vert:
                    report.add(jstart, f"{where}: attribute {name} count differs from POSITION")
            if "indices" in prim:
                idx = arrays.get(prim["indices"])
                if accessors[prim["indices"]]["count"] % 3:
                    report.add(jstart, f"{where}: index count not a multiple of 3")
                if idx is not None and len(idx) and int(idx.max()) >= n_vert:
                    report.add(bstart, f"{where}: index {int(idx.max())} out of range for {n_vert} vertices")
            targets = prim.get("targets", [])
            for ti, tgt in enumerate(targets):
                if "POSITION" not in tgt or tgt["POSITION"] >= len(accessors):
                    report.add(jstart, f"{where}: morph target {ti} lacks POSITION")
                    continue
                if accessors[tgt["POSITION"]]["count"] != n_vert:
                    report.add(jstart, f"{where}: morph target {ti} length mismatch")
                position_check(tgt["POSITION"], f"{where} target {ti}")
            if n_targets is not None and n_targets != len(targets):
                report.add(jstart, f"mesh {mi}: primitives disagree on morph target count")
            n_targets = len(targets)
        if "weights" in mesh and n_targets is not None and len(mesh["weights"]) != n_targets:
            report.add(jstart, f"mesh {mi}: weights length differs from morph target count")

    nodes = doc.get("nodes", [])
    for ai, anim in enumerate(doc.get("animations", [])):
        samplers = anim.get("samplers", [])
        for ci, ch in enumerate(anim.get("channels", [])):
            si = ch.get("sampler", -1)
            tgt = ch.get("target", {})
            if not 0 <= si < len(samplers) or tgt.get("node", -1) >= len(nodes):
                report.add(jstart, f"animation {ai} channel {ci}: dangling reference")
                continue
            s = samplers[si]
            if s["input"] >= len(accessors) or s["output"] >= len(accessors):
                report.add(jstart, f"animation {ai} sampler {si}: dangling accessor")
                continue
            n_in = accessors[s["input"]]["count"]
            n_out = accessors[s["output"]]["count"]
            times = arrays.get(s["input"])
            if times is not None and np.any(np.diff(times.ravel()) < 0):
                report.add(bstart, f"animation {ai} sampler {si}: input times decrease")
            factor = 3 if s.get("interpolation") == "CUBICSPLINE" else 1
            if tgt.get("path") == "weights":
                node = nodes[tgt["node"]]
                mesh = doc["meshes"][node["mesh"]] if "mesh" in node else {}
                k = len(mesh.get("primitives", [{}])[0].get("targets", [])) if mesh else 0
                if n_out != n_in * k * factor:
                    report.add(jstart, f"animation {ai} sampler {si}: weights output count {n_out} != {n_in}x{k}")
            elif n_out != n_in * factor:
                report.add(jstart, f"animation {ai} sampler {si}: output count {n_out} != input count {n_in}")
