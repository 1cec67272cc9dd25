"""
Reader and writer for legacy VTK unstructured grids.

Both ASCII and BINARY encodings are handled.  Binary payloads are
big-endian, as the legacy format mandates.  Cell connectivity is stored in
flat CSR form (``cell_types``, ``offsets``, ``connectivity``) so that large
grids stay vectorizable; :meth:`UnstructuredGrid.cells` gives the list view.
"""
from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BadComponent,
    EmptySeries,
    HeaderMalformed,
    IndexOutOfRange,
    InvalidParameter,
    PipelineError,
    TruncatedPayload,
    UnknownField,
    UnsupportedCellType,
    UnsupportedDataset,
)

log = logging.getLogger(__name__)

LINE = 3
TRIANGLE = 5
QUAD = 9
TETRA = 10
HEXAHEDRON = 12
WEDGE = 13

CELL_ARITY = {LINE: 2, TRIANGLE: 3, QUAD: 4, TETRA: 4, HEXAHEDRON: 8, WEDGE: 6}
CELL_NAMES = {
    LINE: "line",
    TRIANGLE: "triangle",
    QUAD: "quad",
    TETRA: "tetra",
    HEXAHEDRON: "hexahedron",
    WEDGE: "wedge",
}
VOLUME_TYPES = (TETRA, HEXAHEDRON, WEDGE)
SURFACE_TYPES = (TRIANGLE, QUAD)

# legacy type names -> big-endian numpy dtypes
_DTYPES = {
    "unsigned_char": ">u1",
    "char": ">i1",
    "unsigned_short": ">u2",
    "short": ">i2",
    "unsigned_int": ">u4",
    "int": ">i4",
    "unsigned_long": ">u8",
    "long": ">i8",
    "float": ">f4",
    "double": ">f8",
    "vtktypeint8": ">i1",
    "vtktypeuint8": ">u1",
    "vtktypeint16": ">i2",
    "vtktypeuint16": ">u2",
    "vtktypeint32": ">i4",
    "vtktypeuint32": ">u4",
    "vtktypeint64": ">i8",
    "vtktypeuint64": ">u8",
    "vtkidtype": ">i8",
}

_SECTIONS = {
    "POINTS", "CELLS", "CELL_TYPES", "POINT_DATA", "CELL_DATA", "SCALARS",
    "VECTORS", "NORMALS", "TENSORS", "TENSORS6", "TEXTURE_COORDINATES",
    "FIELD", "LOOKUP_TABLE", "COLOR_SCALARS", "METADATA",
}

_HEADER_RE = re.compile(rb"^#\s*vtk\s+DataFile\s+Version\s+(\d+)\.(\d+)", re.I)


@dataclass(frozen=True, eq=False)
class UnstructuredGrid:
    """One simulation frame: points, typed cells and named fields.

    Arrays are made read-only on construction; the grid is safe to share
    between threads.
    """

    points: np.ndarray
    cell_types: np.ndarray
    offsets: np.ndarray
    connectivity: np.ndarray
    point_fields: Dict[str, np.ndarray] = field(default_factory=dict)
    cell_fields: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        points = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        cell_types = np.ascontiguousarray(self.cell_types, dtype=np.int64).ravel()
        offsets = np.ascontiguousarray(self.offsets, dtype=np.int64).ravel()
        conn = np.ascontiguousarray(self.connectivity, dtype=np.int64).ravel()
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "cell_types", cell_types)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "connectivity", conn)
        object.__setattr__(self, "point_fields", dict(self.point_fields))
        object.__setattr__(self, "cell_fields", dict(self.cell_fields))
        if len(offsets) != len(cell_types) + 1 or offsets[0] != 0 or offsets[-1] != len(conn):
            raise HeaderMalformed("cell offsets inconsistent with connectivity")
        _check_cells(cell_types, offsets, conn, len(points))
        for kind, fields, count in (
            ("point", self.point_fields, len(points)),
            ("cell", self.cell_fields, len(cell_types)),
        ):
            for name, values in list(fields.items()):
                values = np.ascontiguousarray(values, dtype=np.float64)
                if values.ndim == 2 and values.shape[1] == 1:
                    values = values[:, 0]
                if values.shape[0] != count:
                    raise HeaderMalformed(
                        f"{kind} field {name!r} has {values.shape[0]} entries, expected {count}"
                    )
                values.setflags(write=False)
                fields[name] = values
        for arr in (points, cell_types, offsets, conn):
            arr.setflags(write=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cell_types)

    @property
    def cells(self) -> List[Tuple[int, Tuple[int, ...]]]:
        conn = self.connectivity.tolist()
        off = self.offsets.tolist()
        return [
            (int(t), tuple(conn[off[i]:off[i + 1]]))
            for i, t in enumerate(self.cell_types.tolist())
        ]

    def cells_of_type(self, cell_type: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(cell_ids, connectivity)`` for all cells of one type.

        ``connectivity`` has shape ``(count, arity)``.
        """
        ids = np.flatnonzero(self.cell_types == cell_type)
        arity = CELL_ARITY[cell_type]
        idx = self.offsets[ids][:, None] + np.arange(arity)
        return ids, self.connectivity[idx]

    def has_cells(self, types: Iterable[int]) -> bool:
        return bool(np.isin(self.cell_types, list(types)).any())

    def same_connectivity(self, other: "UnstructuredGrid") -> bool:
        return (
            self.n_points == other.n_points
            and np.array_equal(self.cell_types, other.cell_types)
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.connectivity, other.connectivity)
        )

    def __eq__(self, other):
        if not isinstance(other, UnstructuredGrid):
            return NotImplemented
        return (
            self.same_connectivity(other)
            and np.array_equal(self.points, other.points)
            and _fields_equal(self.point_fields, other.point_fields)
            and _fields_equal(self.cell_fields, other.cell_fields)
        )

    def describe(self) -> str:
        kinds = {}
        for t in self.cell_types.tolist():
            kinds[t] = kinds.get(t, 0) + 1
        kind_txt = ", ".join(CELL_NAMES.get(t, str(t)) for t in sorted(kinds))
        fields = [f"{k}[{len(v)}]" for k, v in self.point_fields.items()]
        fields += [f"{k}[{len(v)}] (cell)" for k, v in self.cell_fields.items()]
        cell_word = "cell" if self.n_cells == 1 else "cells"
        return (
            f"{self.n_points} points, {self.n_cells} {cell_word} ({kind_txt}), "
            f"fields: {', '.join(fields) if fields else 'none'}"
        )


def _fields_equal(a, b):
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def _check_cells(cell_types, offsets, conn, n_points):
    known = np.isin(cell_types, list(CELL_ARITY))
    if not known.all():
        bad = sorted(set(cell_types[~known].tolist()))
        raise UnsupportedCellType(f"unsupported VTK cell type code(s): {bad}")
    arity = np.array([0] * 16)
    for code, n in CELL_ARITY.items():
        arity[code] = n
    sizes = np.diff(offsets)
    wrong = sizes != arity[cell_types]
    if wrong.any():
        i = int(np.flatnonzero(wrong)[0])
        raise HeaderMalformed(
            f"cell {i} of type {int(cell_types[i])} has {int(sizes[i])} points, "
            f"expected {arity[cell_types[i]]}"
        )
    if len(conn) and (conn.min() < 0 or conn.max() >= n_points):
        bad = int(conn[(conn < 0) | (conn >= n_points)][0])
        raise IndexOutOfRange(f"connectivity index {bad} out of range for {n_points} points")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered frames plus a constant-connectivity certificate."""

    frames: Tuple[UnstructuredGrid, ...]
    frame_times: Optional[np.ndarray] = None
    constant_connectivity: bool = field(init=False)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise EmptySeries("time series needs at least one frame")
        object.__setattr__(self, "frames", frames)
        if self.frame_times is not None:
            times = np.asarray(self.frame_times, dtype=np.float64).ravel()
            if len(times) != len(frames):
                raise InvalidParameter("frame_times length differs from frame count")
            if np.any(np.diff(times) <= 0):
                raise InvalidParameter("frame_times must be strictly increasing")
            times.setflags(write=False)
            object.__setattr__(self, "frame_times", times)
        first = frames[0]
        object.__setattr__(
            self,
            "constant_connectivity",
            all(first.same_connectivity(f) for f in frames[1:]),
        )

    def __len__(self):
        return len(self.frames)

    def first_mismatch(self) -> Optional[int]:
        """Index of the first frame whose cells differ from frame 0."""
        for i, f in enumerate(self.frames[1:], start=1):
            if not self.frames[0].same_connectivity(f):
                return i
        return None


# --------------------------------------------------------------------------
# parsing


class _AsciiCursor:
    def __init__(self, data: bytes):
        self.tokens = data.split()
        self.i = 0

    def peek(self, same_line=False):
        if self.i >= len(self.tokens):
            return None
        return self.tokens[self.i].decode("latin-1")

    def word(self) -> str:
        if self.i >= len(self.tokens):
            raise TruncatedPayload("unexpected end of file")
        tok = self.tokens[self.i]
        self.i += 1
        return tok.decode("latin-1")

    def array(self, n: int, dtype: str) -> np.ndarray:
        toks = self.tokens[self.i:self.i + n]
        if len(toks) < n:
            raise TruncatedPayload(f"expected {n} values, found {len(toks)}")
        self.i += n
        if n == 0:
            return np.zeros(0, dtype=dtype[1:])
        try:
            if dtype[1] == "f":
                return np.array(toks).astype(np.float64)
            return np.array(toks).astype(np.int64)
        except ValueError as exc:
            raise HeaderMalformed(f"bad numeric value: {exc}") from None


class _BinaryCursor:
    _WS = b" \t\r\n\v\f"

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _token_span(self, same_line=False):
        d, p, n = self.data, self.pos, len(self.data)
        while p < n and d[p] in self._WS:
            if same_line and d[p] == 0x0A:
                return None
            p += 1
        if p >= n:
            return None
        q = p
        while q < n and d[q] not in self._WS:
            q += 1
        return p, q

    def peek(self, same_line=False):
        span = self._token_span(same_line)
        if span is None:
            return None
        return self.data[span[0]:span[1]].decode("latin-1")

    def word(self) -> str:
        span = self._token_span()
        if span is None:
            raise TruncatedPayload("unexpected end of file")
        self.pos = span[1]
        return self.data[span[0]:span[1]].decode("latin-1")

    def array(self, n: int, dtype: str) -> np.ndarray:
        nl = self.data.find(b"\n", self.pos)
        if nl < 0:
            raise TruncatedPayload("missing binary payload")
        start = nl + 1
        nbytes = n * np.dtype(dtype).itemsize
        if start + nbytes > len(self.data):
            raise TruncatedPayload(
                f"binary payload needs {nbytes} bytes, {len(self.data) - start} available"
            )
        self.pos = start + nbytes
        arr = np.frombuffer(self.data, dtype=dtype, count=n, offset=start)
        if dtype[1] == "f":
            return arr.astype(np.float64)
        return arr.astype(np.int64)


def _dtype(name: str) -> str:
    try:
        return _DTYPES[name.lower()]
    except KeyError:
        raise HeaderMalformed(f"unsupported data type {name!r}") from None


def _int(tok: str, what: str) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise HeaderMalformed(f"expected integer {what}, got {tok!r}") from None
    if value < 0:
        raise HeaderMalformed(f"negative {what}: {value}")
    return value


def _split_legacy_cells(data: np.ndarray, n_cells: int) -> Tuple[np.ndarray, np.ndarray]:
    """Turn ``[n0, i.., n1, i..]`` into CSR offsets and connectivity."""
    if n_cells == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    first = int(data[0])
    if len(data) == n_cells * (first + 1):
        block = data.reshape(n_cells, first + 1)
        if (block[:, 0] == first).all():
            offsets = np.arange(n_cells + 1, dtype=np.int64) * first
            return offsets, block[:, 1:].ravel().copy()
    counts = np.empty(n_cells, dtype=np.int64)
    heads = np.empty(n_cells, dtype=np.int64)
    p = 0
    values = data.tolist()
    for i in range(n_cells):
        if p >= len(values):
            raise TruncatedPayload("CELLS section shorter than declared")
        c = values[p]
        if c < 0:
            raise HeaderMalformed(f"negative cell size at cell {i}")
        counts[i] = c
        heads[i] = p + 1
        p += c + 1
    if p != len(values):
        raise HeaderMalformed("CELLS size does not match cell list")
    offsets = np.concatenate([[0], np.cumsum(counts)])
    idx = np.repeat(heads - offsets[:-1], counts) + np.arange(offsets[-1])
    return offsets, data[idx]


def parse_vtk(data: bytes) -> UnstructuredGrid:
    """Parse a legacy VTK file holding an UNSTRUCTURED_GRID dataset."""
    lines = data.split(b"\n", 3)
    if len(lines) < 4 or not _HEADER_RE.match(lines[0].strip()):
        raise HeaderMalformed("missing '# vtk DataFile Version x.y' header line")
    major, minor = (int(g) for g in _HEADER_RE.match(lines[0].strip()).groups())
    if not (2, 0) <= (major, minor) <= (5, 1):
        raise HeaderMalformed(f"unsupported legacy version {major}.{minor}")
    encoding = lines[2].strip().upper()
    body = lines[3]
    if encoding == b"ASCII":
        cur = _AsciiCursor(body)
    elif encoding == b"BINARY":
        cur = _BinaryCursor(body)
    else:
        raise HeaderMalformed(f"encoding must be ASCII or BINARY, got {encoding!r}")

    if cur.word().upper() != "DATASET":
        raise HeaderMalformed("expected DATASET keyword")
    kind = cur.word().upper()
    if kind != "UNSTRUCTURED_GRID":
        raise UnsupportedDataset(f"dataset {kind} is not supported (need UNSTRUCTURED_GRID)")

    points = offsets = conn = cell_types = None
    point_fields: Dict[str, np.ndarray] = {}
    cell_fields: Dict[str, np.ndarray] = {}
    active: Optional[Dict[str, np.ndarray]] = None
    active_n = 0

    def attribute(ncomp, dtype):
        if active is None:
            raise HeaderMalformed("attribute data outside POINT_DATA/CELL_DATA")
        values = cur.array(active_n * ncomp, dtype)
        return values.reshape(active_n, ncomp) if ncomp > 1 else values

    while cur.peek() is not None:
        kw = cur.word().upper()
        if kw == "POINTS":
            n = _int(cur.word(), "point count")
            points = cur.array(3 * n, _dtype(cur.word())).reshape(n, 3)
        elif kw == "CELLS":
            n = _int(cur.word(), "cell count")
            size = _int(cur.word(), "cell list size")
            if (cur.peek() or "").upper() == "OFFSETS":
                cur.word()
                offsets = cur.array(n, _dtype(cur.word()))
                if cur.word().upper() != "CONNECTIVITY":
                    raise HeaderMalformed("expected CONNECTIVITY after OFFSETS")
                conn = cur.array(size, _dtype(cur.word()))
                if n == 0:
                    offsets = np.zeros(1, dtype=np.int64)
            else:
                # legacy layout: value count only, element type is implicit int
                offsets, conn = _split_legacy_cells(cur.array(size, ">i4"), n)
        elif kw == "CELL_TYPES":
            n = _int(cur.word(), "cell type count")
            cell_types = cur.array(n, ">i4")
        elif kw in ("POINT_DATA", "CELL_DATA"):
            active_n = _int(cur.word(), "attribute count")
            active = point_fields if kw == "POINT_DATA" else cell_fields
        elif kw == "SCALARS":
            name = _decode_name(cur.word())
            dtype = _dtype(cur.word())
            ncomp = 1
            nxt = cur.peek(same_line=True)
            if nxt is not None and nxt.isdigit():
                ncomp = _int(cur.word(), "component count")
            if (cur.peek() or "").upper() == "LOOKUP_TABLE":
                cur.word()
                cur.word()
            active[name] = attribute(ncomp, dtype)
        elif kw in ("VECTORS", "NORMALS", "TENSORS", "TENSORS6"):
            name = _decode_name(cur.word())
            dtype = _dtype(cur.word())
            ncomp = {"TENSORS": 9, "TENSORS6": 6}.get(kw, 3)
            active[name] = attribute(ncomp, dtype)
        elif kw == "TEXTURE_COORDINATES":
            name = _decode_name(cur.word())
            dim = _int(cur.word(), "texture dimension")
            active[name] = attribute(dim, _dtype(cur.word()))
        elif kw == "COLOR_SCALARS":
            name = _decode_name(cur.word())
            nv = _int(cur.word(), "color component count")
            if isinstance(cur, _BinaryCursor):
                values = attribute(nv, ">u1") / 255.0
            else:
                values = attribute(nv, ">f4")
            active[name] = values
        elif kw == "LOOKUP_TABLE":
            cur.word()
            size = _int(cur.word(), "lookup table size")
            cur.array(4 * size, ">u1" if isinstance(cur, _BinaryCursor) else ">f4")
        elif kw == "FIELD":
            cur.word()
            n_arrays = _int(cur.word(), "field array count")
            target = active if active is not None else {}
            for _ in range(n_arrays):
                name = _decode_name(cur.word())
                if name.upper() == "METADATA":
                    _skip_metadata(cur)
                    name = _decode_name(cur.word())
                ncomp = _int(cur.word(), "component count")
                ntup = _int(cur.word(), "tuple count")
                values = cur.array(ncomp * ntup, _dtype(cur.word()))
                if active is not None and ntup != active_n:
                    raise HeaderMalformed(f"field array {name!r} has {ntup} tuples, expected {active_n}")
                target[name] = values.reshape(ntup, ncomp) if ncomp > 1 else values
        elif kw == "METADATA":
            _skip_metadata(cur)
        else:
            raise HeaderMalformed(f"unknown section keyword {kw!r}")

    if points is None:
        raise HeaderMalformed("POINTS section missing")
    if offsets is None:
        raise HeaderMalformed("CELLS section missing")
    if cell_types is None:
        raise HeaderMalformed("CELL_TYPES section missing")
    if len(cell_types) != len(offsets) - 1:
        raise HeaderMalformed(
            f"CELL_TYPES lists {len(cell_types)} cells, CELLS lists {len(offsets) - 1}"
        )
    if len(conn) and (conn.min() < 0 or conn.max() >= len(points)):
        bad = int(conn[(conn < 0) | (conn >= len(points))][0])
        raise IndexOutOfRange(f"connectivity index {bad} out of range for {len(points)} points")
    if point_fields and any(len(v) != len(points) for v in point_fields.values()):
        raise HeaderMalformed("POINT_DATA count differs from point count")
    return UnstructuredGrid(points, cell_types, offsets, conn, point_fields, cell_fields)


def _skip_metadata(cur):
    while True:
        nxt = cur.peek()
        if nxt is None or nxt.upper() in _SECTIONS - {"METADATA"}:
            return
        cur.word()


def _decode_name(name: str) -> str:
    return name.replace("%20", " ")


def _encode_name(name: str) -> str:
    return name.replace(" ", "%20")


# --------------------------------------------------------------------------
# writing


def write_vtk(grid: UnstructuredGrid, binary: bool = False, title: str = "arpipe") -> bytes:
    """Serialize ``grid`` as a legacy VTK 4.2 file.

    ASCII output prints floats with ``repr`` so a re-parse is exact.
    """
    out = [b"# vtk DataFile Version 4.2\n", title.encode() + b"\n",
           b"BINARY\n" if binary else b"ASCII\n", b"DATASET UNSTRUCTURED_GRID\n"]

    def emit(header: str, values: np.ndarray, dtype: str, per_line: int = 9):
        out.append(header.encode() + b"\n")
        flat = np.asarray(values).ravel()
        if binary:
            out.append(flat.astype(dtype).tobytes() + b"\n")
            return
        if dtype[1] == "f":
            text = [repr(v) for v in flat.astype(np.float64).tolist()]
        else:
            text = [str(v) for v in flat.astype(np.int64).tolist()]
        rows = [" ".join(text[i:i + per_line]) for i in range(0, len(text), per_line)]
        out.append(("\n".join(rows) + "\n").encode() if rows else b"")

    emit(f"POINTS {grid.n_points} double", grid.points, ">f8", 3)
    sizes = np.diff(grid.offsets)
    legacy = np.empty(grid.n_cells + len(grid.connectivity), dtype=np.int64)
    heads = grid.offsets[:-1] + np.arange(grid.n_cells)
    legacy[heads] = sizes
    mask = np.ones(len(legacy), dtype=bool)
    mask[heads] = False
    legacy[mask] = grid.connectivity
    emit(f"CELLS {grid.n_cells} {len(legacy)}", legacy, ">i4")
    emit(f"CELL_TYPES {grid.n_cells}", grid.cell_types, ">i4", 1)

    for section, fields, count in (
        ("POINT_DATA", grid.point_fields, grid.n_points),
        ("CELL_DATA", grid.cell_fields, grid.n_cells),
    ):
        if not fields:
            continue
        out.append(f"{section} {count}\n".encode())
        other = {}
        for name, values in fields.items():
            ncomp = 1 if values.ndim == 1 else values.shape[1]
            if ncomp == 1:
                emit(f"SCALARS {_encode_name(name)} double 1\nLOOKUP_TABLE default", values, ">f8", 1)
            elif ncomp == 3:
                emit(f"VECTORS {_encode_name(name)} double", values, ">f8", 3)
            else:
                other[name] = values
        if other:
            out.append(f"FIELD FieldData {len(other)}\n".encode())
            for name, values in other.items():
                emit(f"{_encode_name(name)} {values.shape[1]} {count} double", values, ">f8", values.shape[1])
    return b"".join(out)


# --------------------------------------------------------------------------
# series and field selection


def read_vtk(path) -> UnstructuredGrid:
    with open(path, "rb") as f:
        data = f.read()
    try:
        return parse_vtk(data)
    except PipelineError as exc:
        raise type(exc)(f"{os.fspath(path)}: {exc}") from exc


def load_series(
    paths: Sequence,
    frame_times: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> TimeSeries:
    """Parse ``paths`` in the given order into a :class:`TimeSeries`.

    Files are parsed concurrently when ``workers`` > 1; frame order always
    follows ``paths``.
    """
    paths = list(paths)
    if not paths:
        raise EmptySeries("no input files")
    if workers and workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(read_vtk, paths))
    else:
        frames = [read_vtk(p) for p in paths]
    return TimeSeries(tuple(frames), frame_times)


_COMPONENTS = {"x": 0, "y": 1, "z": 2}


def field_names(grid: UnstructuredGrid) -> List[str]:
    return list(grid.point_fields) + [n for n in grid.cell_fields if n not in grid.point_fields]


def select_field(grid: UnstructuredGrid, name: str, component: Optional[str] = None) -> np.ndarray:
    """Return one scalar per point for field ``name``.

    ``component`` picks ``x``, ``y``, ``z`` or ``magnitude`` of a vector
    field (``None`` means magnitude); it is ignored for scalar fields.  Cell
    fields are averaged onto points, isolated points get the field mean.
    """
    if name in grid.point_fields:
        values = grid.point_fields[name]
    elif name in grid.cell_fields:
        log.warning("field %r is cell data; averaging onto points", name)
        values = _cell_to_point(grid, grid.cell_fields[name])
    else:
        raise UnknownField(
            f"unknown field {name!r}; available: {', '.join(field_names(grid)) or 'none'}"
        )
    if values.ndim == 1:
        return np.array(values, dtype=np.float64)
    comp = "magnitude" if component is None else component.lower()
    if comp in ("magnitude", "mag"):
        return np.linalg.norm(values, axis=1)
    if comp in _COMPONENTS and _COMPONENTS[comp] < values.shape[1]:
        return np.array(values[:, _COMPONENTS[comp]], dtype=np.float64)
    raise BadComponent(f"component {component!r} not one of x|y|z|magnitude")


def _cell_to_point(grid: UnstructuredGrid, values: np.ndarray) -> np.ndarray:
    sizes = np.diff(grid.offsets)
    per_entry = np.repeat(values, sizes, axis=0)
    counts = np.bincount(grid.connectivity, minlength=grid.n_points).astype(np.float64)
    shape = (grid.n_points,) + values.shape[1:]
    sums = np.zeros(shape)
    np.add.at(sums, grid.connectivity, per_entry)
    out = np.empty(shape)
    used = counts > 0
    out[used] = sums[used] / counts[used].reshape((-1,) + (1,) * (values.ndim - 1))
    out[~used] = values.mean(axis=0)
    return out
