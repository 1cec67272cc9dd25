"""
Renderable surfaces from volume, shell and beam discretizations.

* :func:`extract_boundary` keeps the faces of 3D cells that belong to exactly
  one cell and passes 2D cells through.
* :func:`solidify` gives a shell surface thickness.
* :func:`tube` sweeps a polygonal cross-section along chains of line cells.
"""
from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from . import vtk
from .errors import (
    DegenerateSegment,
    InvalidParameter,
    MissingNormals,
    NoLineCells,
    NoSurfaceCells,
)
from .mesh import SurfaceMesh, compute_vertex_normals, boundary_edges

DEFAULT_TUBE_SIDES = 12
DEFAULT_TUBE_RADIUS_FRACTION = 0.02
DEFAULT_SOLIDIFY_FRACTION = 0.01

# local face tables, VTK point ordering; (triangles, quads)
FACE_TABLE = {
    vtk.TETRA: (((0, 1, 3), (1, 2, 3), (2, 0, 3), (0, 2, 1)), ()),
    vtk.HEXAHEDRON: (
        (),
        ((0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)),
    ),
    vtk.WEDGE: (
        ((0, 1, 2), (3, 5, 4)),
        ((0, 3, 4, 1), (1, 4, 5, 2), (2, 5, 3, 0)),
    ),
}


def _multiplicity(faces: np.ndarray) -> np.ndarray:
    """For each row, how many rows share its sorted vertex tuple."""
    if not len(faces):
        return np.zeros(0, dtype=np.int64)
    keys = np.sort(faces, axis=1)
    order = np.lexsort(keys.T[::-1])
    sk = keys[order]
    start = np.ones(len(sk), dtype=bool)
    start[1:] = np.any(sk[1:] != sk[:-1], axis=1)
    group = np.cumsum(start) - 1
    counts = np.bincount(group)
    out = np.empty(len(faces), dtype=np.int64)
    out[order] = counts[group]
    return out


def _orient_outward(points, faces, centroids):
    """Flip faces whose normal points toward their cell's centroid."""
    p = points[faces]
    if faces.shape[1] == 3:
        normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    else:
        normal = np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 1])
    inward = np.einsum("ij,ij->i", normal, p.mean(axis=1) - centroids) < 0
    flipped = faces.copy()
    flipped[inward, 1:] = faces[inward, :0:-1]
    return flipped


def boundary_faces(grid: vtk.UnstructuredGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Boundary faces of the grid before triangulation.

    Returns ``(triangles, tri_keys, quads, quad_keys)`` where the key arrays
    hold ``(cell_id, local_face)`` for ordering.  3D-cell faces are kept when
    their multiplicity is 1 and are wound outward; 2D cells pass through.
    """
    parts = {3: [], 4: []}
    for cell_type, (tri_faces, quad_faces) in FACE_TABLE.items():
        ids, conn = grid.cells_of_type(cell_type)
        if not len(ids):
            continue
        centroids = grid.points[conn].mean(axis=1)
        local = 0
        for table in (tri_faces, quad_faces):
            for face in table:
                f = conn[:, list(face)]
                f = _orient_outward(grid.points, f, centroids)
                parts[len(face)].append((f, ids, np.full(len(ids), local), True))
                local += 1
    for cell_type, k in ((vtk.TRIANGLE, 3), (vtk.QUAD, 4)):
        ids, conn = grid.cells_of_type(cell_type)
        if len(ids):
            parts[k].append((conn, ids, np.zeros(len(ids), dtype=np.int64), False))

    out = []
    for k in (3, 4):
        if not parts[k]:
            out += [np.zeros((0, k), dtype=np.int64), np.zeros((0, 2), dtype=np.int64)]
            continue
        faces = np.concatenate([p[0] for p in parts[k]])
        keys = np.stack([np.concatenate([p[1] for p in parts[k]]),
                         np.concatenate([p[2] for p in parts[k]])], axis=1)
        volumetric = np.concatenate([np.full(len(p[0]), p[3]) for p in parts[k]])
        keep = ~volumetric
        if volumetric.any():
            mult = np.ones(len(faces), dtype=np.int64)
            mult[volumetric] = _multiplicity(faces[volumetric])
            keep |= mult == 1
        faces, keys = faces[keep], keys[keep]
        order = np.lexsort((keys[:, 1], keys[:, 0]))
        out += [faces[order], keys[order]]
    return out[0], out[1], out[2], out[3]


def triangulate_quads(quads: np.ndarray) -> np.ndarray:
    """Split each quad along its (v0, v2) diagonal."""
    quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    out = np.empty((2 * len(quads), 3), dtype=np.int64)
    out[0::2] = quads[:, [0, 1, 2]]
    out[1::2] = quads[:, [0, 2, 3]]
    return out


def extract_boundary(grid: vtk.UnstructuredGrid) -> SurfaceMesh:
    """Outer surface of the grid as a triangle mesh with vertex normals.

    Surface vertices are the used grid points in ascending id order; point
    fields are carried over and ``source_ids`` records the origin of each.
    """
    if not grid.has_cells(vtk.VOLUME_TYPES + vtk.SURFACE_TYPES):
        raise NoSurfaceCells("grid has no volume or surface cells; use tube() for lines")
    tris, tri_keys, quads, quad_keys = boundary_faces(grid)
    split = triangulate_quads(quads)
    split_keys = np.repeat(quad_keys, 2, axis=0)
    all_tris = np.concatenate([tris, split])
    keys = np.concatenate([
        np.column_stack([tri_keys, np.zeros(len(tris), dtype=np.int64)]),
        np.column_stack([split_keys, np.tile([0, 1], len(quads))]),
    ])
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    all_tris = all_tris[order]

    used = np.unique(all_tris)
    remapped = np.searchsorted(used, all_tris)
    mesh = SurfaceMesh(
        grid.points[used],
        remapped,
        source_ids=used,
        point_data={k: v[used] for k, v in grid.point_fields.items()},
    )
    return compute_vertex_normals(mesh)


def bbox_diagonal(points: np.ndarray) -> float:
    points = np.asarray(points).reshape(-1, 3)
    if not len(points):
        return 0.0
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def solidify(mesh: SurfaceMesh, thickness: float) -> SurfaceMesh:
    """Offset the surface by ``±thickness/2`` along its vertex normals and
    stitch the rims.

    Result vertex layout: outer copy ``[0, n)``, inner copy ``[n, 2n)``.
    Triangle count is ``2 * F + 2 * B`` for ``F`` input triangles and ``B``
    boundary edges.
    """
    if mesh.normals is None:
        raise MissingNormals("solidify needs vertex normals; run compute_vertex_normals first")
    if not thickness > 0:
        raise InvalidParameter(f"solidify thickness must be positive, got {thickness}")
    n = mesh.n_vertices
    half = 0.5 * thickness * mesh.normals
    positions = np.concatenate([mesh.positions + half, mesh.positions - half])
    normals = np.concatenate([mesh.normals, -mesh.normals])

    outer = mesh.triangles
    inner = mesh.triangles[:, ::-1] + n
    rim = boundary_edges(mesh.triangles)
    a, b = rim[:, 0], rim[:, 1]
    walls = np.empty((2 * len(rim), 3), dtype=np.int64)
    walls[0::2] = np.stack([b, a, a + n], axis=1)
    walls[1::2] = np.stack([b, a + n, b + n], axis=1)

    def twice(arr):
        return None if arr is None else np.concatenate([arr, arr])

    return SurfaceMesh(
        positions,
        np.concatenate([outer, inner, walls]),
        normals,
        twice(mesh.colors),
        twice(mesh.source_ids),
        {k: np.concatenate([v, v]) for k, v in mesh.point_data.items()},
    )


# --------------------------------------------------------------------------
# tubes


def chain_segments(segments: np.ndarray) -> List[Tuple[List[int], bool]]:
    """Group line segments into polylines.

    Chains run between points whose degree is not 2; what is left over are
    closed loops.  Returns ``(point_ids, closed)`` pairs in a deterministic
    order driven by segment order.
    """
    segments = np.asarray(segments, dtype=np.int64).reshape(-1, 2)
    incident = {}
    for s, (a, b) in enumerate(segments.tolist()):
        incident.setdefault(a, []).append(s)
        incident.setdefault(b, []).append(s)
    used = [False] * len(segments)
    seg_list = segments.tolist()

    def other(s, p):
        a, b = seg_list[s]
        return b if a == p else a

    def walk(start, s):
        path = [start]
        p = start
        while True:
            used[s] = True
            p = other(s, p)
            path.append(p)
            if p == start or len(incident[p]) != 2:
                return path
            nxt = [t for t in incident[p] if not used[t]]
            if not nxt:
                return path
            s = nxt[0]

    chains = []
    for s, (a, b) in enumerate(seg_list):
        for p in (a, b):
            if len(incident[p]) != 2:
                for t in incident[p]:
                    if not used[t]:
                        chains.append((walk(p, t), False))
    for s, (a, _) in enumerate(seg_list):
        if not used[s]:
            path = walk(a, s)
            closed = path[0] == path[-1]
            chains.append((path[:-1] if closed else path, closed))
    return chains


def _any_perpendicular(t: np.ndarray) -> np.ndarray:
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(t)))] = 1.0
    u = np.cross(t, axis)
    return u / np.linalg.norm(u)


def _rotate(v, axis, angle):
    """Rodrigues rotation of ``v`` about unit ``axis``."""
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1 - c)


def _transport(u, t0, t1):
    """Carry frame vector ``u`` from tangent ``t0`` to ``t1`` by the minimal rotation."""
    axis = np.cross(t0, t1)
    sin = np.linalg.norm(axis)
    cos = float(np.clip(np.dot(t0, t1), -1.0, 1.0))
    if sin < 1e-12:
        return u
    u = _rotate(u, axis / sin, math.atan2(sin, cos))
    u = u - np.dot(u, t1) * t1
    return u / np.linalg.norm(u)


def _ring_frames(pts: np.ndarray, closed: bool):
    """Tangent and parallel-transported normal at each polyline point."""
    m = len(pts)
    seg = (np.roll(pts, -1, axis=0) - pts) if closed else np.diff(pts, axis=0)
    seg = seg / np.linalg.norm(seg, axis=1)[:, None]
    tangents = np.empty((m, 3))
    for i in range(m):
        if closed:
            before, after = seg[i - 1], seg[i]
        else:
            before = seg[i - 1] if i > 0 else seg[0]
            after = seg[i] if i < m - 1 else seg[-1]
        t = before + after
        norm = np.linalg.norm(t)
        tangents[i] = t / norm if norm > 1e-12 else before
    us = np.empty((m, 3))
    us[0] = _any_perpendicular(tangents[0])
    for i in range(1, m):
        us[i] = _transport(us[i - 1], tangents[i - 1], tangents[i])
    if closed and m > 2:
        # spread the holonomy twist evenly around the loop
        back = _transport(us[-1], tangents[-1], tangents[0])
        twist = math.atan2(np.dot(np.cross(back, us[0]), tangents[0]), np.dot(back, us[0]))
        for i in range(1, m):
            us[i] = _rotate(us[i], tangents[i], twist * i / m)
    return tangents, us


def tube(
    grid: vtk.UnstructuredGrid,
    radius: float,
    sides: int = DEFAULT_TUBE_SIDES,
    capped: bool = True,
) -> SurfaceMesh:
    """Sweep a ``sides``-gon of circumradius ``radius`` along the grid's lines.

    Every ring vertex lies exactly ``radius`` from its polyline point.  Open
    polylines get triangle-fan caps when ``capped``; each cap adds a center
    vertex.
    """
    if not radius > 0:
        raise InvalidParameter(f"tube radius must be positive, got {radius}")
    if int(sides) != sides or sides < 3:
        raise InvalidParameter(f"tube needs at least 3 sides, got {sides}")
    sides = int(sides)
    _, segments = grid.cells_of_type(vtk.LINE)
    if not len(segments):
        raise NoLineCells("grid has no line cells")
    lengths = np.linalg.norm(grid.points[segments[:, 1]] - grid.points[segments[:, 0]], axis=1)
    if (lengths <= 0).any():
        i = int(np.flatnonzero(lengths <= 0)[0])
        raise DegenerateSegment(f"line segment {segments[i].tolist()} has zero length")

    angles = 2.0 * np.pi * np.arange(sides) / sides
    cos, sin = np.cos(angles), np.sin(angles)
    positions, normals, source, tris = [], [], [], []
    base = 0
    for ids, closed in chain_segments(segments):
        pts = grid.points[ids]
        tangents, us = _ring_frames(pts, closed)
        vs = np.cross(tangents, us)
        radial = cos[None, :, None] * us[:, None, :] + sin[None, :, None] * vs[:, None, :]
        m = len(ids)
        positions.append((pts[:, None, :] + radius * radial).reshape(-1, 3))
        normals.append(radial.reshape(-1, 3))
        source.append(np.repeat(ids, sides))

        k = np.arange(sides)
        k1 = (k + 1) % sides
        n_rings = m if closed else m - 1
        for i in range(n_rings):
            j = (i + 1) % m
            a, b = base + i * sides + k, base + i * sides + k1
            c, d = base + j * sides + k, base + j * sides + k1
            quad = np.empty((2 * sides, 3), dtype=np.int64)
            quad[0::2] = np.stack([a, b, d], axis=1)
            quad[1::2] = np.stack([a, d, c], axis=1)
            tris.append(quad)
        count = m * sides
        if capped and not closed:
            for ring, tangent, pid, flip in ((0, tangents[0], ids[0], True),
                                             (m - 1, tangents[-1], ids[-1], False)):
                center = base + count
                positions.append(grid.points[pid][None, :])
                normals.append((-tangent if flip else tangent)[None, :])
                source.append(np.array([pid]))
                a = base + ring * sides + k
                b = base + ring * sides + k1
                fan = np.stack([np.full(sides, center), b, a] if flip else [np.full(sides, center), a, b], axis=1)
                tris.append(fan)
                count += 1
        base += count

    src = np.concatenate(source)
    return SurfaceMesh(
        np.concatenate(positions),
        np.concatenate(tris),
        np.concatenate(normals),
        source_ids=src,
        point_data={k: v[src] for k, v in grid.point_fields.items()},
    )
