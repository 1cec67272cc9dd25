"""
Synthetic stand-ins for continuum, shell and beam simulation results.

They have analytic displacement fields so pipelines can be checked against
closed-form positions.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from . import vtk
from .mesh import SurfaceMesh, compute_vertex_normals
from .vtk import UnstructuredGrid


def hex_lattice(nx: int, ny: int, nz: int, size=(1.0, 1.0, 1.0)) -> Tuple[np.ndarray, np.ndarray]:
    """Points of an ``(nx+1)(ny+1)(nz+1)`` lattice and its ``nx*ny*nz``
    hexahedra in VTK point order.  Point id = ``i + (nx+1)*(j + (ny+1)*k)``."""
    xs = np.linspace(0.0, size[0], nx + 1)
    ys = np.linspace(0.0, size[1], ny + 1)
    zs = np.linspace(0.0, size[2], nz + 1)
    z, y, x = np.meshgrid(zs, ys, xs, indexing="ij")
    points = np.column_stack([x.ravel(), y.ravel(), z.ravel()])

    def pid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    hexes = np.stack([
        pid(i, j, k), pid(i + 1, j, k), pid(i + 1, j + 1, k), pid(i, j + 1, k),
        pid(i, j, k + 1), pid(i + 1, j, k + 1), pid(i + 1, j + 1, k + 1), pid(i, j + 1, k + 1),
    ], axis=1)
    return points, hexes


def grid_from_cells(points, cells: np.ndarray, cell_type: int, point_fields=None) -> UnstructuredGrid:
    cells = np.asarray(cells, dtype=np.int64)
    arity = cells.shape[1]
    return UnstructuredGrid(
        points,
        np.full(len(cells), cell_type),
        np.arange(len(cells) + 1) * arity,
        cells.ravel(),
        point_fields or {},
    )


def cantilever_displacement(points: np.ndarray, t: float, length: float, tip: float) -> np.ndarray:
    """Euler-Bernoulli tip-loaded cantilever deflection along z, scaled by ``t``."""
    s = np.clip(points[:, 0] / length, 0.0, 1.0)
    u = np.zeros_like(points)
    u[:, 2] = tip * t * s * s * (3.0 - s) / 2.0
    return u


def bending_series(
    frames: int = 10,
    cells=(10, 2, 2),
    size=(10.0, 1.0, 1.0),
    tip: float = 2.0,
) -> List[UnstructuredGrid]:
    """Hex-lattice beam bending under a load ramped linearly over ``frames``."""
    points, hexes = hex_lattice(*cells, size=size)
    out = []
    for f in range(frames):
        t = f / max(frames - 1, 1)
        u = cantilever_displacement(points, t, size[0], tip)
        # bending stress ~ moment * distance from the neutral axis
        stress = t * (size[0] - points[:, 0]) * (points[:, 2] - size[2] / 2.0)
        out.append(grid_from_cells(points + u, hexes, vtk.HEXAHEDRON,
                                   {"displacement": u, "stress": stress}))
    return out


def quad_grid(n: int, m: int, extent: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(-extent, extent, n + 1)
    ys = np.linspace(-extent, extent, m + 1)
    y, x = np.meshgrid(ys, xs, indexing="ij")
    points = np.column_stack([x.ravel(), y.ravel(), np.zeros(x.size)])
    j, i = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i + (n + 1) * j
    quads = np.stack([a, a + 1, a + 1 + (n + 1), a + (n + 1)], axis=1)
    return points, quads


def bulge_series(frames: int = 6, n: int = 12, height: float = 0.4) -> List[UnstructuredGrid]:
    """Square membrane clamped at its rim, inflated into a bulge (shell analogue)."""
    points, quads = quad_grid(n, n)
    out = []
    for f in range(frames):
        t = f / max(frames - 1, 1)
        shape = (1.0 - points[:, 0] ** 2) * (1.0 - points[:, 1] ** 2)
        u = np.zeros_like(points)
        u[:, 2] = height * t * shape
        strain = t * shape
        out.append(grid_from_cells(points + u, quads, vtk.QUAD,
                                   {"displacement": u, "strain": strain}))
    return out


def undulated_fiber(
    segments: int = 100,
    length: float = 10.0,
    amplitude: float = 0.5,
    waves: float = 4.0,
    stretch: float = 0.0,
) -> UnstructuredGrid:
    """Sinusoidal polyline of line cells; ``stretch`` straightens and extends it."""
    s = np.linspace(0.0, 1.0, segments + 1)
    x = length * (1.0 + stretch) * s
    y = amplitude * (1.0 - stretch) * np.sin(2.0 * np.pi * waves * s)
    z = 0.2 * amplitude * (1.0 - stretch) * np.cos(2.0 * np.pi * waves * s)
    points = np.column_stack([x, y, z])
    lines = np.stack([np.arange(segments), np.arange(1, segments + 1)], axis=1)
    return grid_from_cells(points, lines, vtk.LINE, {"strain": np.full(len(points), stretch)
                                                     + 0.1 * np.abs(np.sin(2 * np.pi * waves * s))})


def fiber_series(frames: int = 6, segments: int = 100, max_stretch: float = 0.3) -> List[UnstructuredGrid]:
    return [
        undulated_fiber(segments, stretch=max_stretch * f / max(frames - 1, 1))
        for f in range(frames)
    ]


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> SurfaceMesh:
    """Subdivided icosahedron: ``20 * 4**subdivisions`` triangles."""
    phi = (1.0 + 5 ** 0.5) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    pts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = pts[a] + pts[b]
                pts.append(m / np.linalg.norm(m))
                cache[key] = len(pts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return compute_vertex_normals(SurfaceMesh(radius * np.array(pts), np.array(faces)))
