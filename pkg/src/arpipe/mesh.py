"""Triangle surface mesh, vertex normals and rigid/uniform-scale placement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateBounds, IndexOutOfRange, InvalidParameter

DEFAULT_FIT_SIZE = 0.5


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Indexed triangles with per-vertex position, normal and color.

    ``source_ids`` maps each vertex back to the grid point it was generated
    from (``-1`` when it has none); ``point_data`` holds per-vertex copies of
    grid point fields.
    """

    positions: np.ndarray
    triangles: np.ndarray
    normals: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None
    source_ids: Optional[np.ndarray] = None
    point_data: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        tri = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        n = len(pos)
        if len(tri) and (tri.min() < 0 or tri.max() >= n):
            raise IndexOutOfRange(f"triangle index out of range for {n} vertices")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "triangles", tri)
        if self.normals is not None:
            nrm = np.ascontiguousarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(nrm) != n:
                raise InvalidParameter("normals length differs from vertex count")
            object.__setattr__(self, "normals", nrm)
        if self.colors is not None:
            col = np.ascontiguousarray(self.colors, dtype=np.uint8)
            if col.shape == (n, 3):
                col = np.concatenate([col, np.full((n, 1), 255, np.uint8)], axis=1)
            if col.shape != (n, 4):
                raise InvalidParameter("colors must be one RGBA entry per vertex")
            object.__setattr__(self, "colors", col)
        if self.source_ids is not None:
            src = np.ascontiguousarray(self.source_ids, dtype=np.int64).ravel()
            if len(src) != n:
                raise InvalidParameter("source_ids length differs from vertex count")
            object.__setattr__(self, "source_ids", src)
        data = {k: np.asarray(v) for k, v in self.point_data.items()}
        for k, v in data.items():
            if len(v) != n:
                raise InvalidParameter(f"point data {k!r} length differs from vertex count")
        object.__setattr__(self, "point_data", data)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def with_(self, **changes) -> "SurfaceMesh":
        return replace(self, **changes)

    def take_vertices(self, keep: np.ndarray, triangles: np.ndarray) -> "SurfaceMesh":
        """Subset per-vertex arrays to ``keep`` and attach ``triangles``."""
        return SurfaceMesh(
            self.positions[keep],
            triangles,
            None if self.normals is None else self.normals[keep],
            None if self.colors is None else self.colors[keep],
            None if self.source_ids is None else self.source_ids[keep],
            {k: v[keep] for k, v in self.point_data.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, SurfaceMesh):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return (
            same(self.positions, other.positions)
            and same(self.triangles, other.triangles)
            and same(self.normals, other.normals)
            and same(self.colors, other.colors)
        )


def face_normals(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unnormalized face normals; length equals twice the triangle area."""
    p = positions[triangles]
    return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def compute_vertex_normals(mesh: SurfaceMesh) -> SurfaceMesh:
    """Area-weighted vertex normals.  Vertices with no usable incident area
    get ``(0, 0, 1)``."""
    n = mesh.n_vertices
    fn = face_normals(mesh.positions, mesh.triangles)
    acc = np.zeros((n, 3))
    flat = mesh.triangles.ravel()
    for axis in range(3):
        acc[:, axis] = np.bincount(flat, weights=np.repeat(fn[:, axis], 3), minlength=n)
    length = np.linalg.norm(acc, axis=1)
    good = length > 1e-300
    normals = np.zeros((n, 3))
    normals[:, 2] = 1.0
    normals[good] = acc[good] / length[good, None]
    return mesh.with_(normals=normals)


# --------------------------------------------------------------------------
# placement


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    """Unit quaternion ``(x, y, z, w)`` for a rotation of ``angle`` radians."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(angle / 2.0)
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, math.cos(angle / 2.0)])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Transform:
    """``p' = rotation @ (scale * p) + translation``.

    ``rotation`` is a unit quaternion in glTF ``(x, y, z, w)`` order.
    """

    scale: float = 1.0
    rotation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64).ravel()
        t = np.asarray(self.translation, dtype=np.float64).ravel()
        if not self.scale > 0:
            raise InvalidParameter(f"scale must be positive, got {self.scale}")
        if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise InvalidParameter("rotation must be a unit quaternion (x, y, z, w)")
        if t.shape != (3,):
            raise InvalidParameter("translation must be a 3-vector")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def is_identity(self) -> bool:
        return (
            self.scale == 1.0
            and np.array_equal(self.rotation, IDENTITY_QUAT)
            and not self.translation.any()
        )

    def inverse(self) -> "Transform":
        x, y, z, w = self.rotation
        conj = np.array([-x, -y, -z, w])
        inv_scale = 1.0 / self.scale
        return Transform(inv_scale, conj, -inv_scale * (quat_to_matrix(conj) @ self.translation))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        return (self.scale * points) @ self.matrix.T + self.translation


def apply_transform(mesh: SurfaceMesh, t: Transform) -> SurfaceMesh:
    if t.is_identity():
        return mesh
    rot = t.matrix
    normals = None if mesh.normals is None else mesh.normals @ rot.T
    return mesh.with_(positions=t.apply_points(mesh.positions), normals=normals)


Geometry = Union[SurfaceMesh, np.ndarray, Iterable[Union[SurfaceMesh, np.ndarray]]]


def bounding_box(geometry: Geometry) -> Tuple[np.ndarray, np.ndarray]:
    """Union bounding box of a mesh, a point array or an iterable of either."""
    if isinstance(geometry, (SurfaceMesh, np.ndarray)):
        geometry = [geometry]
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for g in geometry:
        pts = g.positions if isinstance(g, SurfaceMesh) else np.asarray(g, dtype=np.float64).reshape(-1, 3)
        if len(pts):
            lo = np.minimum(lo, pts.min(axis=0))
            hi = np.maximum(hi, pts.max(axis=0))
    if not np.all(np.isfinite(lo)):
        raise DegenerateBounds("no geometry to fit")
    return lo, hi


def auto_fit(
    geometry: Geometry,
    target_size: float = DEFAULT_FIT_SIZE,
    rotation: Optional[np.ndarray] = None,
) -> Transform:
    """Transform that centers the union box at the origin, rests it on
    ``y = 0`` and scales its largest extent to ``target_size`` meters.

    ``rotation`` is applied first, so e.g. a z-up model can be stood upright.
    """
    if not target_size > 0:
        raise InvalidParameter("target size must be positive")
    q = IDENTITY_QUAT if rotation is None else np.asarray(rotation, dtype=np.float64)
    if isinstance(geometry, (SurfaceMesh, np.ndarray)):
        geometry = [geometry]
    rot = quat_to_matrix(q)
    rotated = [
        (g.positions if isinstance(g, SurfaceMesh) else np.asarray(g, dtype=np.float64).reshape(-1, 3)) @ rot.T
        for g in geometry
    ]
    lo, hi = bounding_box(rotated)
    extent = float((hi - lo).max())
    if extent <= 0.0:
        raise DegenerateBounds("all points coincide; cannot derive a scale")
    scale = target_size / extent
    center = (lo + hi) / 2.0
    translation = -scale * center
    translation[1] = -scale * lo[1]
    return Transform(scale, q, translation)


# --------------------------------------------------------------------------
# topology helpers


def edge_counts(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges ``(E, 2)`` and how many triangles use each."""
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges.sort(axis=1)
    if not len(edges):
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.unique(edges, axis=0, return_counts=True)


def is_watertight(triangles: np.ndarray) -> bool:
    """Every edge borders exactly two triangles."""
    _, counts = edge_counts(triangles)
    return bool(len(counts)) and bool(np.all(counts == 2))


def boundary_edges(triangles: np.ndarray) -> np.ndarray:
    """Directed edges ``(a, b)`` used by exactly one triangle, in the
    orientation of that triangle, ordered by triangle index."""
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    directed = np.stack([tri, np.roll(tri, -1, axis=1)], axis=2).reshape(-1, 2)
    key = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inverse.ravel()] == 1]


def euler_characteristic(triangles: np.ndarray) -> int:
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    edges, _ = edge_counts(tri)
    return len(np.unique(tri)) - len(edges) + len(tri)


def merge_meshes(meshes: Sequence[SurfaceMesh]) -> SurfaceMesh:
    """Concatenate meshes; optional arrays survive only if every part has them."""
    meshes = list(meshes)
    if len(meshes) == 1:
        return meshes[0]
    base = 0
    tris = []
    for m in meshes:
        tris.append(m.triangles + base)
        base += m.n_vertices

    def cat(attr):
        parts = [getattr(m, attr) for m in meshes]
        return None if any(p is None for p in parts) else np.concatenate(parts)

    keys = set.intersection(*(set(m.point_data) for m in meshes))
    return SurfaceMesh(
        np.concatenate([m.positions for m in meshes]),
        np.concatenate(tris),
        cat("normals"),
        cat("colors"),
        cat("source_ids"),
        {k: np.concatenate([m.point_data[k] for m in meshes]) for k in sorted(keys)},
    )
