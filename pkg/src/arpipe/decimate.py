"""
Quadric-error edge-collapse decimation with a replayable collapse log.

The log records ``(kept, removed)`` vertex pairs against the input vertex
numbering, so the same connectivity edits can be replayed on every frame of
a time series whose frames share one triangle list.  Vertices on the mesh
boundary (or on non-manifold edges) are never touched.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import BadRatio, ConnectivityMismatch
from .mesh import SurfaceMesh, compute_vertex_normals, edge_counts

SINGULAR_DET = 1e-12
DEGENERATE_AREA = 1e-12


@dataclass(frozen=True, eq=False)
class CollapseLog:
    """Ordered collapses plus the vertex remap they produce.

    ``remap[i]`` is the output index of input vertex ``i`` or ``-1`` if it
    was removed.
    """

    pairs: np.ndarray            # (c, 2) kept, removed
    remap: np.ndarray            # (n,)
    source_triangles: np.ndarray  # (m, 3) connectivity the log was recorded on

    @property
    def n_vertices(self) -> int:
        return len(self.remap)

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, CollapseLog):
            return NotImplemented
        return (np.array_equal(self.pairs, other.pairs)
                and np.array_equal(self.remap, other.remap)
                and np.array_equal(self.source_triangles, other.source_triangles))


def _resolve(n: int, pairs: np.ndarray, triangles: np.ndarray):
    """Final representative of every vertex, the remap table and the
    surviving, remapped triangles."""
    final = np.arange(n)
    for k, r in pairs[::-1].tolist():
        final[r] = final[k]
    alive = np.ones(n, dtype=bool)
    alive[pairs[:, 1]] = False
    remap = np.full(n, -1, dtype=np.int64)
    remap[alive] = np.arange(int(alive.sum()))
    tri = final[triangles]
    keep = (tri[:, 0] != tri[:, 1]) & (tri[:, 1] != tri[:, 2]) & (tri[:, 0] != tri[:, 2])
    return alive, remap, remap[tri[keep]]


# quadric as the 10 upper-triangle coefficients of a symmetric 4x4 matrix:
# a2 ab ac ad b2 bc bd c2 cd d2


def _plane_quadrics(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = positions[triangles]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    length = np.linalg.norm(nrm, axis=1)
    ok = length > 0
    nrm[ok] /= length[ok, None]
    nrm[~ok] = 0.0
    d = -np.einsum("ij,ij->i", nrm, p[:, 0])
    a, b, c = nrm.T
    per_face = np.stack([a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d], axis=1)
    q = np.zeros((len(positions), 10))
    for corner in range(3):
        np.add.at(q, triangles[:, corner], per_face)
    return q


def _optimal(q, p_u, p_v):
    a2, ab, ac, ad, b2, bc, bd, c2, cd, d2 = q
    det = a2 * (b2 * c2 - bc * bc) - ab * (ab * c2 - bc * ac) + ac * (ab * bc - b2 * ac)
    if abs(det) < SINGULAR_DET:
        x = ((p_u[0] + p_v[0]) * 0.5, (p_u[1] + p_v[1]) * 0.5, (p_u[2] + p_v[2]) * 0.5)
    else:
        # Cramer's rule on A x = -b
        r0, r1, r2 = -ad, -bd, -cd
        x0 = (r0 * (b2 * c2 - bc * bc) - ab * (r1 * c2 - bc * r2) + ac * (r1 * bc - b2 * r2)) / det
        x1 = (a2 * (r1 * c2 - bc * r2) - r0 * (ab * c2 - bc * ac) + ac * (ab * r2 - r1 * ac)) / det
        x2 = (a2 * (b2 * r2 - r1 * bc) - ab * (ab * r2 - r1 * ac) + r0 * (ab * bc - b2 * ac)) / det
        x = (x0, x1, x2)
    x0, x1, x2 = x
    cost = (a2 * x0 * x0 + 2 * ab * x0 * x1 + 2 * ac * x0 * x2 + 2 * ad * x0
            + b2 * x1 * x1 + 2 * bc * x1 * x2 + 2 * bd * x1
            + c2 * x2 * x2 + 2 * cd * x2 + d2)
    return max(cost, 0.0), x


def _normal(a, b, c):
    ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)


def decimate(mesh: SurfaceMesh, target_ratio: float) -> Tuple[SurfaceMesh, CollapseLog]:
    """Collapse edges in order of quadric error until the triangle count is
    at most ``ceil(target_ratio * n_triangles)`` or no legal collapse is left.

    A collapse is rejected if it would flip an incident triangle, create a
    near-zero-area triangle or break edge-manifoldness.  The kept vertex
    (the lower index) moves to the quadric-optimal point and keeps its own
    color and attributes.
    """
    if not (0.0 < target_ratio <= 1.0):
        raise BadRatio(f"decimation ratio must lie in (0, 1], got {target_ratio}")
    n = mesh.n_vertices
    tris = mesh.triangles
    target = math.ceil(target_ratio * len(tris))
    if len(tris) <= target:
        empty = np.zeros((0, 2), dtype=np.int64)
        return mesh, CollapseLog(empty, np.arange(n), tris.copy())

    pos = mesh.positions.tolist()
    faces: List = tris.tolist()
    vfaces = [set() for _ in range(n)]
    for f, (a, b, c) in enumerate(faces):
        vfaces[a].add(f)
        vfaces[b].add(f)
        vfaces[c].add(f)
    quad = [tuple(row) for row in _plane_quadrics(mesh.positions, tris).tolist()]

    edges, counts = edge_counts(tris)
    locked = np.zeros(n, dtype=bool)
    locked[edges[counts != 2].ravel()] = True
    locked = locked.tolist()

    p = mesh.positions[tris]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    min_area2 = 2.0 * DEGENERATE_AREA * float(areas.mean())

    stamp = [0] * n
    alive = [True] * n
    heap = []
    rejected = set()

    def push(u, v):
        if u > v:
            u, v = v, u
        q = tuple(x + y for x, y in zip(quad[u], quad[v]))
        cost, _ = _optimal(q, pos[u], pos[v])
        heapq.heappush(heap, (cost, u, v, stamp[u], stamp[v]))

    def neighbors(u):
        out = set()
        for f in vfaces[u]:
            out.update(faces[f])
        out.discard(u)
        return out

    def legal(u, v, x):
        shared = vfaces[u] & vfaces[v]
        if len(shared) != 2:
            return False
        opposite = set()
        for f in shared:
            opposite.update(faces[f])
        opposite -= {u, v}
        nu, nv = neighbors(u), neighbors(v)
        if nu & nv != opposite or len(opposite) != 2:
            return False
        if len(nu | nv) - 2 < 3:
            return False
        for w in (u, v):
            for f in vfaces[w] - shared:
                corners = faces[f]
                old = _normal(*(pos[c] for c in corners))
                new = _normal(*(x if c in (u, v) else pos[c] for c in corners))
                if old[0] * new[0] + old[1] * new[1] + old[2] * new[2] < 0:
                    return False
                if math.sqrt(new[0] ** 2 + new[1] ** 2 + new[2] ** 2) <= min_area2:
                    return False
        return True

    for u, v in edges[counts == 2].tolist():
        if not locked[u] and not locked[v]:
            push(u, v)

    live = len(faces)
    log = []
    while heap and live > target:
        cost, u, v, su, sv = heapq.heappop(heap)
        if not (alive[u] and alive[v]) or su != stamp[u] or sv != stamp[v]:
            continue
        if not (vfaces[u] & vfaces[v]):
            continue
        q = tuple(a + b for a, b in zip(quad[u], quad[v]))
        _, x = _optimal(q, pos[u], pos[v])
        if not legal(u, v, x):
            rejected.add((u, v))
            continue

        shared = vfaces[u] & vfaces[v]
        for f in shared:
            for c in faces[f]:
                if c != u and c != v:
                    vfaces[c].discard(f)
            faces[f] = None
        vfaces[u] -= shared
        for f in vfaces[v] - shared:
            faces[f] = [u if c == v else c for c in faces[f]]
            vfaces[u].add(f)
        vfaces[v] = set()
        alive[v] = False
        pos[u] = list(x)
        quad[u] = q
        stamp[u] += 1
        live -= len(shared)
        log.append((u, v))

        ring = sorted(neighbors(u))
        for w in ring:
            if not locked[w]:
                push(u, w)
        for w in ring + [u]:
            for y in sorted(neighbors(w)):
                e = (w, y) if w < y else (y, w)
                if e in rejected:
                    rejected.discard(e)
                    if alive[e[0]] and alive[e[1]]:
                        push(*e)

    pairs = np.array(log, dtype=np.int64).reshape(-1, 2)
    keep, remap, new_tris = _resolve(n, pairs, tris)
    moved = mesh.with_(positions=np.array(pos))
    out = compute_vertex_normals(moved.take_vertices(keep, new_tris))
    return out, CollapseLog(pairs, remap, tris.copy())


def replay(mesh: SurfaceMesh, log: CollapseLog) -> SurfaceMesh:
    """Apply ``log`` to a frame with the same connectivity.

    Each collapsed vertex moves to the midpoint of the frame's own endpoint
    positions, so geometry stays frame-local while connectivity is shared.
    """
    if mesh.n_vertices != log.n_vertices or not np.array_equal(mesh.triangles, log.source_triangles):
        raise ConnectivityMismatch(
            f"frame has {mesh.n_vertices} vertices / {mesh.n_triangles} triangles; "
            f"log was recorded on {log.n_vertices} / {len(log.source_triangles)}"
        )
    if not len(log):
        return mesh
    pos = mesh.positions.copy()
    for k, r in log.pairs.tolist():
        pos[k] = 0.5 * (pos[k] + pos[r])
    keep, _, new_tris = _resolve(mesh.n_vertices, log.pairs, mesh.triangles)
    out = mesh.with_(positions=pos).take_vertices(keep, new_tris)
    return compute_vertex_normals(out) if mesh.normals is not None else out
