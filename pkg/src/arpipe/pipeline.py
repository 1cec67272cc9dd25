"""End-to-end conversion: ingest, surface, color, decimate, fit, animate, export."""
from __future__ import annotations

import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import vtk
from .animate import build_morph, build_stop_motion
from .colormap import DEFAULT_COLORMAP, RangeSpec, compute_ranges, get_colormap, map_scalars
from .decimate import decimate, replay
from .errors import ConnectivityMismatch, InvalidParameter, NoSurfaceCells, UnknownFormat
from .gltf import export_glb
from .mesh import (
    DEFAULT_FIT_SIZE,
    IDENTITY_QUAT,
    SurfaceMesh,
    Transform,
    apply_transform,
    auto_fit,
    merge_meshes,
    quat_from_axis_angle,
)
from .ply import read_ply, write_ply
from .surface import (
    DEFAULT_SOLIDIFY_FRACTION,
    DEFAULT_TUBE_RADIUS_FRACTION,
    DEFAULT_TUBE_SIDES,
    bbox_diagonal,
    extract_boundary,
    solidify,
    tube,
)

log = logging.getLogger(__name__)


@dataclass
class ConvertOptions:
    out: str
    field: Optional[str] = None
    component: Optional[str] = None
    colormap: str = DEFAULT_COLORMAP
    range: RangeSpec = RangeSpec()
    decimate: float = 1.0
    solidify: Optional[float] = None
    auto_solidify: bool = True
    beam_radius: Optional[float] = None
    beam_sides: int = DEFAULT_TUBE_SIDES
    animate: Optional[str] = None      # "stop" | "morph"
    interp: str = "step"
    fps: float = 10.0
    fit: float = DEFAULT_FIT_SIZE      # <= 0 disables fitting
    up: str = "y"
    unlit: bool = False
    ply_out: Optional[str] = None
    workers: int = 1


def sniff_format(head: bytes) -> str:
    if head.startswith(b"glTF"):
        return "glb"
    if head.startswith(b"ply"):
        return "ply"
    if head.lstrip().lower().startswith(b"# vtk"):
        return "vtk"
    raise UnknownFormat("unrecognized file format (expected VTK, PLY or GLB)")


def read_input(path: str):
    with open(path, "rb") as f:
        data = f.read()
    kind = sniff_format(data[:64])
    try:
        if kind == "vtk":
            return vtk.parse_vtk(data)
        if kind == "ply":
            return read_ply(data)
    except Exception as exc:
        if hasattr(exc, "code"):
            raise type(exc)(f"{path}: {exc}") from exc
        raise
    raise UnknownFormat(f"{path}: GLB files cannot be converted")


def atomic_write(path: str, data: bytes):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".arpipe-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _surface(grid: vtk.UnstructuredGrid, opts: ConvertOptions, scale: float) -> SurfaceMesh:
    parts = []
    if grid.has_cells(vtk.VOLUME_TYPES + vtk.SURFACE_TYPES):
        surf = extract_boundary(grid)
        shell_only = not grid.has_cells(vtk.VOLUME_TYPES)
        if opts.solidify is not None or (shell_only and opts.auto_solidify):
            thickness = opts.solidify if opts.solidify is not None else DEFAULT_SOLIDIFY_FRACTION * scale
            surf = solidify(surf, thickness)
        parts.append(surf)
    if grid.has_cells([vtk.LINE]):
        radius = opts.beam_radius if opts.beam_radius is not None else DEFAULT_TUBE_RADIUS_FRACTION * scale
        parts.append(tube(grid, radius, opts.beam_sides))
    if not parts:
        raise NoSurfaceCells("grid holds no renderable cells")
    return merge_meshes(parts)


def _pmap(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _up_rotation(up: str) -> np.ndarray:
    if up == "y":
        return IDENTITY_QUAT
    if up == "z":
        return quat_from_axis_angle((1.0, 0.0, 0.0), -np.pi / 2.0)
    raise InvalidParameter(f"--up must be y or z, got {up!r}")


def convert(paths: Sequence[str], opts: ConvertOptions,
            stage: Callable[[str], None] = lambda line: None) -> dict:
    """Run the whole pipeline and write ``opts.out``.  Returns a summary dict."""
    if opts.animate not in (None, "stop", "morph"):
        raise InvalidParameter(f"--animate must be stop or morph, got {opts.animate!r}")
    if not opts.fps > 0:
        raise InvalidParameter(f"--fps must be positive, got {opts.fps}")
    if not (0.0 < opts.decimate <= 1.0):
        raise InvalidParameter(f"--decimate must lie in (0, 1], got {opts.decimate}")
    rotation = _up_rotation(opts.up)
    cmap = get_colormap(opts.colormap) if opts.field else None

    inputs = _pmap(read_input, list(paths), opts.workers)
    kinds = {type(x) for x in inputs}
    if len(kinds) != 1:
        raise UnknownFormat("cannot mix VTK and PLY inputs in one conversion")
    summary = {"frames": len(inputs)}

    if isinstance(inputs[0], vtk.UnstructuredGrid):
        series = vtk.TimeSeries(tuple(inputs))
        g0 = series.frames[0]
        stage(f"stage: ingest frames={len(series)} points={g0.n_points} cells={g0.n_cells} "
              f"constant_connectivity={str(series.constant_connectivity).lower()}")
        if opts.animate == "morph" and not series.constant_connectivity:
            i = series.first_mismatch()
            raise ConnectivityMismatch(
                f"frame {i} ({paths[i]}) has different cells than frame 0 ({paths[0]}); "
                "morph animation needs constant connectivity"
            )
        scale = bbox_diagonal(g0.points)
        meshes = _pmap(lambda g: _surface(g, opts, scale), list(series.frames), opts.workers)
        stage(f"stage: surface vertices={meshes[0].n_vertices} triangles={meshes[0].n_triangles}")
        if opts.field:
            values = [vtk.select_field(g, opts.field, opts.component) for g in series.frames]
            ranges = compute_ranges(values, opts.range)
            meshes = [
                m.with_(colors=map_scalars(v[m.source_ids], cmap, r))
                for m, v, r in zip(meshes, values, ranges)
            ]
            lo, hi = ranges[0]
            stage(f"stage: color field={opts.field} colormap={cmap.name} range={lo:.6g}:{hi:.6g}")
    else:
        meshes = list(inputs)
        stage(f"stage: ingest frames={len(meshes)} format=ply")
        stage(f"stage: surface vertices={meshes[0].n_vertices} triangles={meshes[0].n_triangles}")
        if opts.field:
            log.warning("--field ignored for PLY input; using embedded vertex colors")

    if opts.decimate < 1.0:
        before = meshes[0].n_triangles
        shared = all(
            m.n_vertices == meshes[0].n_vertices and np.array_equal(m.triangles, meshes[0].triangles)
            for m in meshes[1:]
        )
        if len(meshes) == 1:
            meshes = [decimate(meshes[0], opts.decimate)[0]]
        elif shared:
            _, collapse_log = decimate(meshes[0], opts.decimate)
            meshes = _pmap(lambda m: replay(m, collapse_log), meshes, opts.workers)
        else:
            meshes = [decimate(m, opts.decimate)[0] for m in meshes]
        stage(f"stage: decimate ratio={opts.decimate:g} triangles={before}->{meshes[0].n_triangles}")

    if opts.fit > 0:
        fit = auto_fit(meshes, opts.fit, rotation)
    else:
        fit = Transform(1.0, rotation)
    meshes = [apply_transform(m, fit) for m in meshes]
    stage(f"stage: fit size={opts.fit:g} scale={fit.scale:.6g} up={opts.up}")

    mode = opts.animate or "stop"
    if len(meshes) > 1 and mode == "morph":
        for i, m in enumerate(meshes[1:], start=1):
            if m.n_vertices != meshes[0].n_vertices or not np.array_equal(m.triangles, meshes[0].triangles):
                raise ConnectivityMismatch(
                    f"frame {i} ({paths[i]}) connectivity differs from frame 0 ({paths[0]}) "
                    "after surfacing; morph animation needs constant connectivity"
                )
        plan = build_morph(meshes, opts.fps, opts.interp)
        stage(f"stage: animate mode=morph targets={plan.n_targets} "
              f"interp={opts.interp} duration={plan.duration:g}s")
    else:
        plan = build_stop_motion(meshes, opts.fps)
        if len(meshes) > 1:
            stage(f"stage: animate mode=stop nodes={len(meshes)} duration={plan.duration:g}s")
    summary["mode"] = plan.mode

    data = export_glb(plan, "unlit" if opts.unlit else "lit")
    atomic_write(opts.out, data)
    stage(f"stage: export path={opts.out} bytes={len(data)}")
    summary.update(bytes=len(data), vertices=meshes[0].n_vertices, triangles=meshes[0].n_triangles)

    if opts.ply_out:
        if len(meshes) > 1 and "{" in opts.ply_out:
            for i, m in enumerate(meshes):
                atomic_write(opts.ply_out.format(i=i, frame=i), write_ply(m))
        else:
            atomic_write(opts.ply_out, write_ply(meshes[0]))
        stage(f"stage: ply path={opts.ply_out}")
    return summary
