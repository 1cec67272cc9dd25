"""Convert finite-element simulation results into web-ready AR assets."""
from .animate import AnimationPlan, build_morph, build_stop_motion
from .colormap import ColorMap, RangeSpec, get_colormap, map_scalars
from .decimate import CollapseLog, decimate, replay
from .errors import PipelineError
from .gltf import export_glb, summarize_glb, validate_glb
from .mesh import SurfaceMesh, Transform, apply_transform, auto_fit, is_watertight
from .ply import read_ply, write_ply
from .surface import extract_boundary, solidify, tube
from .vtk import TimeSeries, UnstructuredGrid, load_series, parse_vtk, read_vtk, select_field, write_vtk

__version__ = "0.1.0"
