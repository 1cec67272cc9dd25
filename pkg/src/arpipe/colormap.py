"""Scalar fields to 8-bit RGBA vertex colors."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParameter
from .vtk import select_field

log = logging.getLogger(__name__)

DEFAULT_COLORMAP = "coolwarm"

# (t, r, g, b) control points; the smooth maps are matplotlib's 256-entry
# tables thinned to 32 adaptively placed knots (under one 8-bit step of error)
_TABLES = {
    "viridis": (
        (0.000000, 0.267004, 0.004874, 0.329415),
        (0.015686, 0.272594, 0.025563, 0.353093),
        (0.031373, 0.277018, 0.050344, 0.375715),
        (0.058824, 0.281924, 0.089666, 0.412415),
        (0.086275, 0.283187, 0.125848, 0.444960),
        (0.113725, 0.280868, 0.160771, 0.472899),
        (0.137255, 0.276194, 0.190074, 0.493001),
        (0.164706, 0.267968, 0.223549, 0.512008),
        (0.192157, 0.257322, 0.256130, 0.526563),
        (0.223529, 0.243113, 0.292092, 0.538516),
        (0.282353, 0.214298, 0.355619, 0.551184),
        (0.356863, 0.180629, 0.429975, 0.557282),
        (0.439216, 0.149039, 0.508051, 0.557250),
        (0.505882, 0.126453, 0.570633, 0.549841),
        (0.537255, 0.120092, 0.600104, 0.542530),
        (0.560784, 0.120081, 0.622161, 0.534946),
        (0.584314, 0.126326, 0.644107, 0.525311),
        (0.603922, 0.137339, 0.662252, 0.515571),
        (0.635294, 0.166383, 0.690856, 0.496502),
        (0.666667, 0.208030, 0.718701, 0.472873),
        (0.701961, 0.266941, 0.748751, 0.440573),
        (0.737255, 0.335885, 0.777018, 0.402049),
        (0.776471, 0.421908, 0.805774, 0.351910),
        (0.815686, 0.515992, 0.831158, 0.294279),
        (0.858824, 0.626579, 0.854645, 0.223353),
        (0.905882, 0.751884, 0.874951, 0.143228),
        (0.921569, 0.793760, 0.880678, 0.120005),
        (0.933333, 0.824940, 0.884720, 0.106217),
        (0.949020, 0.866013, 0.889868, 0.095953),
        (0.964706, 0.906311, 0.894855, 0.098125),
        (0.980392, 0.945636, 0.899815, 0.112838),
        (1.000000, 0.993248, 0.906157, 0.143936),
    ),
    "plasma": (
        (0.000000, 0.050383, 0.029803, 0.527975),
        (0.007843, 0.075353, 0.027206, 0.538007),
        (0.015686, 0.096379, 0.025165, 0.547103),
        (0.043137, 0.156421, 0.020651, 0.574065),
        (0.082353, 0.227983, 0.016007, 0.604867),
        (0.125490, 0.299855, 0.009561, 0.631624),
        (0.156863, 0.350150, 0.004382, 0.646298),
        (0.188235, 0.399411, 0.000859, 0.656133),
        (0.219608, 0.447714, 0.002080, 0.660240),
        (0.247059, 0.489055, 0.010127, 0.658534),
        (0.262745, 0.512206, 0.018833, 0.655209),
        (0.278431, 0.534952, 0.031217, 0.650165),
        (0.309804, 0.579029, 0.064296, 0.635126),
        (0.345098, 0.625987, 0.103312, 0.611305),
        (0.388235, 0.679160, 0.151848, 0.575189),
        (0.431373, 0.727670, 0.200586, 0.535293),
        (0.478431, 0.775796, 0.253658, 0.491171),
        (0.525490, 0.819651, 0.306812, 0.448306),
        (0.600000, 0.881443, 0.392529, 0.383229),
        (0.670588, 0.930798, 0.477867, 0.322697),
        (0.733333, 0.965024, 0.559118, 0.268513),
        (0.792157, 0.986345, 0.640969, 0.217948),
        (0.843137, 0.994324, 0.716681, 0.177208),
        (0.866667, 0.994141, 0.753137, 0.161404),
        (0.890196, 0.991209, 0.790537, 0.149377),
        (0.909804, 0.986509, 0.822401, 0.143557),
        (0.925490, 0.981190, 0.848329, 0.142279),
        (0.952941, 0.968443, 0.894564, 0.147014),
        (0.980392, 0.951726, 0.941671, 0.152925),
        (0.992157, 0.944152, 0.961916, 0.146861),
        (0.996078, 0.941896, 0.968590, 0.140956),
        (1.000000, 0.940015, 0.975158, 0.131326),
    ),
    "coolwarm": (
        (0.000000, 0.229806, 0.298718, 0.753683),
        (0.062745, 0.304174, 0.406945, 0.845263),
        (0.094118, 0.343278, 0.459354, 0.884122),
        (0.125490, 0.383662, 0.510183, 0.917831),
        (0.156863, 0.425199, 0.559058, 0.946061),
        (0.188235, 0.467678, 0.605591, 0.968546),
        (0.219608, 0.510824, 0.649397, 0.985079),
        (0.250980, 0.554312, 0.690097, 0.995516),
        (0.282353, 0.597777, 0.727330, 0.999777),
        (0.313725, 0.640828, 0.760752, 0.997846),
        (0.345098, 0.683056, 0.790043, 0.989768),
        (0.376471, 0.724041, 0.814910, 0.975651),
        (0.407843, 0.763363, 0.835092, 0.955658),
        (0.439216, 0.800601, 0.850358, 0.930008),
        (0.470588, 0.835345, 0.860514, 0.898970),
        (0.501961, 0.867428, 0.864377, 0.862602),
        (0.529412, 0.895882, 0.849906, 0.823499),
        (0.560784, 0.922681, 0.828568, 0.777054),
        (0.592157, 0.943432, 0.802276, 0.729172),
        (0.623529, 0.958176, 0.771234, 0.680301),
        (0.654902, 0.966962, 0.735670, 0.630877),
        (0.686275, 0.969851, 0.695830, 0.581312),
        (0.717647, 0.966922, 0.651969, 0.531997),
        (0.749020, 0.958279, 0.604335, 0.483297),
        (0.784314, 0.941728, 0.546413, 0.429707),
        (0.811765, 0.924409, 0.498590, 0.389059),
        (0.843137, 0.899534, 0.440692, 0.344107),
        (0.874510, 0.869655, 0.379274, 0.300941),
        (0.905882, 0.835027, 0.313644, 0.259783),
        (0.937255, 0.795938, 0.241845, 0.220830),
        (0.968627, 0.752704, 0.157576, 0.184258),
        (1.000000, 0.705673, 0.015556, 0.150233),
    ),
    "jet": (
        (0.0000, 0.000000, 0.000000, 0.500000),
        (0.1100, 0.000000, 0.000000, 1.000000),
        (0.1250, 0.000000, 0.000000, 1.000000),
        (0.3400, 0.000000, 0.860000, 1.000000),
        (0.3500, 0.000000, 0.900000, 0.967742),
        (0.3750, 0.080645, 1.000000, 0.887097),
        (0.6400, 0.935484, 1.000000, 0.032258),
        (0.6500, 0.967742, 0.962963, 0.000000),
        (0.6600, 1.000000, 0.925926, 0.000000),
        (0.8900, 1.000000, 0.074074, 0.000000),
        (0.9100, 0.909091, 0.000000, 0.000000),
        (1.0000, 0.500000, 0.000000, 0.000000),
    ),
    "grayscale": tuple((t, t, t, t) for t in np.linspace(0.0, 1.0, 9).tolist()),
}


@dataclass(frozen=True, eq=False)
class ColorMap:
    name: str
    control_points: np.ndarray  # (k, 4): t, r, g, b

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=np.float64)
        if cp.ndim != 2 or cp.shape[1] != 4 or len(cp) < 2:
            raise InvalidParameter("colormap needs at least two (t, r, g, b) control points")
        t = cp[:, 0]
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise InvalidParameter("colormap t values must rise strictly from 0 to 1")
        if np.any(cp[:, 1:] < 0) or np.any(cp[:, 1:] > 1):
            raise InvalidParameter("colormap channels must lie in [0, 1]")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        """Linear interpolation of float RGB at parameters ``t`` in [0, 1]."""
        cp = self.control_points
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        return np.stack([np.interp(t, cp[:, 0], cp[:, c]) for c in (1, 2, 3)], axis=-1)


def builtin_colormaps() -> List[str]:
    return sorted(_TABLES)


def get_colormap(name_or_path: str = DEFAULT_COLORMAP) -> ColorMap:
    """Built-in map by name, or a ``t r g b`` text file by path."""
    key = name_or_path.lower()
    if key in ("gray", "grey", "greyscale"):
        key = "grayscale"
    if key in _TABLES:
        return ColorMap(key, np.array(_TABLES[key]))
    if os.path.isfile(name_or_path):
        with open(name_or_path) as f:
            return parse_colormap(f.read(), name=os.path.basename(name_or_path))
    raise InvalidParameter(
        f"unknown colormap {name_or_path!r}; built-ins: {', '.join(builtin_colormaps())}"
    )


def parse_colormap(text: str, name: str = "custom") -> ColorMap:
    rows = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise InvalidParameter(f"colormap line {n}: expected 't r g b'")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise InvalidParameter(f"colormap line {n}: non-numeric value") from None
    return ColorMap(name, np.array(rows))


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def map_scalars(values, cmap: ColorMap, value_range: Tuple[float, float]) -> np.ndarray:
    """RGBA ``uint8`` colors for ``values`` clamped into ``value_range``.

    NaN values take the low-end color.
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    if not hi > lo:
        raise InvalidParameter(f"color range needs max > min, got ({lo}, {hi})")
    values = np.asarray(values, dtype=np.float64).ravel()
    if not len(values):
        return np.zeros((0, 4), dtype=np.uint8)
    t = np.nan_to_num((values - lo) / (hi - lo), nan=0.0, posinf=1.0, neginf=0.0)
    rgb = _round_half_away(cmap(np.clip(t, 0.0, 1.0)) * 255.0)
    out = np.full((len(values), 4), 255, dtype=np.uint8)
    out[:, :3] = np.clip(rgb, 0, 255).astype(np.uint8)
    return out


@dataclass(frozen=True)
class RangeSpec:
    """``mode`` is ``global``, ``perframe`` or ``explicit``; values outside
    the range are always clamped."""

    mode: str = "global"
    vmin: Optional[float] = None
    vmax: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("global", "perframe", "explicit"):
            raise InvalidParameter(f"range mode must be global|perframe|explicit, got {self.mode!r}")
        if self.mode == "explicit":
            if self.vmin is None or self.vmax is None or not self.vmin < self.vmax:
                raise InvalidParameter("explicit range needs min < max")

    @classmethod
    def parse(cls, text: str) -> "RangeSpec":
        """``global``, ``perframe`` or ``MIN:MAX``."""
        low = text.strip().lower()
        if low in ("global", "perframe", "per-frame"):
            return cls(low.replace("-", ""))
        lo, sep, hi = text.rpartition(":")
        if not sep:
            raise InvalidParameter(f"bad range {text!r}; use global|perframe|MIN:MAX")
        try:
            return cls("explicit", float(lo), float(hi))
        except ValueError:
            raise InvalidParameter(f"bad range {text!r}; use global|perframe|MIN:MAX") from None


def compute_ranges(frame_values: Sequence[np.ndarray], spec: RangeSpec = RangeSpec()) -> List[Tuple[float, float]]:
    """One ``(min, max)`` per frame under ``spec``.

    A degenerate range ``min == max`` becomes ``(min, min + 1)`` with a
    warning.
    """
    frame_values = [np.asarray(v, dtype=np.float64).ravel() for v in frame_values]
    if spec.mode == "explicit":
        return [(float(spec.vmin), float(spec.vmax))] * len(frame_values)

    def finite_range(v):
        v = v[np.isfinite(v)]
        if not len(v):
            return 0.0, 0.0
        return float(v.min()), float(v.max())

    if spec.mode == "global":
        ranges = [finite_range(np.concatenate(frame_values))] * len(frame_values)
    else:
        ranges = [finite_range(v) for v in frame_values]
    fixed = []
    for lo, hi in ranges:
        if hi <= lo:
            log.warning("degenerate color range (%g, %g); using (%g, %g)", lo, hi, lo, lo + 1.0)
            hi = lo + 1.0
        fixed.append((lo, hi))
    return fixed


def compute_range(series, field: str, component: Optional[str] = None,
                  spec: RangeSpec = RangeSpec()) -> List[Tuple[float, float]]:
    """Per-frame color ranges of a grid field over a :class:`~arpipe.vtk.TimeSeries`."""
    return compute_ranges([select_field(g, field, component) for g in series.frames], spec)
