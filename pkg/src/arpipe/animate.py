"""
Time-series animation plans.

Two encodings are offered:

``stop_motion``
    one node per frame; a step-interpolated scale track shows exactly one
    node at any time by scaling the others to zero.
``morph``
    frame 0 is the base mesh, every later frame becomes a morph target of
    per-vertex position deltas, driven by a weight track that is one-hot at
    each keyframe.  Requires identical connectivity in every frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadFps, ConnectivityMismatch, EmptyFrames, InvalidParameter
from .mesh import SurfaceMesh

STOP_MOTION = "stop_motion"
MORPH = "morph"
STATIC = "static"


@dataclass(frozen=True, eq=False)
class ScaleTrack:
    """Step-interpolated uniform scale keyframes for one node."""

    times: np.ndarray
    values: np.ndarray

    def sample(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(i, 0)])


@dataclass(frozen=True, eq=False)
class AnimationPlan:
    mode: str
    fps: float
    duration: float
    frames: Tuple[SurfaceMesh, ...] = ()
    scale_tracks: Tuple[ScaleTrack, ...] = ()
    base: Optional[SurfaceMesh] = None
    targets: Optional[np.ndarray] = None       # (n_targets, n_vertices, 3)
    key_times: Optional[np.ndarray] = None     # (n_keys,)
    weights: Optional[np.ndarray] = None       # (n_keys, n_targets)
    interpolation: str = "step"

    @property
    def meshes(self) -> Tuple[SurfaceMesh, ...]:
        return (self.base,) if self.mode == MORPH else self.frames

    @property
    def n_targets(self) -> int:
        return 0 if self.targets is None else len(self.targets)

    def visible_nodes(self, t: float) -> List[int]:
        """Nodes with scale 1 at time ``t`` (stop-motion and static plans)."""
        if not self.scale_tracks:
            return list(range(len(self.frames)))
        return [i for i, tr in enumerate(self.scale_tracks) if tr.sample(t) == 1.0]

    def morph_weights(self, t: float) -> np.ndarray:
        keys, w = self.key_times, self.weights
        if t <= keys[0]:
            return w[0].copy()
        if t >= keys[-1]:
            return w[-1].copy()
        i = int(np.searchsorted(keys, t, side="right")) - 1
        if self.interpolation == "step":
            return w[i].copy()
        s = (t - keys[i]) / (keys[i + 1] - keys[i])
        return (1.0 - s) * w[i] + s * w[i + 1]

    def morph_positions(self, t: float) -> np.ndarray:
        return self.base.positions + np.tensordot(self.morph_weights(t), self.targets, axes=1)


def _check(frames, fps):
    frames = tuple(frames)
    if not frames:
        raise EmptyFrames("animation needs at least one frame")
    if not fps > 0:
        raise BadFps(f"fps must be positive, got {fps}")
    return frames


def _key_times(n: int, fps: float, frame_times: Optional[Sequence[float]]):
    if frame_times is None:
        return np.arange(n) / fps, n / fps
    times = np.asarray(frame_times, dtype=np.float64).ravel()
    if len(times) != n or np.any(np.diff(times) <= 0):
        raise InvalidParameter("frame_times must be strictly increasing, one per frame")
    times = times - times[0]
    step = (times[-1] / (n - 1)) if n > 1 else 1.0 / fps
    return times, float(times[-1] + step)


def build_stop_motion(
    frames: Sequence[SurfaceMesh],
    fps: float,
    frame_times: Optional[Sequence[float]] = None,
) -> AnimationPlan:
    """Node ``i`` is shown on ``[t_i, t_{i+1})``; the last one stays until the end."""
    frames = _check(frames, fps)
    n = len(frames)
    times, duration = _key_times(n, fps, frame_times)
    if n == 1:
        return AnimationPlan(STATIC, float(fps), duration, frames)
    tracks = []
    for i in range(n):
        on = times[i]
        off = times[i + 1] if i + 1 < n else duration
        if i == 0:
            t, v = [on, off], [1.0, 0.0]
        elif i == n - 1:
            t, v = [0.0, on, off], [0.0, 1.0, 1.0]
        else:
            t, v = [0.0, on, off], [0.0, 1.0, 0.0]
        tracks.append(ScaleTrack(np.array(t), np.array(v)))
    return AnimationPlan(STOP_MOTION, float(fps), duration, frames, tuple(tracks))


def build_morph(
    frames: Sequence[SurfaceMesh],
    fps: float,
    interpolation: str = "step",
    frame_times: Optional[Sequence[float]] = None,
) -> AnimationPlan:
    """Morph-target plan: base is frame 0, target ``i-1`` holds
    ``frame_i - frame_0`` and its weight is 1 exactly at keyframe ``i``."""
    frames = _check(frames, fps)
    if interpolation not in ("step", "linear"):
        raise InvalidParameter(f"interpolation must be step or linear, got {interpolation!r}")
    base = frames[0]
    for i, f in enumerate(frames[1:], start=1):
        if f.n_vertices != base.n_vertices or not np.array_equal(f.triangles, base.triangles):
            raise ConnectivityMismatch(
                f"frame {i} connectivity differs from frame 0 "
                f"({f.n_vertices} vs {base.n_vertices} vertices, "
                f"{f.n_triangles} vs {base.n_triangles} triangles)"
            )
    n = len(frames)
    times, duration = _key_times(n, fps, frame_times)
    if n == 1:
        return AnimationPlan(STATIC, float(fps), duration, frames)
    targets = np.stack([f.positions - base.positions for f in frames[1:]])
    weights = np.zeros((n, n - 1))
    weights[np.arange(1, n), np.arange(n - 1)] = 1.0
    return AnimationPlan(
        MORPH, float(fps), duration, (base,),
        base=base, targets=targets, key_times=times, weights=weights,
        interpolation=interpolation,
    )


def static_plan(mesh: SurfaceMesh) -> AnimationPlan:
    return AnimationPlan(STATIC, 1.0, 0.0, (mesh,))
