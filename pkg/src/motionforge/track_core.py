"""Trajectory and video data model plus the core track operations.

Conventions used throughout the toolkit:

* Image origin is the top-left corner, x grows rightward, y grows
  downward. Coordinates are continuous; the center of pixel ``(row i,
  col j)`` is at ``(x, y) = (j + 0.5, i + 0.5)``.
* A clip of F frames at H x W is stored as a float array of shape
  ``(F, H, W, 3)`` with RGB values in [0, 1]. ``VideoClip.tensor``
  exposes the channels-first ``(F, 3, H, W)`` view.
* Every track stores one point per frame, occluded or not; occlusion
  is carried by the per-frame ``visible`` flag. Positions may lie
  outside the frame only while invisible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, PreconditionError, SchemaError, ShapeError
from .palette import distinct_colors

LATENT_CHANNELS = 16
TEMPORAL_COMPRESSION = 4
SPATIAL_COMPRESSION = 8

__all__ = [
    "VideoClip",
    "TrackPoint",
    "Track",
    "TrackSet",
    "MotionEdit",
    "LatentShape",
    "sample_init_points",
    "latent_shape",
    "limit_correspondences",
    "apply_jitter",
    "bezier_resample",
    "retime_track",
    "save_tracks",
    "load_tracks",
    "tracks_to_dict",
    "tracks_from_dict",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class VideoClip:
    """An in-memory RGB clip, shape (F, H, W, 3), values in [0, 1].

    ``meta`` is an open side-channel (not part of equality) used e.g.
    by the synthetic oracle to ride the generating scene along with
    rendered pixels.
    """

    frames: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float32)
        if f.ndim != 4 or f.shape[3] != 3:
            raise ShapeError(f"clip must have shape (F, H, W, 3), got {f.shape}")
        if f.shape[0] < 1:
            raise ShapeError("clip needs at least one frame")
        object.__setattr__(self, "frames", _readonly(f))

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def tensor(self) -> np.ndarray:
        """Channels-first view, shape (F, 3, H, W)."""
        return np.moveaxis(self.frames, 3, 1)

    def frame(self, f: int) -> np.ndarray:
        return self.frames[f]

    def with_meta(self, **meta) -> "VideoClip":
        merged = dict(self.meta)
        merged.update(meta)
        return VideoClip(self.frames, meta=merged)


# A rendered track-conditioning clip has the same shape contract as an
# ordinary clip: black background, blobs in [0, 1].
BlobVideo = VideoClip


class TrackPoint(NamedTuple):
    frame: int
    x: float
    y: float
    visible: bool


@dataclass(frozen=True)
class Track:
    """One trajectory: a position and visibility flag for every frame.

    ``xy`` has shape (F, 2) float64, ``visible`` shape (F,) bool.
    ``init_frame`` records where the original query point was placed.
    """

    id: int
    color: tuple[float, float, float]
    init_frame: int
    xy: np.ndarray
    visible: np.ndarray

    def __post_init__(self):
        xy = np.ascontiguousarray(np.asarray(self.xy, dtype=np.float64))
        vis = np.ascontiguousarray(np.asarray(self.visible, dtype=bool))
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ShapeError(f"track xy must be (F, 2), got {xy.shape}")
        if vis.shape != (xy.shape[0],):
            raise ShapeError("track visibility length must match xy")
        if not (0 <= self.init_frame < xy.shape[0]):
            raise PreconditionError(
                f"init_frame {self.init_frame} outside [0, {xy.shape[0]})"
            )
        color = tuple(float(c) for c in self.color)
        if len(color) != 3 or any(not (0.0 <= c <= 1.0) for c in color):
            raise PreconditionError(f"color must be an RGB triple in [0,1]^3: {color}")
        object.__setattr__(self, "xy", _readonly(xy))
        object.__setattr__(self, "visible", _readonly(vis))
        object.__setattr__(self, "color", color)

    @property
    def frame_count(self) -> int:
        return self.xy.shape[0]

    def point(self, f: int) -> TrackPoint:
        return TrackPoint(f, float(self.xy[f, 0]), float(self.xy[f, 1]), bool(self.visible[f]))

    @property
    def points(self) -> list[TrackPoint]:
        return [self.point(f) for f in range(self.frame_count)]

    def replace(self, **kw) -> "Track":
        d = dict(id=self.id, color=self.color, init_frame=self.init_frame,
                 xy=self.xy, visible=self.visible)
        d.update(kw)
        return Track(**d)


@dataclass(frozen=True)
class TrackSet:
    """A group of tracks over a shared frame count and frame size."""

    tracks: tuple[Track, ...]
    frame_count: int
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if self.frame_count < 1:
            raise PreconditionError("frame_count must be >= 1")
        ids = [t.id for t in self.tracks]
        if len(set(ids)) != len(ids):
            raise PreconditionError(f"track ids must be unique, got {ids}")
        colors = [t.color for t in self.tracks]
        if len(set(colors)) != len(colors):
            raise PreconditionError("track colors must be pairwise distinct")
        for t in self.tracks:
            if t.frame_count != self.frame_count:
                raise DimensionMismatch(
                    f"track {t.id} spans {t.frame_count} frames, set spans {self.frame_count}"
                )

    def __len__(self) -> int:
        return len(self.tracks)

    def __iter__(self):
        return iter(self.tracks)

    def track_by_id(self, tid: int) -> Track:
        for t in self.tracks:
            if t.id == tid:
                return t
        raise KeyError(f"no track with id {tid}")

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tracks]

    def with_tracks(self, tracks: Iterable[Track]) -> "TrackSet":
        return TrackSet(tuple(tracks), self.frame_count, self.width, self.height)

    def xy_array(self) -> np.ndarray:
        """Stacked positions, shape (N, F, 2)."""
        if not self.tracks:
            return np.zeros((0, self.frame_count, 2))
        return np.stack([t.xy for t in self.tracks])

    def visible_array(self) -> np.ndarray:
        """Stacked visibility, shape (N, F)."""
        if not self.tracks:
            return np.zeros((0, self.frame_count), dtype=bool)
        return np.stack([t.visible for t in self.tracks])


@dataclass(frozen=True)
class MotionEdit:
    """Paired source/target track sets describing one edit.

    Both sets must cover the same frames and carry the same track ids
    with matching colors; the deviation between them is the edit.
    """

    source: TrackSet
    target: TrackSet

    def __post_init__(self):
        s, t = self.source, self.target
        if s.frame_count != t.frame_count:
            raise DimensionMismatch("source and target must span the same frames")
        if (s.width, s.height) != (t.width, t.height):
            raise DimensionMismatch("source and target must share frame dimensions")
        if s.ids != t.ids:
            raise PreconditionError("source and target must contain the same track ids")
        for a, b in zip(s.tracks, t.tracks):
            if a.color != b.color:
                raise PreconditionError(f"track {a.id} color differs between source and target")

    @property
    def frame_count(self) -> int:
        return self.source.frame_count

    def anchored_ids(self) -> list[int]:
        """Ids whose target trajectory is bit-identical to the source."""
        out = []
        for a, b in zip(self.source.tracks, self.target.tracks):
            if np.array_equal(a.xy, b.xy) and np.array_equal(a.visible, b.visible):
                out.append(a.id)
        return out


class LatentShape(NamedTuple):
    f: int
    c: int
    h: int
    w: int


def latent_shape(f: int, h: int, w: int) -> LatentShape:
    """Latent dimensions of an (f, h, w) clip under 4x temporal / 8x
    spatial compression with 16 channels.

    Requires f == 1 (mod 4) and h, w divisible by 8. Round-trips:
    f = 4*(f_lat - 1) + 1, h = 8*h_lat, w = 8*w_lat.
    """
    if f < 1 or (f - 1) % TEMPORAL_COMPRESSION != 0:
        raise ShapeError(f"frame count {f} violates f == 1 (mod {TEMPORAL_COMPRESSION})")
    if h < 1 or h % SPATIAL_COMPRESSION != 0:
        raise ShapeError(f"height {h} violates divisibility by {SPATIAL_COMPRESSION}")
    if w < 1 or w % SPATIAL_COMPRESSION != 0:
        raise ShapeError(f"width {w} violates divisibility by {SPATIAL_COMPRESSION}")
    return LatentShape(
        (f - 1) // TEMPORAL_COMPRESSION + 1,
        LATENT_CHANNELS,
        h // SPATIAL_COMPRESSION,
        w // SPATIAL_COMPRESSION,
    )


def sample_init_points(
    seed: int,
    width: int,
    height: int,
    allowed_frames: Iterable[int],
    n_range: tuple[int, int] = (1, 64),
    frame_count: int | None = None,
) -> TrackSet:
    """Draw N ~ Uniform{n_range} query points, uniform over the frame.

    Each point gets an init frame drawn uniformly from
    ``allowed_frames`` and a color from a distinct random palette. The
    result is a query TrackSet: the position is held constant over all
    frames and the point is visible only at its init frame, which is
    the convention trackers consume.
    """
    allowed = sorted(set(int(f) for f in allowed_frames))
    if not allowed:
        raise PreconditionError("allowed_frames must be non-empty")
    if width < 1 or height < 1:
        raise PreconditionError("frame dimensions must be >= 1")
    lo, hi = int(n_range[0]), int(n_range[1])
    if not (1 <= lo <= hi):
        raise PreconditionError(f"invalid point-count range {n_range}")
    if frame_count is None:
        frame_count = allowed[-1] + 1
    if allowed[-1] >= frame_count or allowed[0] < 0:
        raise PreconditionError("allowed_frames outside [0, frame_count)")

    rng = np.random.default_rng(seed)
    n = int(rng.integers(lo, hi + 1))
    xs = rng.uniform(0.0, width, size=n)
    ys = rng.uniform(0.0, height, size=n)
    init = rng.choice(np.asarray(allowed), size=n)
    colors = distinct_colors(n, rng=rng)

    tracks = []
    for i in range(n):
        xy = np.tile([xs[i], ys[i]], (frame_count, 1))
        vis = np.zeros(frame_count, dtype=bool)
        vis[init[i]] = True
        tracks.append(Track(id=i, color=colors[i], init_frame=int(init[i]), xy=xy, visible=vis))
    return TrackSet(tuple(tracks), frame_count, width, height)


def limit_correspondences(ts: TrackSet, seed: int, cap: int = 20) -> TrackSet:
    """Keep at most ``cap`` tracks, choosing a seeded uniform subset.

    Too many correspondences dilute the conditioning signal, so edits
    are exported with roughly 20 tracks. Survivors are bit-exact and
    keep their original order.
    """
    if cap < 1:
        raise PreconditionError("cap must be >= 1")
    if len(ts) <= cap:
        return ts
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(ts), size=cap, replace=False))
    return ts.with_tracks(ts.tracks[i] for i in keep)


def apply_jitter(ts: TrackSet, seed: int, amplitude: float = 2.0) -> TrackSet:
    """Add per-frame, per-axis uniform noise in (-amplitude, +amplitude)
    to every visible point.

    Invisible points and all visibility flags are untouched. Applied at
    export time to break pixel-perfect alignment between conditioning
    tracks and the input video, which otherwise biases the generator
    toward copying the input.
    """
    if amplitude < 0:
        raise PreconditionError("amplitude must be >= 0")
    if amplitude == 0:
        return ts
    rng = np.random.default_rng(seed)
    tracks = []
    for t in ts.tracks:
        noise = rng.uniform(-amplitude, amplitude, size=t.xy.shape)
        xy = t.xy + noise * t.visible[:, None]
        tracks.append(t.replace(xy=xy))
    return ts.with_tracks(tracks)


def bezier_resample(
    control_points: Sequence[tuple[float, float]],
    frame_span: tuple[int, int],
    easing: Callable[[float], float] | None = None,
) -> np.ndarray:
    """Evaluate the Bezier curve through ``control_points`` at one
    parameter per frame of ``frame_span`` (inclusive).

    Parameters are uniform in frame index, t = (f - f0) / (f1 - f0),
    optionally remapped by ``easing`` (a [0,1] -> [0,1] function).
    Returns positions of shape (f1 - f0 + 1, 2); the endpoints
    interpolate the first and last control points exactly.
    """
    cps = np.asarray(control_points, dtype=np.float64)
    if cps.ndim != 2 or cps.shape[1] != 2 or cps.shape[0] < 2:
        raise PreconditionError("need at least 2 control points of shape (x, y)")
    f0, f1 = int(frame_span[0]), int(frame_span[1])
    if f0 >= f1:
        raise PreconditionError(f"frame span must satisfy f0 < f1, got ({f0}, {f1})")
    ts = (np.arange(f1 - f0 + 1, dtype=np.float64)) / (f1 - f0)
    if easing is not None:
        ts = np.asarray([float(easing(t)) for t in ts])
    degree = cps.shape[0] - 1
    # Bernstein form; the de Casteljau recurrence is kept for tests as
    # an independent reference.
    basis = np.stack(
        [
            math.comb(degree, i) * (1.0 - ts) ** (degree - i) * ts**i
            for i in range(degree + 1)
        ]
    )  # (k, T)
    return basis.T @ cps


def retime_track(track: Track, time_map: Sequence[float] | Callable[[int], float]) -> Track:
    """Resample a track along a new-frame -> source-frame mapping.

    Integer source indices copy the point bit-exactly (so bijective
    integer maps are invertible); fractional indices interpolate (x, y)
    linearly and take visibility from the nearer integer frame (ties
    toward the later frame).
    """
    f_count = track.frame_count
    if callable(time_map):
        src = np.asarray([float(time_map(f)) for f in range(f_count)])
    else:
        src = np.asarray([float(s) for s in time_map])
        if src.shape != (f_count,):
            raise PreconditionError(
                f"time_map must cover all {f_count} frames, got {src.shape}"
            )
    if np.any(src < 0) or np.any(src > f_count - 1):
        raise PreconditionError("time_map source indices outside [0, F-1]")

    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, f_count - 1)
    w = src - i0
    exact = w == 0.0
    xy = np.where(exact[:, None], track.xy[i0], (1.0 - w[:, None]) * track.xy[i0] + w[:, None] * track.xy[i1])
    nearer = np.where(w < 0.5, i0, i1)
    vis = track.visible[np.where(exact, i0, nearer)]
    return track.replace(xy=xy, visible=vis)


# ---------------------------------------------------------------------------
# .tracks.json serialization


def tracks_to_dict(ts: TrackSet) -> dict:
    return {
        "frame_count": ts.frame_count,
        "width": ts.width,
        "height": ts.height,
        "tracks": [
            {
                "id": t.id,
                "color": [t.color[0], t.color[1], t.color[2]],
                "init_frame": t.init_frame,
                "points": [
                    {"f": f, "x": float(t.xy[f, 0]), "y": float(t.xy[f, 1]), "v": bool(t.visible[f])}
                    for f in range(ts.frame_count)
                ],
            }
            for t in ts.tracks
        ],
    }


def tracks_from_dict(d: dict) -> TrackSet:
    try:
        frame_count = int(d["frame_count"])
        width = int(d["width"])
        height = int(d["height"])
        tracks = []
        for td in d["tracks"]:
            pts = td["points"]
            if len(pts) != frame_count:
                raise SchemaError(
                    f"track {td.get('id')} has {len(pts)} points, expected {frame_count}"
                )
            xy = np.empty((frame_count, 2))
            vis = np.empty(frame_count, dtype=bool)
            for p in pts:
                f = int(p["f"])
                xy[f] = (float(p["x"]), float(p["y"]))
                vis[f] = bool(p["v"])
            tracks.append(
                Track(
                    id=int(td["id"]),
                    color=tuple(float(c) for c in td["color"]),
                    init_frame=int(td["init_frame"]),
                    xy=xy,
                    visible=vis,
                )
            )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise SchemaError(f"malformed track data: {e}") from e
    return TrackSet(tuple(tracks), frame_count, width, height)


def save_tracks(ts: TrackSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tracks_to_dict(ts)))


def load_tracks(path: str | Path) -> TrackSet:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}") from e
    return tracks_from_dict(d)
