"""Camera edits: re-project tracked points through user cameras.

Given a per-frame pointmap (per-pixel 3D world coordinates, estimated
offline) and a user camera path, each track point's 3D location is
looked up under its pixel position and projected through the new
camera with the standard pinhole model. Occlusion by nearer geometry
after reprojection is not modeled: visibility means in front of the
camera and inside the frame.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BehindCamera, DimensionMismatch, PreconditionError, SchemaError
from .track_core import Track, TrackSet

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "Camera",
    "PointmapSequence",
    "project",
    "camera_edit_tracks",
    "zoom_schedule",
    "save_pointmap_frame",
    "load_pointmap_frame",
    "save_cameras",
    "load_cameras",
]

MIN_DEPTH = 1e-6

# Radius (in cells) of the nearest-valid fallback when the bilinear
# neighborhood under a track point contains invalid pointmap entries.
FALLBACK_RADIUS = 3.0


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise PreconditionError("focal lengths must be positive")


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: x_cam = R @ x_world + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise PreconditionError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise PreconditionError("rotation is not orthonormal within 1e-6")
        if np.linalg.det(r) < 0:
            raise PreconditionError("rotation must have determinant +1")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))


Camera = tuple[CameraIntrinsics, CameraPose]


class PointmapSequence:
    """Per-frame HxW grids of 3D world points with validity masks.

    ``points`` has shape (F, H, W, 3); grid cell (i, j) holds the world
    point seen at pixel center (j + 0.5, i + 0.5).
    """

    def __init__(self, points: np.ndarray, valid: np.ndarray, cameras: Sequence[Camera] | None = None):
        points = np.asarray(points, dtype=np.float64)
        valid = np.asarray(valid, dtype=bool)
        if points.ndim != 4 or points.shape[3] != 3:
            raise DimensionMismatch(f"points must be (F, H, W, 3), got {points.shape}")
        if valid.shape != points.shape[:3]:
            raise DimensionMismatch("validity mask shape must match the point grid")
        if cameras is not None and len(cameras) != points.shape[0]:
            raise DimensionMismatch("need one source camera per frame")
        self.points = points
        self.valid = valid
        self.cameras = list(cameras) if cameras is not None else None

    @property
    def frame_count(self) -> int:
        return self.points.shape[0]

    @property
    def height(self) -> int:
        return self.points.shape[1]

    @property
    def width(self) -> int:
        return self.points.shape[2]

    def lookup(self, f: int, x: float, y: float) -> np.ndarray | None:
        """3D point under continuous pixel coordinates (x, y) at frame f.

        Bilinear over the four neighboring grid cells when all are
        valid; otherwise the nearest valid cell within FALLBACK_RADIUS;
        None when no valid data is close enough.
        """
        h, w = self.height, self.width
        u, v = x - 0.5, y - 0.5  # grid-index space
        j0 = int(np.floor(u))
        i0 = int(np.floor(v))
        j0c, i0c = np.clip(j0, 0, w - 2 if w > 1 else 0), np.clip(i0, 0, h - 2 if h > 1 else 0)
        j1c, i1c = min(j0c + 1, w - 1), min(i0c + 1, h - 1)
        corners = ((i0c, j0c), (i0c, j1c), (i1c, j0c), (i1c, j1c))
        if all(self.valid[f, i, j] for i, j in corners):
            a = np.clip(u - j0c, 0.0, 1.0)
            b = np.clip(v - i0c, 0.0, 1.0)
            p = self.points[f]
            return (
                p[i0c, j0c] * (1 - a) * (1 - b)
                + p[i0c, j1c] * a * (1 - b)
                + p[i1c, j0c] * (1 - a) * b
                + p[i1c, j1c] * a * b
            )
        # Nearest valid cell within the fallback radius.
        r = int(np.ceil(FALLBACK_RADIUS))
        ic, jc = int(round(v)), int(round(u))
        best, best_d2 = None, FALLBACK_RADIUS**2
        for i in range(max(ic - r, 0), min(ic + r + 1, h)):
            for j in range(max(jc - r, 0), min(jc + r + 1, w)):
                if not self.valid[f, i, j]:
                    continue
                d2 = (i - v) ** 2 + (j - u) ** 2
                if d2 <= best_d2:
                    best, best_d2 = (i, j), d2
        if best is None:
            return None
        return self.points[f, best[0], best[1]]


def project(point3d, intrinsics: CameraIntrinsics, pose: CameraPose) -> tuple[float, float, float]:
    """Pinhole projection of a world point; returns (x, y, depth).

    Raises :class:`BehindCamera` when the camera-space depth is at or
    below MIN_DEPTH.
    """
    p = np.asarray(point3d, dtype=np.float64).reshape(3)
    pc = pose.rotation @ p + pose.translation
    if pc[2] <= MIN_DEPTH:
        raise BehindCamera(f"point {point3d} has camera depth {pc[2]:.3g}")
    x = intrinsics.fx * pc[0] / pc[2] + intrinsics.cx
    y = intrinsics.fy * pc[1] / pc[2] + intrinsics.cy
    return float(x), float(y), float(pc[2])


def _project_many(points: np.ndarray, intrinsics: CameraIntrinsics, pose: CameraPose):
    pc = points @ pose.rotation.T + pose.translation
    depth = pc[:, 2]
    ok = depth > MIN_DEPTH
    z = np.where(ok, depth, 1.0)
    x = intrinsics.fx * pc[:, 0] / z + intrinsics.cx
    y = intrinsics.fy * pc[:, 1] / z + intrinsics.cy
    return x, y, depth, ok


def camera_edit_tracks(
    source: TrackSet,
    pm: PointmapSequence,
    new_cameras: Sequence[Camera],
) -> TrackSet:
    """Re-project every track point through per-frame user cameras.

    Track count, ids and colors are preserved; only positions and
    visibility change. A point stays visible when its pointmap lookup
    succeeds, it lands in front of the camera, it falls inside the
    frame, and it was visible in the source.
    """
    if (pm.frame_count, pm.height, pm.width) != (
        source.frame_count,
        source.height,
        source.width,
    ):
        raise DimensionMismatch("pointmap dimensions do not match the track set")
    if len(new_cameras) != source.frame_count:
        raise DimensionMismatch("need one camera per frame")

    w, h = source.width, source.height
    tracks = []
    for t in source.tracks:
        xy = t.xy.copy()
        vis = np.zeros_like(t.visible)
        for f in range(source.frame_count):
            if not t.visible[f]:
                continue
            p3 = pm.lookup(f, t.xy[f, 0], t.xy[f, 1])
            if p3 is None:
                continue
            k, pose = new_cameras[f]
            pc = pose.rotation @ p3 + pose.translation
            if pc[2] <= MIN_DEPTH:
                continue
            x = k.fx * pc[0] / pc[2] + k.cx
            y = k.fy * pc[1] / pc[2] + k.cy
            xy[f] = (x, y)
            vis[f] = 0 <= x < w and 0 <= y < h
        tracks.append(t.replace(xy=xy, visible=vis))
    return source.with_tracks(tracks)


def zoom_schedule(
    source: TrackSet,
    principal: tuple[float, float],
    scale_per_frame: Sequence[float],
) -> TrackSet:
    """Pure-2D zoom: scale every point about the principal point by a
    per-frame factor (equivalent to focal scaling for depth-independent
    zoom). Visibility is recomputed against the frame bounds."""
    scales = np.asarray(list(scale_per_frame), dtype=np.float64)
    if scales.shape != (source.frame_count,):
        raise PreconditionError(
            f"need one scale per frame ({source.frame_count}), got {scales.shape}"
        )
    if np.any(scales <= 0):
        raise PreconditionError("zoom scales must be positive")
    c = np.asarray(principal, dtype=np.float64)
    w, h = source.width, source.height
    tracks = []
    for t in source.tracks:
        xy = c + scales[:, None] * (t.xy - c)
        inside = (xy[:, 0] >= 0) & (xy[:, 0] < w) & (xy[:, 1] >= 0) & (xy[:, 1] < h)
        tracks.append(t.replace(xy=xy, visible=t.visible & inside))
    return source.with_tracks(tracks)


# ---------------------------------------------------------------------------
# File formats

_PMAP_MAGIC = b"PMAP"
_PMAP_VERSION = 1
_REC = np.dtype([("p", "<f4", 3), ("v", "u1")])


def save_pointmap_frame(path: str | Path, points: np.ndarray, valid: np.ndarray) -> None:
    """One binary pointmap frame: header (magic, version, H, W) then
    H*W little-endian records of 3 float32 world coords + u8 validity."""
    points = np.asarray(points, dtype=np.float32)
    valid = np.asarray(valid, dtype=bool)
    h, w = valid.shape
    if points.shape != (h, w, 3):
        raise DimensionMismatch("points must be (H, W, 3) matching the validity mask")
    rec = np.empty(h * w, dtype=_REC)
    rec["p"] = points.reshape(-1, 3)
    rec["v"] = valid.reshape(-1).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_PMAP_MAGIC)
        fh.write(struct.pack("<III", _PMAP_VERSION, h, w))
        fh.write(rec.tobytes())


def load_pointmap_frame(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != _PMAP_MAGIC:
        raise SchemaError(f"{path}: bad pointmap magic {raw[:4]!r}")
    version, h, w = struct.unpack("<III", raw[4:16])
    if version != _PMAP_VERSION:
        raise SchemaError(f"{path}: unsupported pointmap version {version}")
    body = raw[16:]
    if len(body) != h * w * _REC.itemsize:
        raise SchemaError(f"{path}: truncated pointmap body")
    rec = np.frombuffer(body, dtype=_REC)
    points = rec["p"].reshape(h, w, 3).astype(np.float64)
    valid = rec["v"].reshape(h, w).astype(bool)
    return points, valid


def load_pointmap_dir(path: str | Path, pattern: str = "*.pmap") -> PointmapSequence:
    files = sorted(Path(path).glob(pattern))
    if not files:
        raise SchemaError(f"no pointmap frames matching {pattern} under {path}")
    frames = [load_pointmap_frame(p) for p in files]
    points = np.stack([p for p, _ in frames])
    valid = np.stack([v for _, v in frames])
    return PointmapSequence(points, valid)


def save_cameras(path: str | Path, cameras: Sequence[Camera]) -> None:
    frames = []
    for k, pose in cameras:
        frames.append(
            {
                "fx": k.fx,
                "fy": k.fy,
                "cx": k.cx,
                "cy": k.cy,
                "R": [float(v) for v in np.asarray(pose.rotation).reshape(9)],
                "t": [float(v) for v in np.asarray(pose.translation)],
            }
        )
    Path(path).write_text(json.dumps({"frames": frames}))


def load_cameras(path: str | Path) -> list[Camera]:
    try:
        data = json.loads(Path(path).read_text())
        out = []
        for fr in data["frames"]:
            k = CameraIntrinsics(float(fr["fx"]), float(fr["fy"]), float(fr["cx"]), float(fr["cy"]))
            pose = CameraPose(np.asarray(fr["R"], dtype=np.float64).reshape(3, 3), np.asarray(fr["t"], dtype=np.float64))
            out.append((k, pose))
        return out
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
        raise SchemaError(f"{path}: malformed camera file: {e}") from e
