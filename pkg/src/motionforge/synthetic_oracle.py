"""Deterministic 2D sprite scenes with analytic ground-truth tracks.

These scenes stand in for a learned point tracker and a frame
interpolation generator during tests: pixels are rendered with the
painter's algorithm, while track queries are answered in closed form
by attaching each query point to the topmost surface under it and
following that surface's motion exactly. Rendered clips carry their
generating :class:`SceneSpec` in ``VideoClip.meta["scene"]`` so
scene-aware components can recover it.

Exactness applies to the analytic tracks; pixels are anti-aliased by
4x4 supersampling and are only approximately sub-pixel accurate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError, SchemaError
from .track_core import Track, TrackSet, VideoClip

__all__ = [
    "Background",
    "MotionPath",
    "Sprite",
    "SceneSpec",
    "render_scene",
    "oracle_track",
    "oracle_generate",
    "scene_to_dict",
    "scene_from_dict",
    "save_scene",
    "load_scene",
]

_SS = 4  # supersampling factor per axis


@dataclass(frozen=True)
class Background:
    """Solid color or a two-color linear gradient along x or y."""

    kind: str = "solid"
    color: tuple[float, float, float] = (0.0, 0.0, 0.0)
    end_color: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis: str = "x"

    def __post_init__(self):
        if self.kind not in ("solid", "gradient"):
            raise PreconditionError(f"unknown background kind {self.kind!r}")
        if self.axis not in ("x", "y"):
            raise PreconditionError(f"gradient axis must be 'x' or 'y', got {self.axis!r}")

    def color_at(self, x: float, y: float, width: int, height: int) -> np.ndarray:
        c0 = np.asarray(self.color, dtype=np.float64)
        if self.kind == "solid":
            return c0
        c1 = np.asarray(self.end_color, dtype=np.float64)
        t = x / width if self.axis == "x" else y / height
        return c0 * (1.0 - t) + c1 * t


def _interp_keys(keys: np.ndarray, f: float) -> np.ndarray:
    """Piecewise-linear interpolation over (frame, value...) keyframes,
    clamped outside the keyed range."""
    frames = keys[:, 0]
    if f <= frames[0]:
        return keys[0, 1:]
    if f >= frames[-1]:
        return keys[-1, 1:]
    i = int(np.searchsorted(frames, f, side="right")) - 1
    f0, f1 = frames[i], frames[i + 1]
    if f1 == f0:
        return keys[i + 1, 1:]
    w = (f - f0) / (f1 - f0)
    return keys[i, 1:] * (1.0 - w) + keys[i + 1, 1:] * w


def _decasteljau(cps: np.ndarray, t: float) -> np.ndarray:
    pts = cps.copy()
    while len(pts) > 1:
        pts = pts[:-1] * (1.0 - t) + pts[1:] * t
    return pts[0]


@dataclass(frozen=True)
class MotionPath:
    """Sprite position over frames: a keyframed polyline or a Bezier
    curve evaluated uniformly over its frame span. Positions clamp to
    the endpoints outside the keyed range."""

    kind: str  # "polyline" | "bezier"
    keys: tuple = ()  # polyline: ((frame, x, y), ...)
    span: tuple[int, int] = (0, 0)  # bezier frame span
    control_points: tuple = ()  # bezier: ((x, y), ...)

    def __post_init__(self):
        if self.kind == "polyline":
            if len(self.keys) < 1:
                raise PreconditionError("polyline motion needs at least one key")
            keys = tuple(sorted((float(f), float(x), float(y)) for f, x, y in self.keys))
            object.__setattr__(self, "keys", keys)
        elif self.kind == "bezier":
            if len(self.control_points) < 2:
                raise PreconditionError("bezier motion needs at least 2 control points")
            if self.span[0] >= self.span[1]:
                raise PreconditionError("bezier span must satisfy f0 < f1")
        else:
            raise PreconditionError(f"unknown motion kind {self.kind!r}")

    @staticmethod
    def static(x: float, y: float) -> "MotionPath":
        return MotionPath("polyline", keys=((0, x, y),))

    @staticmethod
    def linear(f0: int, p0: tuple[float, float], f1: int, p1: tuple[float, float]) -> "MotionPath":
        return MotionPath("polyline", keys=((f0, p0[0], p0[1]), (f1, p1[0], p1[1])))

    def position(self, f: float) -> np.ndarray:
        if self.kind == "polyline":
            return _interp_keys(np.asarray(self.keys, dtype=np.float64), f)
        f0, f1 = self.span
        t = min(max((f - f0) / (f1 - f0), 0.0), 1.0)
        return _decasteljau(np.asarray(self.control_points, dtype=np.float64), t)

    def shifted(self, dt: int) -> "MotionPath":
        if self.kind == "polyline":
            return MotionPath("polyline", keys=tuple((f + dt, x, y) for f, x, y in self.keys))
        return replace(self, span=(self.span[0] + dt, self.span[1] + dt))


@dataclass(frozen=True)
class Sprite:
    """A disk or axis-aligned rectangle moving over the canvas.

    ``size`` is keyframed like motion: disk keys are (frame, radius),
    rectangle keys (frame, width, height). ``visible`` is None (always
    shown), an inclusive (f0, f1) span, or an explicit frame set.
    """

    id: int
    shape: str  # "disk" | "rect"
    z: int
    color: tuple[float, float, float]
    motion: MotionPath
    size: tuple = ((0, 8.0),)
    visible: object = None

    def __post_init__(self):
        if self.shape not in ("disk", "rect"):
            raise PreconditionError(f"unknown sprite shape {self.shape!r}")
        dims = 1 if self.shape == "disk" else 2
        keys = tuple(tuple(float(v) for v in k) for k in self.size)
        for k in keys:
            if len(k) != dims + 1:
                raise PreconditionError(
                    f"{self.shape} size keys need {dims} value(s) per frame, got {k}"
                )
        object.__setattr__(self, "size", tuple(sorted(keys)))
        if self.visible is not None and not isinstance(self.visible, (tuple, frozenset)):
            object.__setattr__(self, "visible", tuple(self.visible))

    def size_at(self, f: float) -> np.ndarray:
        return _interp_keys(np.asarray(self.size, dtype=np.float64), f)

    def exists_at(self, f: int) -> bool:
        if self.visible is None:
            return True
        if isinstance(self.visible, frozenset):
            return f in self.visible
        f0, f1 = self.visible
        return f0 <= f <= f1

    def contains(self, x: float, y: float, f: float) -> bool:
        cx, cy = self.motion.position(f)
        s = self.size_at(f)
        if self.shape == "disk":
            return (x - cx) ** 2 + (y - cy) ** 2 <= s[0] ** 2
        return abs(x - cx) <= s[0] / 2 and abs(y - cy) <= s[1] / 2

    def shifted(self, dt: int) -> "Sprite":
        size = tuple((k[0] + dt,) + tuple(k[1:]) for k in self.size)
        if self.visible is None:
            vis = None
        elif isinstance(self.visible, frozenset):
            vis = frozenset(f + dt for f in self.visible)
        else:
            vis = (self.visible[0] + dt, self.visible[1] + dt)
        return replace(self, motion=self.motion.shifted(dt), size=size, visible=vis)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background: Background = field(default_factory=Background)
    sprites: tuple[Sprite, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sprites", tuple(self.sprites))
        zs = [s.z for s in self.sprites]
        if len(set(zs)) != len(zs):
            raise PreconditionError(f"sprite z-orders must be unique, got {zs}")
        ids = [s.id for s in self.sprites]
        if len(set(ids)) != len(ids):
            raise PreconditionError(f"sprite ids must be unique, got {ids}")

    def sprite_by_id(self, sid: int) -> Sprite:
        for s in self.sprites:
            if s.id == sid:
                return s
        raise KeyError(f"no sprite with id {sid}")

    def time_shifted(self, dt: int) -> "SceneSpec":
        return replace(self, sprites=tuple(s.shifted(dt) for s in self.sprites))

    def at_frame(self, f: int) -> "SceneSpec":
        """Freeze the scene at one instant (drops sprites hidden there)."""
        frozen = []
        for s in self.sprites:
            if not s.exists_at(f):
                continue
            pos = s.motion.position(f)
            size = ((0.0,) + tuple(s.size_at(f)),)
            frozen.append(
                replace(s, motion=MotionPath.static(pos[0], pos[1]), size=size, visible=None)
            )
        return replace(self, sprites=tuple(frozen))


def _render_frame(spec: SceneSpec, f: int, sub: np.ndarray) -> np.ndarray:
    h, w = spec.height, spec.width
    if spec.background.kind == "solid":
        img = np.empty((h, w, 3), dtype=np.float64)
        img[:] = spec.background.color
    else:
        c0 = np.asarray(spec.background.color)
        c1 = np.asarray(spec.background.end_color)
        if spec.background.axis == "x":
            t = (np.arange(w) + 0.5) / w
            ramp = c0[None, :] * (1 - t)[:, None] + c1[None, :] * t[:, None]
            img = np.broadcast_to(ramp[None, :, :], (h, w, 3)).copy()
        else:
            t = (np.arange(h) + 0.5) / h
            ramp = c0[None, :] * (1 - t)[:, None] + c1[None, :] * t[:, None]
            img = np.broadcast_to(ramp[:, None, :], (h, w, 3)).copy()

    for s in sorted(spec.sprites, key=lambda s: s.z):
        if not s.exists_at(f):
            continue
        cx, cy = s.motion.position(f)
        size = s.size_at(f)
        if s.shape == "disk":
            rx = ry = size[0]
        else:
            rx, ry = size[0] / 2, size[1] / 2
        j0 = max(int(np.floor(cx - rx)), 0)
        j1 = min(int(np.ceil(cx + rx)), w - 1)
        i0 = max(int(np.floor(cy - ry)), 0)
        i1 = min(int(np.ceil(cy + ry)), h - 1)
        if j0 > j1 or i0 > i1:
            continue
        # Subpixel sample coordinates: (nI, nJ, SS, SS)
        ys = np.arange(i0, i1 + 1)[:, None, None, None] + sub[None, None, :, None]
        xs = np.arange(j0, j1 + 1)[None, :, None, None] + sub[None, None, None, :]
        if s.shape == "disk":
            inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= size[0] ** 2
        else:
            inside = (np.abs(xs - cx) <= rx) & (np.abs(ys - cy) <= ry)
        alpha = inside.mean(axis=(2, 3))
        patch = img[i0 : i1 + 1, j0 : j1 + 1]
        patch *= 1.0 - alpha[:, :, None]
        patch += alpha[:, :, None] * np.asarray(s.color)
    return img


def render_scene(spec: SceneSpec, f: int) -> VideoClip:
    """Render ``f`` frames with painter's-algorithm occlusion and 4x
    supersampled anti-aliasing. The scene spec rides along in clip meta."""
    if f < 1:
        raise PreconditionError("need at least one frame")
    sub = (np.arange(_SS) + 0.5) / _SS
    frames = np.stack([_render_frame(spec, k, sub) for k in range(f)])
    return VideoClip(frames.astype(np.float32), meta={"scene": spec})


def _attachment(spec: SceneSpec, x: float, y: float, f: int) -> Sprite | None:
    """Topmost sprite under (x, y) at frame f, or None for background."""
    best = None
    for s in spec.sprites:
        if s.exists_at(f) and s.contains(x, y, f):
            if best is None or s.z > best.z:
                best = s
    return best


def _occluded(spec: SceneSpec, x: float, y: float, f: int, above_z: float) -> bool:
    for s in spec.sprites:
        if s.z > above_z and s.exists_at(f) and s.contains(x, y, f):
            return True
    return False


def oracle_track(spec: SceneSpec, init_points: TrackSet, frame_count: int | None = None) -> TrackSet:
    """Exact bidirectional tracking against the analytic scene.

    Each query attaches to the topmost sprite (or the background) under
    it at its init frame and follows that surface's motion in both
    directions with a constant offset. Points are invisible while
    occluded by a higher-z sprite, while their sprite is hidden, or
    while outside the canvas.
    """
    f_count = frame_count if frame_count is not None else init_points.frame_count
    tracks = []
    for q in init_points.tracks:
        f0 = q.init_frame
        x0, y0 = float(q.xy[f0, 0]), float(q.xy[f0, 1])
        if not (0 <= x0 < spec.width and 0 <= y0 < spec.height):
            raise PreconditionError(f"query ({x0}, {y0}) outside canvas")
        host = _attachment(spec, x0, y0, f0)
        xy = np.empty((f_count, 2))
        vis = np.empty(f_count, dtype=bool)
        if host is None:
            xy[:] = (x0, y0)
            for f in range(f_count):
                vis[f] = not _occluded(spec, x0, y0, f, above_z=-np.inf)
        else:
            offset = np.asarray([x0, y0]) - host.motion.position(f0)
            for f in range(f_count):
                p = host.motion.position(f) + offset
                xy[f] = p
                vis[f] = (
                    host.exists_at(f)
                    and 0 <= p[0] < spec.width
                    and 0 <= p[1] < spec.height
                    and not _occluded(spec, p[0], p[1], f, above_z=host.z)
                )
        tracks.append(Track(id=q.id, color=q.color, init_frame=f0, xy=xy, visible=vis))
    return TrackSet(tuple(tracks), f_count, spec.width, spec.height)


def oracle_generate(
    first_frame_spec: SceneSpec, last_frame_spec: SceneSpec, f: int
) -> tuple[VideoClip, SceneSpec]:
    """Perfect-knowledge frame interpolation between two frozen scenes.

    Sprite positions and sizes interpolate linearly over ``f`` frames;
    the first and last rendered frames equal renders of the two input
    specs. Returns the clip and the scene that generated it.
    """
    a, b = first_frame_spec, last_frame_spec
    if f < 2:
        raise PreconditionError("need at least 2 frames to interpolate")
    if (a.width, a.height) != (b.width, b.height):
        raise PreconditionError("endpoint scenes must share canvas dimensions")
    if a.background != b.background:
        raise PreconditionError("endpoint scenes must share the background")
    ids_a = sorted(s.id for s in a.sprites)
    ids_b = sorted(s.id for s in b.sprites)
    if ids_a != ids_b:
        raise PreconditionError(f"sprite identities differ: {ids_a} vs {ids_b}")

    sprites = []
    for sa in a.sprites:
        sb = b.sprite_by_id(sa.id)
        if (sa.shape, sa.z, sa.color) != (sb.shape, sb.z, sb.color):
            raise PreconditionError(f"sprite {sa.id} shape/z/color differ between endpoints")
        pa, pb = sa.motion.position(0), sb.motion.position(0)
        za, zb = sa.size_at(0), sb.size_at(0)
        sprites.append(
            replace(
                sa,
                motion=MotionPath.linear(0, (pa[0], pa[1]), f - 1, (pb[0], pb[1])),
                size=((0.0,) + tuple(za), (float(f - 1),) + tuple(zb)),
                visible=None,
            )
        )
    spec = replace(a, sprites=tuple(sprites))
    return render_scene(spec, f), spec


class OracleTracker:
    """In-process stand-in for a point-tracking plugin.

    Tracks against the scene riding in ``clip.meta["scene"]`` (or a
    fixed fallback scene), so results are exact rather than estimated.
    """

    def __init__(self, scene: SceneSpec | None = None):
        self.scene = scene

    def track(self, clip: VideoClip, queries: TrackSet) -> TrackSet:
        scene = clip.meta.get("scene", self.scene)
        if scene is None:
            raise PreconditionError("oracle tracker needs a scene (clip meta or fallback)")
        return oracle_track(scene, queries, frame_count=clip.frame_count)


class OracleGenerator:
    """In-process stand-in for a frame-interpolation generator: freezes
    the source scene at the two anchor frames and interpolates them."""

    def generate(self, v_full: VideoClip, f_first: int, f_last: int, prompt: str, frames: int) -> VideoClip:
        scene = v_full.meta.get("scene")
        if scene is None:
            raise PreconditionError("oracle generator needs the source scene in clip meta")
        clip, _spec = oracle_generate(scene.at_frame(f_first), scene.at_frame(f_last), frames)
        return clip


# ---------------------------------------------------------------------------
# JSON schema (documented in docs/file_formats.md)


def scene_to_dict(spec: SceneSpec) -> dict:
    bg: dict = {"kind": spec.background.kind, "color": list(spec.background.color)}
    if spec.background.kind == "gradient":
        bg["end_color"] = list(spec.background.end_color)
        bg["axis"] = spec.background.axis
    sprites = []
    for s in spec.sprites:
        if s.motion.kind == "polyline":
            motion = {"kind": "polyline", "keys": [list(k) for k in s.motion.keys]}
        else:
            motion = {
                "kind": "bezier",
                "span": list(s.motion.span),
                "control_points": [list(p) for p in s.motion.control_points],
            }
        if s.visible is None:
            vis = None
        elif isinstance(s.visible, frozenset):
            vis = {"frames": sorted(s.visible)}
        else:
            vis = list(s.visible)
        sprites.append(
            {
                "id": s.id,
                "shape": s.shape,
                "z": s.z,
                "color": list(s.color),
                "size": {"keys": [list(k) for k in s.size]},
                "motion": motion,
                "visible": vis,
            }
        )
    return {"width": spec.width, "height": spec.height, "background": bg, "sprites": sprites}


def scene_from_dict(d: dict) -> SceneSpec:
    try:
        bg = d.get("background", {"kind": "solid", "color": [0, 0, 0]})
        background = Background(
            kind=bg["kind"],
            color=tuple(bg["color"]),
            end_color=tuple(bg.get("end_color", (0, 0, 0))),
            axis=bg.get("axis", "x"),
        )
        sprites = []
        for sd in d.get("sprites", []):
            m = sd["motion"]
            if m["kind"] == "polyline":
                motion = MotionPath("polyline", keys=tuple(tuple(k) for k in m["keys"]))
            else:
                motion = MotionPath(
                    "bezier",
                    span=tuple(m["span"]),
                    control_points=tuple(tuple(p) for p in m["control_points"]),
                )
            v = sd.get("visible")
            if v is None:
                visible = None
            elif isinstance(v, dict):
                visible = frozenset(v["frames"])
            else:
                visible = tuple(v)
            sprites.append(
                Sprite(
                    id=int(sd["id"]),
                    shape=sd["shape"],
                    z=int(sd["z"]),
                    color=tuple(sd["color"]),
                    motion=motion,
                    size=tuple(tuple(k) for k in sd["size"]["keys"]),
                    visible=visible,
                )
            )
        return SceneSpec(int(d["width"]), int(d["height"]), background, tuple(sprites))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed scene spec: {e}") from e


def save_scene(spec: SceneSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(spec)))


def load_scene(path: str | Path) -> SceneSpec:
    try:
        return scene_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}") from e
