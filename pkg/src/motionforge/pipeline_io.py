"""Frame-directory video I/O and external plugin process management.

Clips travel on disk as directories of 8-bit PNGs named %05d.png plus
a meta.json; codecs are deliberately avoided so boundary-frame and
correspondence invariants survive round trips bit-exactly.

Neural components (tracker, generator, editor, metric) run as external
processes exchanging files: each plugin is described by a JSON manifest
and invoked as ``executable <input_dir> <output_dir>``. Outputs are
schema-validated before use.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import ConfigError, PluginError, SchemaError
from .synthetic_oracle import load_scene, save_scene
from .track_core import Track, TrackSet, VideoClip, load_tracks

__all__ = [
    "write_clip",
    "read_clip",
    "write_frame_png",
    "read_frame_images",
    "PluginManifest",
    "load_manifest",
    "find_plugin",
    "resolve_plugin",
    "run_plugin",
    "PluginTracker",
    "PluginGenerator",
    "PluginEditor",
    "plugin_metric",
    "CONTRACT_VERSION",
]

CONTRACT_VERSION = 1
PLUGIN_PATH_ENV = "MOTIONFORGE_PLUGIN_PATH"


def _quantize(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)


def write_frame_png(frame: np.ndarray, path: str | Path) -> None:
    Image.fromarray(_quantize(frame), mode="RGB").save(path, format="PNG")


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def write_clip(clip: VideoClip, directory: str | Path, fps: float = 16.0) -> Path:
    """Write a clip as 00000.png.. plus meta.json. Lossless modulo the
    8-bit quantization (round trip error <= 1/255 per channel)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for f in range(clip.frame_count):
        write_frame_png(clip.frames[f], d / f"{f:05d}.png")
    meta = {
        "fps": float(fps),
        "width": clip.width,
        "height": clip.height,
        "frames": clip.frame_count,
    }
    (d / "meta.json").write_text(json.dumps(meta))
    return d


def read_frame_images(directory: str | Path, expected: int | None = None) -> np.ndarray:
    """Read a bare %05d.png sequence (no meta required), enforcing
    contiguous numbering from 00000."""
    d = Path(directory)
    files = sorted(d.glob("[0-9]" * 5 + ".png"))
    if not files:
        raise SchemaError(f"{d}: no frames matching %05d.png")
    for i, p in enumerate(files):
        if p.name != f"{i:05d}.png":
            raise SchemaError(f"{d}: missing frame {i:05d}.png (found {p.name})")
    if expected is not None and len(files) != expected:
        raise SchemaError(f"{d}: expected {expected} frames, found {len(files)}")
    frames = [_read_png(p) for p in files]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise SchemaError(f"{d}: frames disagree on dimensions: {shapes}")
    return np.stack(frames)


def read_clip(directory: str | Path) -> VideoClip:
    """Read a frame directory written by :func:`write_clip`, checking
    the metadata against the actual files."""
    d = Path(directory)
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise SchemaError(f"{d}: missing meta.json")
    try:
        meta = json.loads(meta_path.read_text())
        expected = int(meta["frames"])
        width, height = int(meta["width"]), int(meta["height"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{meta_path}: malformed metadata: {e}") from e
    frames = read_frame_images(d, expected=expected)
    if frames.shape[1] != height or frames.shape[2] != width:
        raise SchemaError(
            f"{d}: meta says {width}x{height}, frames are {frames.shape[2]}x{frames.shape[1]}"
        )
    meta_extra = {}
    scene_path = d / "scene.json"
    if scene_path.exists():
        meta_extra["scene"] = load_scene(scene_path)
    return VideoClip(frames, meta=meta_extra)


# ---------------------------------------------------------------------------
# Plugin host

_PLUGIN_KINDS = ("tracker", "generator", "editor", "metric")


@dataclass(frozen=True)
class PluginManifest:
    name: str
    kind: str
    executable: tuple[str, ...]
    timeout: float = 300.0
    concurrent: bool = False
    path: str = ""

    def __post_init__(self):
        if self.kind not in _PLUGIN_KINDS:
            raise ConfigError(f"plugin kind must be one of {_PLUGIN_KINDS}, got {self.kind!r}")
        if not self.executable:
            raise ConfigError("plugin manifest needs an executable")
        if self.timeout <= 0:
            raise ConfigError("plugin timeout must be positive")


def load_manifest(path: str | Path) -> PluginManifest:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{p}: cannot read plugin manifest: {e}") from e
    if data.get("contract_version") != CONTRACT_VERSION:
        raise ConfigError(
            f"{p}: unsupported contract_version {data.get('contract_version')!r}"
        )
    exe = data.get("executable")
    if isinstance(exe, str):
        exe = (exe,)
    elif isinstance(exe, list):
        exe = tuple(str(a) for a in exe)
    else:
        raise ConfigError(f"{p}: executable must be a string or argv list")
    return PluginManifest(
        name=data.get("name", p.stem),
        kind=data.get("kind", ""),
        executable=exe,
        timeout=float(data.get("timeout", 300.0)),
        concurrent=bool(data.get("concurrent", False)),
        path=str(p),
    )


def find_plugin(name: str) -> PluginManifest:
    """Locate <name>.json in the directories of $MOTIONFORGE_PLUGIN_PATH."""
    search = os.environ.get(PLUGIN_PATH_ENV, "")
    for d in filter(None, search.split(os.pathsep)):
        candidate = Path(d) / f"{name}.json"
        if candidate.exists():
            return load_manifest(candidate)
    raise ConfigError(
        f"plugin {name!r} not found on {PLUGIN_PATH_ENV}={search!r}"
    )


def resolve_plugin(spec: str | Path | PluginManifest) -> PluginManifest:
    if isinstance(spec, PluginManifest):
        return spec
    p = Path(spec)
    if p.exists():
        return load_manifest(p)
    return find_plugin(str(spec))


# One process in flight per plugin unless its manifest opts in.
_plugin_locks: dict[str, threading.Lock] = {}
_locks_guard = threading.Lock()


def _lock_for(manifest: PluginManifest) -> threading.Lock:
    key = manifest.path or manifest.name
    with _locks_guard:
        return _plugin_locks.setdefault(key, threading.Lock())


def run_plugin(
    manifest: PluginManifest,
    input_dir: str | Path,
    output_dir: str | Path | None = None,
) -> Path:
    """Spawn a plugin process on an input directory and validate its
    output directory against the contract for the manifest's kind."""
    exe = manifest.executable[0]
    if shutil.which(exe) is None and not Path(exe).exists():
        raise ConfigError(f"plugin executable {exe!r} not found")
    if output_dir is None:
        output_dir = Path(tempfile.mkdtemp(prefix=f"{manifest.name}-out-"))
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    argv = [*manifest.executable, str(input_dir), str(out)]

    lock = _lock_for(manifest) if not manifest.concurrent else None
    if lock:
        lock.acquire()
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=manifest.timeout
        )
    except subprocess.TimeoutExpired as e:
        raise PluginError(
            f"plugin {manifest.name} timed out after {manifest.timeout}s",
            diagnostics={"argv": argv, "stdout": str(e.stdout), "stderr": str(e.stderr)},
        ) from e
    finally:
        if lock:
            lock.release()
    if proc.returncode != 0:
        raise PluginError(
            f"plugin {manifest.name} exited with status {proc.returncode}",
            diagnostics={
                "argv": argv,
                "stdout": proc.stdout[-4000:],
                "stderr": proc.stderr[-4000:],
            },
        )
    _validate_plugin_output(manifest, input_dir, out)
    return out


def _validate_plugin_output(manifest: PluginManifest, input_dir, out: Path) -> None:
    if manifest.kind == "tracker":
        if not (out / "tracks.json").exists():
            raise SchemaError(f"tracker {manifest.name} produced no tracks.json")
        load_tracks(out / "tracks.json")
    elif manifest.kind in ("generator", "editor"):
        req = Path(input_dir) / "request.json"
        expected = None
        if req.exists():
            expected = int(json.loads(req.read_text()).get("frames", 0)) or None
        read_frame_images(out, expected=expected)
    elif manifest.kind == "metric":
        rp = out / "result.json"
        if not rp.exists():
            raise SchemaError(f"metric {manifest.name} produced no result.json")
        value = json.loads(rp.read_text()).get("value")
        if not isinstance(value, (int, float)):
            raise SchemaError(f"metric {manifest.name} result.json lacks a numeric value")


def _write_request(d: Path, frames: int, width: int, height: int, **extra) -> None:
    payload = {
        "contract_version": CONTRACT_VERSION,
        "frames": frames,
        "width": width,
        "height": height,
    }
    payload.update(extra)
    (d / "request.json").write_text(json.dumps(payload))


class PluginTracker:
    """Tracker protocol implementation backed by an external process.

    Input contract: frame directory + queries.json (array of
    {"f", "x", "y"}) + request.json; a scene.json sidecar is passed
    through when the clip carries one (consumed by the oracle tracker,
    ignored by real trackers). Output: tracks.json in the standard
    format, one track per query in query order.
    """

    def __init__(self, manifest: str | Path | PluginManifest, workdir: str | Path | None = None):
        self.manifest = resolve_plugin(manifest)
        if self.manifest.kind != "tracker":
            raise ConfigError(f"{self.manifest.name} is a {self.manifest.kind}, not a tracker")
        self.workdir = Path(workdir) if workdir else None

    def track(self, clip: VideoClip, queries: TrackSet) -> TrackSet:
        base = Path(tempfile.mkdtemp(prefix="track-", dir=self.workdir))
        input_dir = base / "input"
        write_clip(clip, input_dir)
        qlist = [
            {"f": t.init_frame, "x": float(t.xy[t.init_frame, 0]), "y": float(t.xy[t.init_frame, 1])}
            for t in queries.tracks
        ]
        (input_dir / "queries.json").write_text(json.dumps(qlist))
        _write_request(input_dir, clip.frame_count, clip.width, clip.height)
        scene = clip.meta.get("scene")
        if scene is not None:
            save_scene(scene, input_dir / "scene.json")
        out = run_plugin(self.manifest, input_dir, base / "output")
        raw = load_tracks(out / "tracks.json")
        if raw.frame_count != clip.frame_count:
            raise SchemaError(
                f"tracker returned {raw.frame_count} frames for a {clip.frame_count}-frame clip"
            )
        if len(raw) != len(queries):
            raise SchemaError(
                f"tracker returned {len(raw)} tracks for {len(queries)} queries"
            )
        # Identity (id, color) is owned by the query set; plugins only
        # have to preserve order.
        tracks = [
            Track(id=q.id, color=q.color, init_frame=q.init_frame, xy=t.xy, visible=t.visible)
            for q, t in zip(queries.tracks, raw.tracks)
        ]
        return TrackSet(tuple(tracks), clip.frame_count, queries.width, queries.height)


class PluginGenerator:
    """Frame-interpolation generator backed by an external process.

    Input contract: first.png, last.png, prompt.txt, request.json
    (+ frozen scene sidecars when the source clip carries a scene).
    Output: `frames` PNGs; an optional scene.json rides back in clip
    meta for scene-aware consumers.
    """

    def __init__(self, manifest: str | Path | PluginManifest, workdir: str | Path | None = None):
        self.manifest = resolve_plugin(manifest)
        if self.manifest.kind != "generator":
            raise ConfigError(f"{self.manifest.name} is a {self.manifest.kind}, not a generator")
        self.workdir = Path(workdir) if workdir else None

    def generate(self, v_full: VideoClip, f_first: int, f_last: int, prompt: str, frames: int) -> VideoClip:
        base = Path(tempfile.mkdtemp(prefix="gen-", dir=self.workdir))
        input_dir = base / "input"
        input_dir.mkdir(parents=True)
        write_frame_png(v_full.frames[f_first], input_dir / "first.png")
        write_frame_png(v_full.frames[f_last], input_dir / "last.png")
        (input_dir / "prompt.txt").write_text(prompt)
        _write_request(input_dir, frames, v_full.width, v_full.height)
        scene = v_full.meta.get("scene")
        if scene is not None and hasattr(scene, "at_frame"):
            save_scene(scene.at_frame(f_first), input_dir / "first_scene.json")
            save_scene(scene.at_frame(f_last), input_dir / "last_scene.json")
        out = run_plugin(self.manifest, input_dir, base / "output")
        pixels = read_frame_images(out, expected=frames)
        meta = {}
        if (out / "scene.json").exists():
            meta["scene"] = load_scene(out / "scene.json")
        return VideoClip(pixels, meta=meta)


class PluginEditor:
    """Motion-edit video model backed by an external process: consumes
    an exported conditioning bundle directory, returns the edited clip."""

    def __init__(self, manifest: str | Path | PluginManifest, workdir: str | Path | None = None):
        self.manifest = resolve_plugin(manifest)
        if self.manifest.kind != "editor":
            raise ConfigError(f"{self.manifest.name} is a {self.manifest.kind}, not an editor")
        self.workdir = Path(workdir) if workdir else None

    def generate_edit(self, bundle_dir: str | Path) -> VideoClip:
        bundle = Path(bundle_dir)
        req = bundle / "request.json"
        expected = None
        if req.exists():
            expected = int(json.loads(req.read_text()).get("frames", 0)) or None
        out_parent = Path(tempfile.mkdtemp(prefix="edit-", dir=self.workdir))
        out = run_plugin(self.manifest, bundle, out_parent / "output")
        pixels = read_frame_images(out, expected=expected)
        meta = {}
        if (out / "scene.json").exists():
            meta["scene"] = load_scene(out / "scene.json")
        return VideoClip(pixels, meta=meta)


def plugin_metric(
    manifest: str | Path | PluginManifest,
    pred: VideoClip,
    target: VideoClip,
    metric: str = "lpips",
    workdir: str | Path | None = None,
) -> float:
    """Run a metric plugin (e.g. LPIPS) on a clip pair."""
    m = resolve_plugin(manifest)
    if m.kind != "metric":
        raise ConfigError(f"{m.name} is a {m.kind}, not a metric")
    base = Path(tempfile.mkdtemp(prefix="metric-", dir=workdir))
    input_dir = base / "input"
    write_clip(pred, input_dir / "pred")
    write_clip(target, input_dir / "target")
    _write_request(input_dir, pred.frame_count, pred.width, pred.height, metric=metric)
    out = run_plugin(m, input_dir, base / "output")
    return float(json.loads((out / "result.json").read_text())["value"])
