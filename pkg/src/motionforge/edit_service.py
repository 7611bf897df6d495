"""Local interactive editing service.

A session wraps one input clip plus paired source/target track sets.
Clicking places a query point that is tracked bidirectionally and added
to both sets (anchored); edits then reshape the target side: Bezier
replacements over a frame span, per-frame visibility toggles, retiming,
zoom schedules, and full camera reprojection. Sessions persist as
append-only JSONL edit logs; state is always derivable by replay, never
authoritative on its own.

Exported bundles contain the input clip, both rendered blob videos and
both track sets; generation hands the bundle to an external video-model
plugin, and any generated clip can seed a fresh session (iterative
editing).
"""

import hashlib
import io
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import camera as camera_mod
from .config import RunConfig
from .errors import (
    ConfigError,
    MotionForgeError,
    PreconditionError,
    SchemaError,
)
from .palette import editor_color
from .pipeline_io import read_clip, write_clip, write_frame_png
from .rasterizer import render_tracks
from .track_core import (
    MotionEdit,
    Track,
    TrackSet,
    VideoClip,
    apply_jitter,
    bezier_resample,
    latent_shape,
    limit_correspondences,
    retime_track,
    save_tracks,
)

__all__ = ["EditSession", "EditService", "create_app"]

# Only these ops define the semantic content of an edit; they are what
# the exported bundle hash covers (the create event carries environment
# paths that must not leak into reproducible artifacts).
_EDIT_OPS = (
    "add_point",
    "set_bezier",
    "set_visibility",
    "retime",
    "anchor",
    "camera_zoom",
    "camera_reproject",
)


@dataclass
class EditSession:
    id: str
    clip_dir: Path
    clip: VideoClip
    prompt: str
    source: TrackSet
    target: TrackSet
    log: list[dict] = field(default_factory=list)
    history: list[Path] = field(default_factory=list)

    @property
    def edit(self) -> MotionEdit:
        return MotionEdit(self.source, self.target)

    def edit_log_hash(self) -> str:
        edits = [e for e in self.log if e.get("op") in _EDIT_OPS]
        payload = "\n".join(json.dumps(e, sort_keys=True) for e in edits)
        return hashlib.sha256(payload.encode()).hexdigest()


class EditService:
    """Owns sessions, their persistence, and plugin wiring.

    ``tracker`` is any Tracker-protocol object; ``editor`` is a
    callable mapping a bundle directory to the edited VideoClip (e.g.
    ``PluginEditor(manifest).generate_edit``). Mutations are serialized
    per session; reads are lock-free on immutable snapshots.
    """

    def __init__(
        self,
        root: str | Path,
        config: RunConfig | None = None,
        tracker=None,
        editor: Callable[[Path], VideoClip] | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config or RunConfig()
        self.tracker = tracker
        self.editor = editor
        self._sessions: dict[str, EditSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    # -- plumbing -----------------------------------------------------

    def _lock(self, sid: str) -> threading.Lock:
        with self._guard:
            if sid not in self._locks:
                self._locks[sid] = threading.Lock()
            return self._locks[sid]

    def session(self, sid: str) -> EditSession:
        try:
            return self._sessions[sid]
        except KeyError:
            raise KeyError(f"no session {sid!r}")

    def session_dir(self, sid: str) -> Path:
        return self.root / sid

    def _append_log(self, session: EditSession, event: dict) -> None:
        session.log.append(event)
        with open(self.session_dir(session.id) / "log.jsonl", "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    # -- session lifecycle --------------------------------------------

    def create_session(self, clip_dir: str | Path, prompt: str = "", session_id: str | None = None) -> str:
        clip = read_clip(clip_dir)
        sid = session_id or uuid.uuid4().hex[:12]
        if sid in self._sessions:
            raise PreconditionError(f"session {sid!r} already exists")
        empty = TrackSet((), clip.frame_count, clip.width, clip.height)
        session = EditSession(
            id=sid, clip_dir=Path(clip_dir), clip=clip, prompt=prompt,
            source=empty, target=empty,
        )
        self.session_dir(sid).mkdir(parents=True, exist_ok=True)
        self._sessions[sid] = session
        self._append_log(session, {"op": "create", "clip_dir": str(clip_dir), "prompt": prompt})
        return sid

    def load_session(self, sid: str) -> str:
        """Rebuild a persisted session by replaying its edit log."""
        log_path = self.session_dir(sid) / "log.jsonl"
        if not log_path.exists():
            raise KeyError(f"no persisted session {sid!r}")
        events = [json.loads(line) for line in log_path.read_text().splitlines() if line]
        if not events or events[0]["op"] != "create":
            raise SchemaError(f"session log for {sid!r} does not start with a create event")
        self._sessions.pop(sid, None)
        create = events[0]
        self.create_session(create["clip_dir"], prompt=create.get("prompt", ""), session_id=sid)
        # create_session appended a fresh create event; restore the log file.
        (self.session_dir(sid) / "log.jsonl").write_text(
            "\n".join(json.dumps(e, sort_keys=True) for e in events) + "\n"
        )
        session = self.session(sid)
        session.log = [create]
        for event in events[1:]:
            self._replay(session, event)
        return sid

    def _replay(self, session: EditSession, event: dict) -> None:
        op = event["op"]
        if op == "add_point":
            self._do_add_point(session, event["frame"], event["x"], event["y"])
        elif op == "set_bezier":
            self._do_set_bezier(
                session, event["track_id"],
                [tuple(p) for p in event["control_points"]],
                tuple(event["frame_span"]),
            )
        elif op == "set_visibility":
            self._do_set_visibility(session, event["track_id"], event["frames"], event["visible"])
        elif op == "retime":
            self._do_retime(session, event["track_id"], event["time_map"])
        elif op == "anchor":
            self._do_anchor(session, event["track_id"])
        elif op == "camera_zoom":
            self._do_camera_zoom(session, event["scales"], tuple(event["principal"]))
        elif op == "camera_reproject":
            self._do_camera_reproject(session, event["pointmaps_dir"], event["cameras_file"])
        elif op == "generate":
            session.history.append(Path(event["output_dir"]))
        else:
            raise SchemaError(f"unknown edit-log op {op!r}")
        session.log.append(event)

    # -- mutations ----------------------------------------------------

    def add_point(self, sid: str, frame: int, x: float, y: float) -> int:
        with self._lock(sid):
            session = self.session(sid)
            tid = self._do_add_point(session, frame, x, y)
            self._append_log(session, {"op": "add_point", "frame": frame, "x": x, "y": y})
            return tid

    def _do_add_point(self, session: EditSession, frame: int, x: float, y: float) -> int:
        clip = session.clip
        if not (0 <= frame < clip.frame_count):
            raise PreconditionError(f"frame {frame} outside [0, {clip.frame_count})")
        if not (0 <= x < clip.width and 0 <= y < clip.height):
            raise PreconditionError(f"point ({x}, {y}) outside the frame")
        if self.tracker is None:
            raise ConfigError("no tracker configured for this service")
        index = len(session.source.tracks)
        tid = index
        color = editor_color(index)
        xy = np.tile([x, y], (clip.frame_count, 1))
        vis = np.zeros(clip.frame_count, dtype=bool)
        vis[frame] = True
        query = TrackSet(
            (Track(id=tid, color=color, init_frame=frame, xy=xy, visible=vis),),
            clip.frame_count, clip.width, clip.height,
        )
        tracked = self.tracker.track(clip, query).tracks[0]
        session.source = session.source.with_tracks((*session.source.tracks, tracked))
        session.target = session.target.with_tracks((*session.target.tracks, tracked))
        return tid

    def set_target_bezier(self, sid, track_id, control_points, frame_span) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_set_bezier(session, track_id, control_points, frame_span)
            self._append_log(session, {
                "op": "set_bezier", "track_id": track_id,
                "control_points": [[float(p[0]), float(p[1])] for p in control_points],
                "frame_span": [int(frame_span[0]), int(frame_span[1])],
            })

    def _do_set_bezier(self, session, track_id, control_points, frame_span) -> None:
        f0, f1 = int(frame_span[0]), int(frame_span[1])
        if not (0 <= f0 < f1 < session.clip.frame_count):
            raise PreconditionError(f"frame span ({f0}, {f1}) outside the clip")
        track = session.target.track_by_id(track_id)
        positions = bezier_resample(control_points, (f0, f1))
        xy = track.xy.copy()
        xy[f0 : f1 + 1] = positions
        session.target = _swap_track(session.target, track.replace(xy=xy))

    def set_visibility(self, sid, track_id, frames, visible: bool) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_set_visibility(session, track_id, frames, visible)
            self._append_log(session, {
                "op": "set_visibility", "track_id": track_id,
                "frames": [int(f) for f in frames], "visible": bool(visible),
            })

    def _do_set_visibility(self, session, track_id, frames, visible) -> None:
        track = session.target.track_by_id(track_id)
        vis = track.visible.copy()
        for f in frames:
            if not (0 <= f < session.clip.frame_count):
                raise PreconditionError(f"frame {f} outside the clip")
            vis[f] = visible
        session.target = _swap_track(session.target, track.replace(visible=vis))

    def retime(self, sid, track_id, time_map) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_retime(session, track_id, time_map)
            self._append_log(session, {
                "op": "retime", "track_id": track_id,
                "time_map": [float(v) for v in time_map],
            })

    def _do_retime(self, session, track_id, time_map) -> None:
        track = session.target.track_by_id(track_id)
        session.target = _swap_track(session.target, retime_track(track, time_map))

    def anchor(self, sid, track_id) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_anchor(session, track_id)
            self._append_log(session, {"op": "anchor", "track_id": track_id})

    def _do_anchor(self, session, track_id) -> None:
        src = session.source.track_by_id(track_id)
        session.target = _swap_track(session.target, src)

    def camera_zoom(self, sid, scales, principal) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_camera_zoom(session, scales, principal)
            self._append_log(session, {
                "op": "camera_zoom",
                "scales": [float(s) for s in scales],
                "principal": [float(principal[0]), float(principal[1])],
            })

    def _do_camera_zoom(self, session, scales, principal) -> None:
        session.target = camera_mod.zoom_schedule(session.target, principal, scales)

    def camera_reproject(self, sid, pointmaps_dir, cameras_file) -> None:
        with self._lock(sid):
            session = self.session(sid)
            self._do_camera_reproject(session, pointmaps_dir, cameras_file)
            self._append_log(session, {
                "op": "camera_reproject",
                "pointmaps_dir": str(pointmaps_dir), "cameras_file": str(cameras_file),
            })

    def _do_camera_reproject(self, session, pointmaps_dir, cameras_file) -> None:
        pm = camera_mod.load_pointmap_dir(pointmaps_dir)
        cams = camera_mod.load_cameras(cameras_file)
        session.target = camera_mod.camera_edit_tracks(session.target, pm, cams)

    # -- outputs --------------------------------------------------------

    def preview(self, sid: str) -> tuple[VideoClip, VideoClip]:
        session = self.session(sid)
        if not session.source.tracks:
            raise PreconditionError("session has no tracks to preview")
        sigma = self.config.sigma
        return (
            render_tracks(session.source, sigma=sigma),
            render_tracks(session.target, sigma=sigma),
        )

    def export_bundle(
        self, sid: str, jitter: bool = True, seed: int = 0,
        out_dir: str | Path | None = None,
    ) -> Path:
        """Write the conditioning bundle (input clip, rendered source and
        target blobs, both track sets, prompt) for the video model.

        Applies the correspondence cap to source and target jointly and
        optional jitter independently to each. Deterministic given the
        session's edit log, the input clip and the seed.
        """
        with self._lock(sid):
            session = self.session(sid)
            if not session.source.tracks:
                raise PreconditionError("session has no tracks to export")
            cfg = self.config
            latent_shape(session.clip.frame_count, session.clip.height, session.clip.width)

            s_cap, s_js, s_jt = np.random.SeedSequence(seed).spawn(3)
            source = limit_correspondences(session.source, seed=s_cap, cap=cfg.cap)
            keep = set(source.ids)
            target = session.target.with_tracks(
                t for t in session.target.tracks if t.id in keep
            )
            # Jitter perturbs only the rendered conditioning (its whole
            # point is to break pixel-perfect alignment with the input
            # video); the bundled track files keep the authored motion.
            render_source, render_target = source, target
            if jitter and cfg.jitter > 0:
                render_source = apply_jitter(source, seed=s_js, amplitude=cfg.jitter)
                render_target = apply_jitter(target, seed=s_jt, amplitude=cfg.jitter)
            b_source = render_tracks(render_source, sigma=cfg.sigma)
            b_target = render_tracks(render_target, sigma=cfg.sigma)

            if out_dir is None:
                out_dir = self.session_dir(sid) / f"bundle-{session.edit_log_hash()[:8]}-s{seed}"
            bundle = Path(out_dir)
            bundle.mkdir(parents=True, exist_ok=True)
            write_clip(session.clip, bundle / "v_in", fps=self.config.fps)
            write_clip(b_source, bundle / "b_source", fps=self.config.fps)
            write_clip(b_target, bundle / "b_target", fps=self.config.fps)
            save_tracks(source, bundle / "tracks_source.json")
            save_tracks(target, bundle / "tracks_target.json")
            (bundle / "prompt.txt").write_text(session.prompt)
            (bundle / "request.json").write_text(json.dumps({
                "contract_version": 1,
                "frames": session.clip.frame_count,
                "width": session.clip.width,
                "height": session.clip.height,
            }, sort_keys=True))
            (bundle / "bundle.json").write_text(json.dumps({
                "cap": cfg.cap,
                "edit_log_hash": session.edit_log_hash(),
                "jitter": bool(jitter),
                "jitter_amplitude": cfg.jitter if jitter else 0.0,
                "prompt": session.prompt,
                "seed": seed,
                "sigma": cfg.sigma,
            }, sort_keys=True, indent=2))
            return bundle

    def generate(self, sid: str, seed: int = 0) -> int:
        """Export a bundle, run the video-model plugin on it, store the
        output clip in the generation history, return its index."""
        if self.editor is None:
            raise ConfigError("no editor (video model) configured for this service")
        bundle = self.export_bundle(sid, jitter=True, seed=seed)
        clip = self.editor(bundle)
        with self._lock(sid):
            session = self.session(sid)
            index = len(session.history)
            out_dir = self.session_dir(sid) / f"generated-{index:03d}"
            write_clip(clip, out_dir, fps=self.config.fps)
            scene = clip.meta.get("scene")
            if scene is not None:
                from .synthetic_oracle import save_scene

                save_scene(scene, out_dir / "scene.json")
            session.history.append(out_dir)
            self._append_log(session, {"op": "generate", "output_dir": str(out_dir)})
            return index

    def iterate(self, sid: str, clip_index: int, prompt: str | None = None) -> str:
        """Start a fresh session whose input is a previously generated
        clip; no tracks carry over."""
        session = self.session(sid)
        if not (0 <= clip_index < len(session.history)):
            raise PreconditionError(
                f"clip index {clip_index} outside history of length {len(session.history)}"
            )
        return self.create_session(
            session.history[clip_index],
            prompt=session.prompt if prompt is None else prompt,
        )


def _swap_track(ts: TrackSet, new: Track) -> TrackSet:
    return ts.with_tracks(new if t.id == new.id else t for t in ts.tracks)


# ---------------------------------------------------------------------------
# HTTP layer


def create_app(service: EditService):
    """FastAPI wrapper exposing the documented localhost API."""
    from fastapi import FastAPI, HTTPException, Response
    from pydantic import BaseModel, Field

    class CreateSession(BaseModel):
        clip_dir: str
        prompt: str = ""

    class AddPoint(BaseModel):
        frame: int
        x: float
        y: float

    class SetBezier(BaseModel):
        control_points: list[tuple[float, float]] = Field(min_length=2)
        frame_span: tuple[int, int]

    class SetVisibility(BaseModel):
        frames: list[int]
        visible: bool

    class Retime(BaseModel):
        time_map: list[float]

    class CameraEdit(BaseModel):
        kind: str  # "zoom" | "reproject"
        scales: list[float] | None = None
        principal: tuple[float, float] | None = None
        pointmaps_dir: str | None = None
        cameras_file: str | None = None

    class Export(BaseModel):
        jitter: bool = True
        seed: int = 0

    class Generate(BaseModel):
        seed: int = 0

    class Iterate(BaseModel):
        clip_index: int

    app = FastAPI(title="motionforge edit service", version="1.0")

    def _wrap(fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except KeyError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (PreconditionError, SchemaError, ConfigError) as e:
            raise HTTPException(status_code=422, detail=str(e))
        except MotionForgeError as e:
            raise HTTPException(status_code=500, detail=str(e))

    def _track_payload(ts: TrackSet) -> list[dict]:
        return [
            {
                "id": t.id,
                "color": list(t.color),
                "init_frame": t.init_frame,
                "xy": [[float(x), float(y)] for x, y in t.xy],
                "visible": [bool(v) for v in t.visible],
            }
            for t in ts.tracks
        ]

    @app.post("/sessions")
    def post_session(req: CreateSession):
        sid = _wrap(service.create_session, req.clip_dir, req.prompt)
        s = service.session(sid)
        return {
            "session_id": sid,
            "frames": s.clip.frame_count,
            "width": s.clip.width,
            "height": s.clip.height,
        }

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        s = _wrap(service.session, sid)
        return {
            "session_id": s.id,
            "frames": s.clip.frame_count,
            "width": s.clip.width,
            "height": s.clip.height,
            "prompt": s.prompt,
            "track_ids": s.source.ids,
            "history": [str(p) for p in s.history],
            "log_length": len(s.log),
        }

    @app.get("/sessions/{sid}/tracks")
    def get_tracks(sid: str):
        s = _wrap(service.session, sid)
        return {"source": _track_payload(s.source), "target": _track_payload(s.target)}

    @app.get("/sessions/{sid}/log")
    def get_log(sid: str):
        s = _wrap(service.session, sid)
        return {"log": s.log, "edit_log_hash": s.edit_log_hash()}

    @app.post("/sessions/{sid}/points")
    def post_point(sid: str, req: AddPoint):
        tid = _wrap(service.add_point, sid, req.frame, req.x, req.y)
        track = service.session(sid).source.track_by_id(tid)
        return {"track_id": tid, "color": list(track.color)}

    @app.put("/sessions/{sid}/tracks/{tid}/bezier")
    def put_bezier(sid: str, tid: int, req: SetBezier):
        _wrap(service.set_target_bezier, sid, tid, req.control_points, req.frame_span)
        return {"ok": True}

    @app.put("/sessions/{sid}/tracks/{tid}/visibility")
    def put_visibility(sid: str, tid: int, req: SetVisibility):
        _wrap(service.set_visibility, sid, tid, req.frames, req.visible)
        return {"ok": True}

    @app.put("/sessions/{sid}/tracks/{tid}/retime")
    def put_retime(sid: str, tid: int, req: Retime):
        _wrap(service.retime, sid, tid, req.time_map)
        return {"ok": True}

    @app.post("/sessions/{sid}/tracks/{tid}/anchor")
    def post_anchor(sid: str, tid: int):
        _wrap(service.anchor, sid, tid)
        return {"ok": True}

    @app.post("/sessions/{sid}/camera-edit")
    def post_camera(sid: str, req: CameraEdit):
        if req.kind == "zoom":
            if req.scales is None or req.principal is None:
                raise HTTPException(422, "zoom edits need scales and principal")
            _wrap(service.camera_zoom, sid, req.scales, req.principal)
        elif req.kind == "reproject":
            if not req.pointmaps_dir or not req.cameras_file:
                raise HTTPException(422, "reproject edits need pointmaps_dir and cameras_file")
            _wrap(service.camera_reproject, sid, req.pointmaps_dir, req.cameras_file)
        else:
            raise HTTPException(422, f"unknown camera edit kind {req.kind!r}")
        return {"ok": True}

    def _png_response(frame: np.ndarray) -> Response:
        buf = io.BytesIO()
        from PIL import Image

        Image.fromarray(
            np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8), mode="RGB"
        ).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/sessions/{sid}/preview")
    def get_preview(sid: str, frame: int = 0, which: str = "target"):
        b_source, b_target = _wrap(service.preview, sid)
        clip = {"source": b_source, "target": b_target}.get(which)
        if clip is None:
            raise HTTPException(422, "which must be 'source' or 'target'")
        if not (0 <= frame < clip.frame_count):
            raise HTTPException(422, f"frame {frame} outside the clip")
        return _png_response(clip.frames[frame])

    @app.get("/sessions/{sid}/frames/{f}")
    def get_frame(sid: str, f: int):
        s = _wrap(service.session, sid)
        if not (0 <= f < s.clip.frame_count):
            raise HTTPException(422, f"frame {f} outside the clip")
        return _png_response(s.clip.frames[f])

    @app.post("/sessions/{sid}/export")
    def post_export(sid: str, req: Export):
        bundle = _wrap(service.export_bundle, sid, req.jitter, req.seed)
        manifest = json.loads((bundle / "bundle.json").read_text())
        return {"bundle_dir": str(bundle), "manifest": manifest}

    @app.post("/sessions/{sid}/generate")
    def post_generate(sid: str, req: Generate):
        index = _wrap(service.generate, sid, req.seed)
        return {"clip_index": index, "output_dir": str(service.session(sid).history[index])}

    @app.post("/sessions/{sid}/iterate")
    def post_iterate(sid: str, req: Iterate):
        new_sid = _wrap(service.iterate, sid, req.clip_index)
        return {"session_id": new_sid}

    return app


def main(argv=None):  # pragma: no cover - thin wrapper
    import argparse

    import uvicorn

    from .pipeline_io import PluginEditor, PluginTracker

    parser = argparse.ArgumentParser(description="Run the local editing service")
    parser.add_argument("--port", type=int, default=8712)
    parser.add_argument("--root", default="./sessions")
    parser.add_argument("--tracker", help="tracker plugin manifest or name")
    parser.add_argument("--editor", help="video-model plugin manifest or name")
    parser.add_argument("--export-schemas", help="write the OpenAPI schema here and exit")
    args = parser.parse_args(argv)

    tracker = PluginTracker(args.tracker) if args.tracker else None
    editor = PluginEditor(args.editor).generate_edit if args.editor else None
    service = EditService(args.root, tracker=tracker, editor=editor)
    app = create_app(service)
    if args.export_schemas:
        Path(args.export_schemas).write_text(json.dumps(app.openapi(), indent=2))
        return
    uvicorn.run(app, host="127.0.0.1", port=args.port)


if __name__ == "__main__":  # pragma: no cover
    main()
