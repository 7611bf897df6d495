"""
Closed-loop interactive editing
===============================

Drives the edit service end to end without any UI: click a point on a
synthetic clip, drag its trajectory with a Bezier, export the
conditioning bundle, "generate" with the oracle video-model plugin, and
verify the output actually follows the authored motion by re-tracking
it. Then iterates: the output becomes the input of a second (zoom)
edit.

Run:  python demos/05_edit_session.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from motionforge.config import RunConfig
from motionforge.edit_service import EditService
from motionforge.pipeline_io import PluginEditor, read_clip, write_clip
from motionforge.synthetic_oracle import OracleTracker, render_scene, save_scene
from motionforge.track_core import Track, TrackSet

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from conftest import FRAMES, HEIGHT, WIDTH, moving_disk_scene  # noqa: E402

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="editdemo-"))

# Input clip: a rendered sprite scene with its scene.json sidecar so the
# oracle plugins can track it exactly.
scene = moving_disk_scene()
clip_dir = write_clip(render_scene(scene, FRAMES), work / "input")
save_scene(scene, clip_dir / "scene.json")

editor_manifest = work / "oracle_editor.json"
editor_manifest.write_text(json.dumps({
    "contract_version": 1, "name": "oracle-editor", "kind": "editor",
    "executable": [sys.executable, "-m", "motionforge.plugins.oracle_editor"],
    "timeout": 300.0,
}))

service = EditService(
    work / "sessions",
    config=RunConfig(frames=FRAMES, width=WIDTH, height=HEIGHT),
    tracker=OracleTracker(),
    editor=PluginEditor(editor_manifest).generate_edit,
)

p0 = scene.sprites[0].motion.position(0)
sid = service.create_session(clip_dir, prompt="move the disk to the corner")
tid = service.add_point(sid, 0, float(p0[0]), float(p0[1]))
print(f"clicked ({p0[0]:.1f}, {p0[1]:.1f}) -> track {tid} "
      f"color {service.session(sid).source.track_by_id(tid).color}")

service.set_target_bezier(sid, tid, [(float(p0[0]), float(p0[1])), (74.0, 14.0)], (0, FRAMES - 1))
target = service.session(sid).target.track_by_id(tid).xy.copy()

bundle = service.export_bundle(sid, jitter=True, seed=0)
print(f"exported bundle: {bundle.name} "
      f"(hash {json.loads((bundle / 'bundle.json').read_text())['edit_log_hash'][:12]}...)")

idx = service.generate(sid, seed=0)
produced = read_clip(service.session(sid).history[idx])

# Closed loop: re-track the generated clip at the authored start point.
q = TrackSet(
    (Track(id=0, color=(1, 0, 0), init_frame=0,
           xy=np.tile(target[0], (FRAMES, 1)), visible=np.eye(FRAMES, dtype=bool)[0]),),
    FRAMES, WIDTH, HEIGHT,
)
retracked = OracleTracker().track(produced, q).tracks[0]
err = np.hypot(*(retracked.xy - target).T).max()
print(f"closed-loop max deviation from authored target: {err:.4f} px")

# Iterate: zoom the generated result about the frame center.
sid2 = service.iterate(sid, idx)
service.add_point(sid2, 0, float(target[0, 0]), float(target[0, 1]))
service.camera_zoom(sid2, [1.0 + 0.02 * f for f in range(FRAMES)], (WIDTH / 2, HEIGHT / 2))
idx2 = service.generate(sid2, seed=1)
print(f"iterated edit stored at {service.session(sid2).history[idx2]}")
