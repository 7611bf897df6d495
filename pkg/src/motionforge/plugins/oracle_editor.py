"""Video-model plugin that "edits" by rendering the target tracks.

Consumes an exported conditioning bundle and returns a clip where one
disk sprite per target track follows that track's positions and
visibility exactly. The emitted scene.json makes the output clip
oracle-trackable, closing the loop: tracking the generated video must
recover the authored target motion.
"""

import json
import sys
from pathlib import Path

from ..pipeline_io import write_frame_png
from ..synthetic_oracle import MotionPath, SceneSpec, Sprite, render_scene, save_scene
from ..track_core import load_tracks

DISK_RADIUS = 6.0


def scene_from_target_tracks(bundle_dir: Path) -> SceneSpec:
    tracks = load_tracks(bundle_dir / "tracks_target.json")
    sprites = []
    for i, t in enumerate(tracks.tracks):
        keys = tuple((f, float(t.xy[f, 0]), float(t.xy[f, 1])) for f in range(tracks.frame_count))
        visible_frames = frozenset(int(f) for f in range(tracks.frame_count) if t.visible[f])
        sprites.append(
            Sprite(
                id=t.id,
                shape="disk",
                z=i + 1,
                color=t.color,
                motion=MotionPath("polyline", keys=keys),
                size=((0, DISK_RADIUS),),
                visible=visible_frames,
            )
        )
    return SceneSpec(tracks.width, tracks.height, sprites=tuple(sprites))


def run(bundle_dir: Path, output_dir: Path) -> None:
    request = json.loads((bundle_dir / "request.json").read_text())
    frames = int(request["frames"])
    spec = scene_from_target_tracks(bundle_dir)
    clip = render_scene(spec, frames)
    output_dir.mkdir(parents=True, exist_ok=True)
    for f in range(frames):
        write_frame_png(clip.frames[f], output_dir / f"{f:05d}.png")
    save_scene(spec, output_dir / "scene.json")


def main(argv=None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        raise SystemExit("usage: motionforge-oracle-editor <bundle_dir> <output_dir>")
    run(Path(argv[0]), Path(argv[1]))


if __name__ == "__main__":
    main()
