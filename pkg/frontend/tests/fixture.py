"""Prepare a working directory for the frontend tests: a rendered
synthetic clip (with scene sidecar) plus oracle plugin manifests.
Prints the paths as JSON on stdout."""

import json
import sys
from pathlib import Path

from motionforge.pipeline_io import write_clip
from motionforge.synthetic_oracle import (
    Background,
    MotionPath,
    SceneSpec,
    Sprite,
    render_scene,
    save_scene,
)

FRAMES, WIDTH, HEIGHT = 13, 96, 64


def main() -> None:
    work = Path(sys.argv[1])
    work.mkdir(parents=True, exist_ok=True)

    disk = Sprite(
        id=0, shape="disk", z=1, color=(0.9, 0.3, 0.1),
        motion=MotionPath.linear(0, (16.0, 32.0), FRAMES - 1, (80.0, 32.0)),
        size=((0, 9.0),),
    )
    scene = SceneSpec(WIDTH, HEIGHT, Background("solid", (0.05, 0.1, 0.2)), (disk,))
    clip_dir = write_clip(render_scene(scene, FRAMES), work / "clip")
    save_scene(scene, clip_dir / "scene.json")

    manifests = {}
    for kind, module in (
        ("tracker", "motionforge.plugins.oracle_tracker"),
        ("editor", "motionforge.plugins.oracle_editor"),
    ):
        path = work / f"oracle_{kind}.json"
        path.write_text(json.dumps({
            "contract_version": 1,
            "name": f"oracle-{kind}",
            "kind": kind,
            "executable": [sys.executable, "-m", module],
            "timeout": 300.0,
        }))
        manifests[kind] = str(path)

    print(json.dumps({
        "clip_dir": str(clip_dir),
        "root": str(work / "sessions"),
        "tracker": manifests["tracker"],
        "editor": manifests["editor"],
        "frames": FRAMES,
        "width": WIDTH,
        "height": HEIGHT,
    }))


if __name__ == "__main__":
    main()
