"""Frame-interpolation generator plugin.

Follows the generator input contract (first.png, last.png, prompt.txt,
request.json). With first_scene.json / last_scene.json sidecars it
interpolates the analytic scenes exactly and also emits the resulting
scene.json; without them it falls back to a pixel crossfade. Either
way the first and last output frames reproduce the conditioning frames
bit-exactly, which is the property correspondence anchoring relies on.
"""

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from ..pipeline_io import write_frame_png
from ..synthetic_oracle import load_scene, oracle_generate, save_scene


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def run(input_dir: Path, output_dir: Path) -> None:
    request = json.loads((input_dir / "request.json").read_text())
    frames = int(request["frames"])
    output_dir.mkdir(parents=True, exist_ok=True)

    first_scene = input_dir / "first_scene.json"
    last_scene = input_dir / "last_scene.json"
    if first_scene.exists() and last_scene.exists():
        clip, spec = oracle_generate(load_scene(first_scene), load_scene(last_scene), frames)
        for f in range(frames):
            write_frame_png(clip.frames[f], output_dir / f"{f:05d}.png")
        save_scene(spec, output_dir / "scene.json")
        return

    first = _read_png(input_dir / "first.png")
    last = _read_png(input_dir / "last.png")
    for f in range(frames):
        t = f / (frames - 1) if frames > 1 else 0.0
        write_frame_png((1.0 - t) * first + t * last, output_dir / f"{f:05d}.png")


def main(argv=None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        raise SystemExit("usage: motionforge-oracle-generator <input_dir> <output_dir>")
    run(Path(argv[0]), Path(argv[1]))


if __name__ == "__main__":
    main()
