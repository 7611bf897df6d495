"""Tracker plugin answering queries from an analytic scene.

Consumes the standard tracker input contract (frames, queries.json,
request.json) plus a scene.json sidecar describing the ground-truth
scene; emits tracks.json with one exact track per query, in query
order. Real trackers estimate from pixels; this one exists to exercise
the plugin protocol with known-correct output.
"""

import json
import sys
from pathlib import Path

import numpy as np

from ..synthetic_oracle import load_scene, oracle_track
from ..track_core import Track, TrackSet, save_tracks


def run(input_dir: Path, output_dir: Path) -> None:
    request = json.loads((input_dir / "request.json").read_text())
    frames = int(request["frames"])
    scene_path = input_dir / "scene.json"
    if not scene_path.exists():
        raise SystemExit("oracle tracker requires a scene.json sidecar in the input directory")
    scene = load_scene(scene_path)
    queries = json.loads((input_dir / "queries.json").read_text())

    tracks = []
    for i, q in enumerate(queries):
        f, x, y = int(q["f"]), float(q["x"]), float(q["y"])
        xy = np.tile([x, y], (frames, 1))
        vis = np.zeros(frames, dtype=bool)
        vis[f] = True
        # Placeholder identity; the host reassigns ids/colors by order.
        color = ((i + 1) / (len(queries) + 1), 0.5, 0.5)
        tracks.append(Track(id=i, color=color, init_frame=f, xy=xy, visible=vis))
    query_set = TrackSet(tuple(tracks), frames, scene.width, scene.height)

    result = oracle_track(scene, query_set, frame_count=frames)
    output_dir.mkdir(parents=True, exist_ok=True)
    save_tracks(result, output_dir / "tracks.json")


def main(argv=None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        raise SystemExit("usage: motionforge-oracle-tracker <input_dir> <output_dir>")
    run(Path(argv[0]), Path(argv[1]))


if __name__ == "__main__":
    main()
