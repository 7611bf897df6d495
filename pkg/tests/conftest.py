import numpy as np
import pytest

from motionforge.synthetic_oracle import (
    Background,
    MotionPath,
    OracleTracker,
    SceneSpec,
    Sprite,
    render_scene,
)
from motionforge.track_core import Track, TrackSet


# Small latent-shape-valid geometry: 13 frames at 96x64 (13 = 1 mod 4,
# 96 and 64 divisible by 8).
FRAMES = 13
WIDTH = 96
HEIGHT = 64


def make_query_set(points, frame_count, width, height, colors=None):
    """Build a single-frame query TrackSet from (frame, x, y) triples."""
    default_colors = [
        (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, 0.0),
        (1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (1.0, 1.0, 1.0), (0.5, 0.5, 0.5),
    ]
    tracks = []
    for i, (f, x, y) in enumerate(points):
        color = colors[i] if colors else default_colors[i % len(default_colors)]
        xy = np.tile([x, y], (frame_count, 1))
        vis = np.zeros(frame_count, dtype=bool)
        vis[f] = True
        tracks.append(Track(id=i, color=color, init_frame=f, xy=xy, visible=vis))
    return TrackSet(tuple(tracks), frame_count, width, height)


def moving_disk_scene(width=WIDTH, height=HEIGHT, frames=FRAMES, radius=9.0):
    """One disk sliding left-to-right along the horizontal midline."""
    disk = Sprite(
        id=0,
        shape="disk",
        z=1,
        color=(0.9, 0.3, 0.1),
        motion=MotionPath.linear(0, (16.0, height / 2), frames - 1, (width - 16.0, height / 2)),
        size=((0, radius),),
    )
    return SceneSpec(width, height, Background("solid", (0.05, 0.1, 0.2)), (disk,))


@pytest.fixture
def disk_scene():
    return moving_disk_scene()


@pytest.fixture
def disk_clip(disk_scene):
    return render_scene(disk_scene, FRAMES)


@pytest.fixture
def oracle_tracker():
    return OracleTracker()
