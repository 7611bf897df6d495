"""
Camera edits: zoom schedules and pointmap reprojection
======================================================

Synthesizes target tracks for two camera edits: a pure-2D zoom ramp
and a full reprojection of a planar scene through a translated camera,
checked against the closed-form plane homography.

Run:  python demos/03_camera_edits.py
"""

import numpy as np

from motionforge.camera import (
    CameraIntrinsics,
    CameraPose,
    PointmapSequence,
    camera_edit_tracks,
    zoom_schedule,
)
from motionforge.track_core import Track, TrackSet

F, W, H = 9, 96, 64
K = CameraIntrinsics(fx=80.0, fy=80.0, cx=W / 2, cy=H / 2)

pts = [(20.0, 20.0), (48.0, 32.0), (75.0, 50.0)]
tracks = tuple(
    Track(id=i, color=(i / 3, 0.5, 0.5), init_frame=0,
          xy=np.tile(p, (F, 1)), visible=np.ones(F, bool))
    for i, p in enumerate(pts)
)
ts = TrackSet(tracks, F, W, H)

# Zoom out, hold, zoom in: scale 0.5 -> 1 -> 2 about the principal point.
scales = np.concatenate([np.linspace(0.5, 1.0, 5), np.linspace(1.0, 2.0, 5)[1:]])
zoomed = zoom_schedule(ts, (K.cx, K.cy), scales)
print("zoom offsets of the first point from the principal point:")
for f in (0, 4, 8):
    dx = zoomed.tracks[0].xy[f, 0] - K.cx
    print(f"  frame {f}: scale {scales[f]:.2f} -> offset {dx:+.1f} px")

# Planar scene at depth 5 m seen from an identity camera.
depth = 5.0
ys, xs = np.mgrid[0:H, 0:W]
world = np.stack(
    [(xs + 0.5 - K.cx) / K.fx * depth, (ys + 0.5 - K.cy) / K.fy * depth,
     np.full((H, W), depth)], axis=2,
)
pm = PointmapSequence(np.tile(world[None], (F, 1, 1, 1)), np.ones((F, H, W), bool))

# Slide the camera 0.1 m to the right.
c = np.asarray([0.1, 0.0, 0.0])
moved = [(K, CameraPose(np.eye(3), -c))] * F
edited = camera_edit_tracks(ts, pm, moved)

kmat = np.asarray([[K.fx, 0, K.cx], [0, K.fy, K.cy], [0, 0, 1.0]])
hmat = kmat @ (np.eye(3) - np.outer(c, [0, 0, 1.0]) / depth) @ np.linalg.inv(kmat)
print("\nreprojection vs. analytic plane homography:")
for i, p in enumerate(pts):
    mapped = hmat @ [p[0], p[1], 1.0]
    mapped = mapped[:2] / mapped[2]
    got = edited.tracks[i].xy[0]
    print(f"  point {p} -> {got.round(3)} (homography {mapped.round(3)}, "
          f"err {np.linalg.norm(got - mapped):.2e} px)")
