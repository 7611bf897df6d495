"""
Tracks, Bezier editing, jitter, and blob rendering
==================================================

Builds a small track set by hand, reshapes one trajectory with a Bezier
curve, applies export-time jitter, and renders everything as Gaussian
blob conditioning frames.

Run:  python demos/01_tracks_and_blobs.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from motionforge import (
    Track,
    TrackSet,
    apply_jitter,
    bezier_resample,
    latent_shape,
    limit_correspondences,
)
from motionforge.pipeline_io import write_clip
from motionforge.rasterizer import assign_colors, render_tracks

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/tracks_and_blobs")

FRAMES, W, H = 25, 320, 240

# The latent geometry the conditioning must fit (F = 1 mod 4, H/8, W/8).
print("latent shape for (49, 480, 720):", latent_shape(49, 480, 720))

# Thirty tracks on a circle, each drifting outward.
colors = assign_colors(30, seed=0)
tracks = []
for i in range(30):
    angle = 2 * np.pi * i / 30
    r = np.linspace(40, 105, FRAMES)
    xy = np.stack([W / 2 + r * np.cos(angle), H / 2 + r * np.sin(angle)], axis=1)
    tracks.append(
        Track(id=i, color=colors[i], init_frame=0, xy=xy, visible=np.ones(FRAMES, bool))
    )
ts = TrackSet(tuple(tracks), FRAMES, W, H)

# Replace track 0's trajectory with a cubic Bezier swoop.
curve = bezier_resample(
    [(160, 120), (40, 20), (280, 20), (160, 200)], (0, FRAMES - 1)
)
ts = ts.with_tracks(
    t.replace(xy=curve) if t.id == 0 else t for t in ts.tracks
)

# Inference-time treatment: cap correspondences at 20, jitter +-2 px.
capped = limit_correspondences(ts, seed=1, cap=20)
jittered = apply_jitter(capped, seed=2, amplitude=2.0)
print(f"{len(ts)} tracks -> {len(capped)} after cap")
deltas = np.concatenate(
    [(b.xy - a.xy).ravel() for a, b in zip(capped.tracks, jittered.tracks)]
)
print(f"jitter range [{deltas.min():+.3f}, {deltas.max():+.3f}] px")

blob = render_tracks(jittered, sigma=10.0)
write_clip(blob, out_dir, fps=12.0)
print(f"wrote {FRAMES} blob frames to {out_dir}")
