"""
Evaluation protocol walkthrough
===============================

Builds a tiny eval set with the midpoint split, shows the occlusion
filter at work, scores a fake "method" with the L2/SSIM metrics, and
aggregates synthetic study votes into a win-rate table.

Run:  python demos/04_eval_protocol.py
"""

import numpy as np

from motionforge.evalproto import (
    VoteRecord,
    aggregate_votes,
    build_eval_dataset,
    l2_metric,
    midpoint_split_reverse,
    occlusion_filter,
    ssim_metric,
)
from motionforge.synthetic_oracle import (
    Background,
    MotionPath,
    OracleTracker,
    SceneSpec,
    Sprite,
    render_scene,
)
from motionforge.track_core import VideoClip

# A disk that exists only mid-video (content hidden at both ends) and a
# static control scene.
hidden_disk = SceneSpec(
    48, 48, Background("solid", (0.1, 0.1, 0.3)),
    (Sprite(id=0, shape="disk", z=1, color=(0.9, 0.9, 0.2),
            motion=MotionPath.static(24.0, 24.0), size=((0, 20.0),), visible=(7, 13)),),
)
static = SceneSpec(48, 48, Background("solid", (0.25, 0.2, 0.15)))

tracker = OracleTracker()
for name, spec in (("hidden-disk", hidden_disk), ("static", static)):
    clip = render_scene(spec, 21)
    passed, diag = occlusion_filter(clip, tracker, n_points=25, min_occluded=5)
    print(f"{name}: filter {'PASS' if passed else 'FAIL'} "
          f"(occluded first/last: {diag['occluded_first']}/{diag['occluded_last']})")

pairs = build_eval_dataset(
    [("hidden", render_scene(hidden_disk, 21))], tracker, n_target=1,
)
pair = pairs[0]
print(f"\neval pair: |v0| = {pair.v0.frame_count}, |v1| = {pair.v1.frame_count}, "
      f"boundary bit-equal: {np.array_equal(pair.v0.frames[-1], pair.v1.frames[0])}")

# Score a fake method: prediction = target plus mild noise.
rng = np.random.default_rng(0)
pred = VideoClip(np.clip(pair.v1.frames + rng.normal(0, 0.05, pair.v1.frames.shape), 0, 1).astype(np.float32))
print(f"l2(pred, v1)   = {l2_metric(pred, pair.v1):.5f}")
print(f"ssim(pred, v1) = {ssim_metric(pred, pair.v1):.4f}")

# Aggregate a synthetic 100-vote study per question.
counts = {
    "Q1": {"Ours": 70, "ATI": 24, "ReVideo": 1, "GWTF": 5},
    "Q2": {"Ours": 71, "ATI": 24, "ReVideo": 2, "GWTF": 3},
    "Q3": {"Ours": 69, "ATI": 25, "ReVideo": 1, "GWTF": 5},
}
votes = []
for q, row in counts.items():
    i = 0
    for method, n in row.items():
        for _ in range(n):
            votes.append(VoteRecord(f"p{i}", f"c{i}", q, method))
            i += 1
table = aggregate_votes(votes)
print("\nwin rates (%):")
for q in ("Q1", "Q2", "Q3"):
    row = "  ".join(f"{m}: {table[q][m] * 100:.0f}" for m in ("Ours", "ATI", "ReVideo", "GWTF"))
    print(f"  {q}:  {row}")
