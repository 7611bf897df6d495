"""Quantitative evaluation: dataset construction, metrics, vote tables.

Test pairs come from splitting a video at its temporal midpoint into an
equal-length input/target pair sharing the boundary frame, keeping only
videos where enough midpoint-tracked points are occluded at both ends
(so the pair exercises content invisible in the first frame). Metrics
are frame-wise L2 and Gaussian-window SSIM; LPIPS stays an external
metric plugin.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatch,
    InsufficientSources,
    PreconditionError,
)
from .track_core import TrackSet, VideoClip, sample_init_points

__all__ = [
    "EvalPair",
    "VoteRecord",
    "QUESTIONS",
    "METHODS",
    "midpoint_split_reverse",
    "occlusion_filter",
    "l2_metric",
    "ssim_metric",
    "aggregate_votes",
    "build_eval_dataset",
    "write_eval_report",
]

QUESTIONS = ("Q1", "Q2", "Q3")
METHODS = ("Ours", "ATI", "ReVideo", "GWTF")

DEFAULT_N_POINTS = 25
DEFAULT_MIN_OCCLUDED = 5


@dataclass(frozen=True)
class Provenance:
    source_id: str
    split_frame: int


@dataclass(frozen=True)
class EvalPair:
    """Input/target clip pair sharing a boundary frame, plus the target
    tracks handed to every method under evaluation."""

    v0: VideoClip
    v1: VideoClip
    tracks: TrackSet | None = None
    provenance: Provenance = field(default=Provenance("", 0))

    def __post_init__(self):
        if self.v0.frames.shape != self.v1.frames.shape:
            raise DimensionMismatch("eval pair halves must share shape")
        if not np.array_equal(self.v0.frames[-1], self.v1.frames[0]):
            raise PreconditionError("last frame of v0 must equal first frame of v1 bit-exactly")


def split_boundary(frame_count: int) -> int:
    """Index of the shared boundary frame (the temporal midpoint)."""
    return (frame_count + 1) // 2 - 1


def midpoint_split_reverse(v: VideoClip, source_id: str = "") -> EvalPair:
    """Split a video at its midpoint into an (input, target) pair.

    Both halves have ceil(F/2) frames and share the boundary frame
    bit-exactly: the input ends on it and the target starts on it, so
    the target continues the input's content from a common frame. For
    even F the final source frame is unused, keeping the halves equal
    length.
    """
    f = v.frame_count
    if f < 3:
        raise PreconditionError(f"need at least 3 frames to split, got {f}")
    m = (f + 1) // 2
    v0 = VideoClip(v.frames[0:m].copy(), meta=dict(v.meta))
    v1 = VideoClip(v.frames[m - 1 : 2 * m - 1].copy(), meta=dict(v.meta))
    return EvalPair(v0=v0, v1=v1, provenance=Provenance(source_id, m - 1))


def occlusion_filter(
    v: VideoClip,
    tracker,
    n_points: int = DEFAULT_N_POINTS,
    min_occluded: int = DEFAULT_MIN_OCCLUDED,
    seed: int = 0,
) -> tuple[bool, dict]:
    """Does this video expose enough mid-video-only content?

    Tracks ``n_points`` random points initialized at the temporal
    midpoint bidirectionally and requires at least ``min_occluded`` of
    them to be invisible at the first frame and, separately, at the
    last. Returns (passed, diagnostics).
    """
    mid = split_boundary(v.frame_count)
    queries = sample_init_points(
        seed=seed,
        width=v.width,
        height=v.height,
        allowed_frames=[mid],
        n_range=(n_points, n_points),
        frame_count=v.frame_count,
    )
    tracked = tracker.track(v, queries)
    vis = tracked.visible_array()
    occ_first = int(np.sum(~vis[:, 0]))
    occ_last = int(np.sum(~vis[:, -1]))
    passed = occ_first >= min_occluded and occ_last >= min_occluded
    return passed, {
        "midpoint": mid,
        "n_points": n_points,
        "occluded_first": occ_first,
        "occluded_last": occ_last,
        "min_occluded": min_occluded,
    }


def l2_metric(pred: VideoClip, target: VideoClip) -> float:
    """Frame-averaged squared L2 distance, additionally normalized over
    pixels and channels so values are resolution-independent."""
    if pred.frames.shape != target.frames.shape:
        raise DimensionMismatch(
            f"shape mismatch: {pred.frames.shape} vs {target.frames.shape}"
        )
    diff = pred.frames.astype(np.float64) - target.frames.astype(np.float64)
    return float(np.mean(diff * diff))


_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _gaussian_window(n: int = _SSIM_WINDOW, sigma: float = _SSIM_SIGMA) -> np.ndarray:
    x = np.arange(n) - (n - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _ssim_frame(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM of one HxWx3 frame pair, valid region only."""
    win = _gaussian_window()
    half = _SSIM_WINDOW // 2
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2

    def filt(img):
        out = ndimage.correlate1d(img, win, axis=0, mode="nearest")
        return ndimage.correlate1d(out, win, axis=1, mode="nearest")

    vals = []
    for ch in range(a.shape[2]):
        x = a[:, :, ch].astype(np.float64)
        y = b[:, :, ch].astype(np.float64)
        mx, my = filt(x), filt(y)
        sxx = filt(x * x) - mx * mx
        syy = filt(y * y) - my * my
        sxy = filt(x * y) - mx * my
        num = (2 * mx * my + c1) * (2 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        smap = num / den
        vals.append(np.mean(smap[half:-half, half:-half]))
    return float(np.mean(vals))


def ssim_metric(pred: VideoClip, target: VideoClip) -> float:
    """Mean structural similarity over frames: 11x11 Gaussian window
    (sigma 1.5), k1=0.01, k2=0.03, dynamic range 1.0."""
    if pred.frames.shape != target.frames.shape:
        raise DimensionMismatch(
            f"shape mismatch: {pred.frames.shape} vs {target.frames.shape}"
        )
    if pred.height < _SSIM_WINDOW or pred.width < _SSIM_WINDOW:
        raise PreconditionError(
            f"frames must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM"
        )
    return float(
        np.mean([_ssim_frame(pred.frames[f], target.frames[f]) for f in range(pred.frame_count)])
    )


@dataclass(frozen=True)
class VoteRecord:
    participant: str
    case: str
    question: str
    choice: str

    def __post_init__(self):
        if self.question not in QUESTIONS:
            raise PreconditionError(f"question must be one of {QUESTIONS}")
        if self.choice not in METHODS:
            raise PreconditionError(f"choice must be one of {METHODS}")


def aggregate_votes(votes: Sequence[VoteRecord]) -> dict[str, dict[str, float]]:
    """Per-question win-rate fractions per method.

    Each (participant, case, question) may vote once; every returned
    row sums to 1 before any percent rounding.
    """
    seen = set()
    counts: dict[str, dict[str, int]] = {}
    for v in votes:
        key = (v.participant, v.case, v.question)
        if key in seen:
            raise PreconditionError(f"duplicate vote for {key}")
        seen.add(key)
        counts.setdefault(v.question, {m: 0 for m in METHODS})[v.choice] += 1
    table: dict[str, dict[str, float]] = {}
    for q, row in counts.items():
        total = sum(row.values())
        table[q] = {m: row[m] / total for m in METHODS}
    return table


def build_eval_dataset(
    sources: Sequence[VideoClip] | Sequence[tuple[str, VideoClip]],
    tracker,
    n_target: int = 100,
    n_points: int = DEFAULT_N_POINTS,
    min_occluded: int = DEFAULT_MIN_OCCLUDED,
    seed: int = 0,
) -> list[EvalPair]:
    """Split/filter sources in order until ``n_target`` pairs pass.

    Target tracks are sampled the same way training queries are:
    uniform spatial positions, here anchored at the target's first
    frame (the shared boundary), then tracked bidirectionally.
    Raises :class:`InsufficientSources` carrying the partial result
    when the sources run out.
    """
    normalized: list[tuple[str, VideoClip]] = []
    for i, s in enumerate(sources):
        if isinstance(s, tuple):
            normalized.append(s)
        else:
            normalized.append((f"source{i:04d}", s))

    pairs: list[EvalPair] = []
    for i, (sid, clip) in enumerate(normalized):
        if len(pairs) >= n_target:
            break
        s_filter, s_init = np.random.SeedSequence([seed, i]).spawn(2)
        passed, _diag = occlusion_filter(
            clip, tracker, n_points=n_points, min_occluded=min_occluded,
            seed=s_filter,
        )
        if not passed:
            continue
        pair = midpoint_split_reverse(clip, source_id=sid)
        queries = sample_init_points(
            seed=s_init,
            width=pair.v1.width,
            height=pair.v1.height,
            allowed_frames=[0],
            n_range=(n_points, n_points),
            frame_count=pair.v1.frame_count,
        )
        tracks = tracker.track(pair.v1, queries)
        pairs.append(EvalPair(pair.v0, pair.v1, tracks=tracks, provenance=pair.provenance))
    if len(pairs) < n_target:
        raise InsufficientSources(
            f"only {len(pairs)} of {n_target} requested pairs passed the filter",
            pairs=pairs,
            shortfall=n_target - len(pairs),
        )
    return pairs[:n_target]


def write_eval_report(
    rows: Sequence[dict],
    csv_path: str | Path,
    summary_path: str | Path | None = None,
) -> dict:
    """Write per-pair metric rows as CSV plus a per-method summary JSON.

    Rows carry (pair_id, method, l2, ssim) and optionally lpips.
    """
    fieldnames = ["pair_id", "method", "l2", "ssim", "lpips"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r.get(k, "") for k in fieldnames})

    summary: dict = {"methods": {}}
    for method in sorted({r["method"] for r in rows}):
        mrows = [r for r in rows if r["method"] == method]
        entry = {
            "n": len(mrows),
            "l2": statistics.fmean(float(r["l2"]) for r in mrows),
            "ssim": statistics.fmean(float(r["ssim"]) for r in mrows),
        }
        lp = [float(r["lpips"]) for r in mrows if r.get("lpips") not in (None, "")]
        entry["lpips"] = statistics.fmean(lp) if lp else None
        summary["methods"][method] = entry
    if summary_path is not None:
        Path(summary_path).write_text(json.dumps(summary, indent=2))
    return summary
