"""Render track sets into blob-conditioning videos.

Each visible point becomes a peak-normalized Gaussian blob in the
track's color on a black background; overlapping blobs composite by
per-channel maximum, which keeps values in [0, 1], keeps distinct
colors distinguishable, and is order-independent (so rendering may be
parallelized over frames or tracks without changing the output).
"""

from __future__ import annotations

import numpy as np

from . import palette
from .errors import DimensionMismatch, PreconditionError
from .track_core import BlobVideo, TrackSet

__all__ = ["assign_colors", "render_tracks", "dropout_tracks", "DEFAULT_SIGMA"]

DEFAULT_SIGMA = 10.0

# Blobs are truncated at this many sigmas; exp(-16**2/2/ ... ) at 4
# sigma the residual is e^-8 < 3.4e-4, negligible next to 8-bit
# quantization.
SUPPORT_SIGMAS = 4.0


def assign_colors(n: int, seed: int) -> list[tuple[float, float, float]]:
    """n pairwise-distinct random RGB colors (separation >= 0.15)."""
    return palette.distinct_colors(n, seed=seed)


def render_tracks(
    ts: TrackSet,
    f: int | None = None,
    h: int | None = None,
    w: int | None = None,
    sigma: float = DEFAULT_SIGMA,
) -> BlobVideo:
    """Rasterize a TrackSet as colored Gaussian blobs, shape (f, h, w, 3).

    A visible point at (x, y) contributes
    ``color * exp(-((px - x)^2 + (py - y)^2) / (2 sigma^2))`` sampled at
    pixel centers, peaking at 1 at the point itself. Invisible points
    contribute nothing, so a frame with no visible points is all-zero.
    """
    f = ts.frame_count if f is None else int(f)
    h = ts.height if h is None else int(h)
    w = ts.width if w is None else int(w)
    if (f, h, w) != (ts.frame_count, ts.height, ts.width):
        raise DimensionMismatch(
            f"requested (f={f}, h={h}, w={w}) but tracks span "
            f"(f={ts.frame_count}, h={ts.height}, w={ts.width})"
        )
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")

    out = np.zeros((f, h, w, 3), dtype=np.float32)
    radius = SUPPORT_SIGMAS * sigma
    inv = 1.0 / (2.0 * sigma * sigma)
    for track in ts.tracks:
        color = np.asarray(track.color, dtype=np.float32)
        for fi in np.flatnonzero(track.visible):
            x, y = track.xy[fi]
            # Pixel-center bounding box of the truncated support.
            j0 = max(int(np.floor(x - radius - 0.5)), 0)
            j1 = min(int(np.ceil(x + radius - 0.5)), w - 1)
            i0 = max(int(np.floor(y - radius - 0.5)), 0)
            i1 = min(int(np.ceil(y + radius - 0.5)), h - 1)
            if j0 > j1 or i0 > i1:
                continue
            px = np.arange(j0, j1 + 1) + 0.5 - x
            py = np.arange(i0, i1 + 1) + 0.5 - y
            d2 = py[:, None] ** 2 + px[None, :] ** 2
            g = np.exp(-d2 * inv).astype(np.float32)
            g[d2 > radius * radius] = 0.0
            patch = out[fi, i0 : i1 + 1, j0 : j1 + 1]
            np.maximum(patch, g[:, :, None] * color, out=patch)
    np.clip(out, 0.0, 1.0, out=out)
    return BlobVideo(out)


def dropout_tracks(ts: TrackSet, rate: float, seed: int) -> TrackSet:
    """Independently drop each whole track with probability ``rate``.

    Training applies a higher rate to target tracks than to
    conditioning tracks. Survivors are bit-exact.
    """
    if not (0.0 <= rate <= 1.0):
        raise PreconditionError(f"dropout rate must be in [0, 1], got {rate}")
    if rate == 0.0 or not ts.tracks:
        return ts
    rng = np.random.default_rng(seed)
    keep = rng.random(len(ts.tracks)) >= rate
    return ts.with_tracks(t for t, k in zip(ts.tracks, keep) if k)
