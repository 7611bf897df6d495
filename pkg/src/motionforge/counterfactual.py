"""Counterfactual training-sample generation.

Builds (V_cf, B_cf, B_target, V_target, prompt) bundles from raw
videos: the target is a real contiguous chunk, while the counterfactual
shares its content but moves differently, produced either by temporal
resampling (speedups, shifts, reversals) or by a frame-interpolation
generator conditioned on two anchor frames. Point correspondences
between the pair are established by tracking the full source video and
gathering/splicing so both track sets describe the same physical
points.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import ndimage

from .config import RunConfig
from .errors import (
    ConfigError,
    DimensionMismatch,
    PreconditionError,
    UnusableSample,
)
from .rasterizer import dropout_tracks, render_tracks
from .track_core import BlobVideo, Track, TrackSet, VideoClip, sample_init_points

__all__ = [
    "Strategy",
    "ChunkSpec",
    "CounterfactualSpec",
    "AugmentSpec",
    "TrainingSample",
    "Tracker",
    "Generator",
    "extract_target_chunk",
    "temporal_resample",
    "resample_indices",
    "sample_temporal_coords",
    "build_correspondence",
    "augment",
    "make_training_sample",
]


class Strategy(enum.Enum):
    TEMPORAL_RESAMPLING = "temporal_resampling"
    FRAME_INTERPOLATION = "frame_interpolation"


class Tracker(Protocol):
    """Dense bidirectional point tracking: given a clip and single-frame
    query points, returns one full track per query (same ids/colors)."""

    def track(self, clip: VideoClip, queries: TrackSet) -> TrackSet: ...


class Generator(Protocol):
    """Frame interpolation: an F-frame clip conditioned on two frames of
    the source video (first and last frames reproduce them)."""

    def generate(
        self, v_full: VideoClip, f_first: int, f_last: int, prompt: str, frames: int
    ) -> VideoClip: ...


@dataclass(frozen=True)
class ChunkSpec:
    f_start: int
    length: int

    @property
    def frame_range(self) -> range:
        return range(self.f_start, self.f_start + self.length)


@dataclass(frozen=True)
class CounterfactualSpec:
    strategy: Strategy
    f_start_cf: int
    f_end_cf: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise PreconditionError("counterfactual length must be >= 1")
        if self.f_start_cf < 0 or self.f_end_cf < 0:
            raise PreconditionError("counterfactual frame indices must be >= 0")


@dataclass(frozen=True)
class AugmentSpec:
    """Per-frame similarity transform, linearly interpolated between a
    first-frame and a last-frame keyframe (a sliding crop/rotate/zoom).

    The transform at frame f maps source coordinates to output
    coordinates as ``p' = s * R(theta) * (p - c) + c + d`` about the
    frame center c.
    """

    translate: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 0.0), (0.0, 0.0))
    rotate: tuple[float, float] = (0.0, 0.0)
    scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.scale[0] <= 0 or self.scale[1] <= 0:
            raise PreconditionError(f"scale must be positive, got {self.scale}")

    @staticmethod
    def identity() -> "AugmentSpec":
        return AugmentSpec()

    @staticmethod
    def sample(seed, max_translate: float, max_rotate: float, scale_range: tuple[float, float]) -> "AugmentSpec":
        rng = np.random.default_rng(seed)
        t = rng.uniform(-max_translate, max_translate, size=(2, 2))
        r = rng.uniform(-max_rotate, max_rotate, size=2)
        s = rng.uniform(scale_range[0], scale_range[1], size=2)
        return AugmentSpec(
            translate=((t[0, 0], t[0, 1]), (t[1, 0], t[1, 1])),
            rotate=(r[0], r[1]),
            scale=(s[0], s[1]),
        )

    def params_at(self, f: int, frame_count: int) -> tuple[np.ndarray, float, float]:
        u = f / (frame_count - 1) if frame_count > 1 else 0.0
        d = (1 - u) * np.asarray(self.translate[0]) + u * np.asarray(self.translate[1])
        theta = (1 - u) * self.rotate[0] + u * self.rotate[1]
        s = (1 - u) * self.scale[0] + u * self.scale[1]
        return d, theta, s

    def matrix_at(self, f: int, frame_count: int, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """Forward map (M, b) with p' = M @ p + b in (x, y) coordinates."""
        d, theta, s = self.params_at(f, frame_count)
        c = np.asarray([width / 2.0, height / 2.0])
        m = s * np.asarray([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        b = c + d - m @ c
        return m, b


@dataclass(frozen=True)
class TrainingSample:
    v_cf: VideoClip
    b_cf: BlobVideo
    b_target: BlobVideo
    v_target: VideoClip
    prompt: str
    t_cf: TrackSet | None = field(default=None, compare=False)
    t_target: TrackSet | None = field(default=None, compare=False)

    def __post_init__(self):
        shapes = {clip.frames.shape for clip in (self.v_cf, self.b_cf, self.b_target, self.v_target)}
        if len(shapes) != 1:
            raise DimensionMismatch(f"sample clips disagree on shape: {shapes}")


def extract_target_chunk(v_full: VideoClip, f: int, seed) -> tuple[VideoClip, ChunkSpec]:
    """Copy a contiguous f-frame chunk starting at a uniform random
    frame. The chunk is the real, unmodified target video."""
    if v_full.frame_count < f:
        raise PreconditionError(
            f"source has {v_full.frame_count} frames, need at least {f}"
        )
    rng = np.random.default_rng(seed)
    f_start = int(rng.integers(0, v_full.frame_count - f + 1))
    chunk = VideoClip(v_full.frames[f_start : f_start + f].copy())
    return chunk, ChunkSpec(f_start=f_start, length=f)


def resample_indices(f_start_cf: int, f_end_cf: int, length: int) -> np.ndarray:
    """Source indices of ``length`` frames evenly spaced between the two
    endpoints (inclusive); descending when start > end. Non-integer
    positions round to nearest with ties toward the end index."""
    ideal = np.linspace(float(f_start_cf), float(f_end_cf), length)
    if f_end_cf >= f_start_cf:
        idx = np.floor(ideal + 0.5)
    else:
        idx = np.ceil(ideal - 0.5)
    lo, hi = min(f_start_cf, f_end_cf), max(f_start_cf, f_end_cf)
    return np.clip(idx, lo, hi).astype(int)


def temporal_resample(v_full: VideoClip, spec: CounterfactualSpec) -> tuple[VideoClip, np.ndarray]:
    """Build the counterfactual by sampling evenly spaced source frames;
    also returns the new-frame -> source-frame index map used for track
    correspondence."""
    if spec.strategy is not Strategy.TEMPORAL_RESAMPLING:
        raise PreconditionError("spec strategy must be temporal resampling")
    if max(spec.f_start_cf, spec.f_end_cf) >= v_full.frame_count:
        raise PreconditionError("counterfactual endpoints outside the source video")
    index_map = resample_indices(spec.f_start_cf, spec.f_end_cf, spec.length)
    clip = VideoClip(v_full.frames[index_map].copy())
    scene = v_full.meta.get("scene")
    if scene is not None:
        clip = clip.with_meta(scene=scene, index_map=index_map)
    return clip, index_map


def sample_temporal_coords(
    spec: CounterfactualSpec,
    chunk: ChunkSpec,
    index_map: np.ndarray | None = None,
) -> frozenset[int]:
    """Source-video frames at which query points may be initialized.

    Resampling requires frames present in both the target chunk and the
    counterfactual; interpolation pins queries to the two anchor frames
    (the only counterfactual frames that match the source exactly).
    """
    if spec.strategy is Strategy.FRAME_INTERPOLATION:
        return frozenset((spec.f_start_cf, spec.f_end_cf))
    if index_map is None:
        index_map = resample_indices(spec.f_start_cf, spec.f_end_cf, spec.length)
    allowed = frozenset(int(i) for i in index_map) & frozenset(chunk.frame_range)
    if not allowed:
        raise UnusableSample(
            f"no shared frames between target chunk {chunk} and counterfactual {spec}"
        )
    return allowed


def _restrict_tracks(ts: TrackSet, start: int, length: int, width: int, height: int) -> TrackSet:
    tracks = []
    for t in ts.tracks:
        init = min(max(t.init_frame - start, 0), length - 1)
        tracks.append(
            Track(
                id=t.id,
                color=t.color,
                init_frame=init,
                xy=t.xy[start : start + length],
                visible=t.visible[start : start + length],
            )
        )
    return TrackSet(tuple(tracks), length, width, height)


def _gather_tracks(ts: TrackSet, index_map: np.ndarray, width: int, height: int) -> TrackSet:
    length = len(index_map)
    tracks = []
    for t in ts.tracks:
        hits = np.flatnonzero(index_map == t.init_frame)
        if hits.size == 0:
            raise PreconditionError(
                f"track {t.id} initialized at frame {t.init_frame}, absent from the index map"
            )
        tracks.append(
            Track(
                id=t.id,
                color=t.color,
                init_frame=int(hits[0]),
                xy=t.xy[index_map],
                visible=t.visible[index_map],
            )
        )
    return TrackSet(tuple(tracks), length, width, height)


def _requery(queries: TrackSet, frame_map: dict[int, int], frame_count: int) -> TrackSet:
    """Re-anchor single-frame query points onto new frame indices."""
    tracks = []
    for t in queries.tracks:
        init = frame_map[t.init_frame]
        xy = np.tile(t.xy[t.init_frame], (frame_count, 1))
        vis = np.zeros(frame_count, dtype=bool)
        vis[init] = True
        tracks.append(Track(id=t.id, color=t.color, init_frame=init, xy=xy, visible=vis))
    return TrackSet(tuple(tracks), frame_count, queries.width, queries.height)


def build_correspondence(
    v_full: VideoClip,
    v_cf: VideoClip,
    spec: CounterfactualSpec,
    chunk: ChunkSpec,
    init_points: TrackSet,
    tracker: Tracker,
) -> tuple[TrackSet, TrackSet]:
    """Produce matching (t_target, t_cf) track sets for a video pair.

    The source video is tracked once from the shared query points;
    target tracks are the output restricted to the target chunk. For
    resampling, counterfactual tracks reuse the same output gathered
    through the index map, which makes the correspondence exact by
    construction. For interpolation, the counterfactual frames are
    spliced into the source and tracked again, so the anchor frames tie
    both sets to the same physical points.
    """
    w, h = init_points.width, init_points.height
    full_tracks = tracker.track(v_full, init_points)
    t_target = _restrict_tracks(full_tracks, chunk.f_start, chunk.length, w, h)

    if spec.strategy is Strategy.TEMPORAL_RESAMPLING:
        index_map = resample_indices(spec.f_start_cf, spec.f_end_cf, spec.length)
        t_cf = _gather_tracks(full_tracks, index_map, w, h)
        return t_target, t_cf

    s, e = spec.f_start_cf, spec.f_end_cf
    if s > e:
        raise PreconditionError(
            "frame interpolation requires f_start_cf <= f_end_cf (sampling normalizes this)"
        )
    if v_cf.frame_count != spec.length:
        raise DimensionMismatch("counterfactual clip length disagrees with spec.length")
    hybrid_frames = np.concatenate(
        [v_full.frames[:s], v_cf.frames, v_full.frames[e + 1 :]], axis=0
    )
    hybrid = VideoClip(hybrid_frames)
    scene = v_cf.meta.get("scene")
    if scene is not None and hasattr(scene, "time_shifted"):
        hybrid = hybrid.with_meta(scene=scene.time_shifted(s))
    queries_h = _requery(init_points, {s: s, e: s + spec.length - 1}, hybrid.frame_count)
    hybrid_tracks = tracker.track(hybrid, queries_h)
    t_cf = _restrict_tracks(hybrid_tracks, s, spec.length, w, h)
    return t_target, t_cf


def augment(v_cf: VideoClip, t_cf: TrackSet, spec: AugmentSpec) -> tuple[VideoClip, TrackSet]:
    """Warp each frame by its similarity transform (bilinear, black
    outside) and map the tracks through the same transform; points
    pushed out of the frame become invisible."""
    if (t_cf.frame_count, t_cf.height, t_cf.width) != (
        v_cf.frame_count,
        v_cf.height,
        v_cf.width,
    ):
        raise DimensionMismatch("tracks and clip disagree on dimensions")
    f_count, h, w = v_cf.frame_count, v_cf.height, v_cf.width
    swap = np.asarray([[0.0, 1.0], [1.0, 0.0]])
    half = np.asarray([0.5, 0.5])

    out_frames = np.empty_like(v_cf.frames)
    new_xy = np.empty((len(t_cf), f_count, 2))
    new_vis = np.empty((len(t_cf), f_count), dtype=bool)
    xy = t_cf.xy_array()
    vis = t_cf.visible_array()

    for f in range(f_count):
        m, b = spec.matrix_at(f, f_count, w, h)
        minv = np.linalg.inv(m)
        # scipy's affine_transform maps output index -> input index in
        # (row, col) order with pixel centers at integer indices; our
        # convention has centers at integer + 0.5, hence the half-pixel
        # conjugation.
        a_yx = swap @ minv @ swap
        off_yx = swap @ (minv @ (half - b)) - half
        mat3 = np.eye(3)
        mat3[:2, :2] = a_yx
        off3 = np.asarray([off_yx[0], off_yx[1], 0.0])
        out_frames[f] = ndimage.affine_transform(
            v_cf.frames[f], mat3, offset=off3, order=1, mode="constant", cval=0.0
        )
        if len(t_cf):
            p = xy[:, f, :] @ m.T + b
            new_xy[:, f, :] = p
            inside = (p[:, 0] >= 0) & (p[:, 0] < w) & (p[:, 1] >= 0) & (p[:, 1] < h)
            new_vis[:, f] = vis[:, f] & inside

    tracks = [
        t.replace(xy=new_xy[i], visible=new_vis[i]) for i, t in enumerate(t_cf.tracks)
    ]
    return VideoClip(out_frames), t_cf.with_tracks(tracks)


def warp_clip(clip: VideoClip, spec: AugmentSpec) -> VideoClip:
    """Frame warp of :func:`augment` without any tracks (used to check
    that augmentation commutes with rendering)."""
    empty = TrackSet((), clip.frame_count, clip.width, clip.height)
    warped, _ = augment(clip, empty, spec)
    return warped


def _sample_cf_spec(rng: np.random.Generator, f_full: int, length: int, interpolation_ratio: float) -> CounterfactualSpec:
    use_interp = rng.random() < interpolation_ratio
    s = int(rng.integers(0, f_full))
    e = int(rng.integers(0, f_full))
    if use_interp and s > e:
        s, e = e, s  # reversal is meaningless when generating between anchors
    strategy = Strategy.FRAME_INTERPOLATION if use_interp else Strategy.TEMPORAL_RESAMPLING
    return CounterfactualSpec(strategy=strategy, f_start_cf=s, f_end_cf=e, length=length)


def make_training_sample(
    v_full: VideoClip,
    prompt: str,
    config: RunConfig,
    seed: int,
    tracker: Tracker,
    generator: Generator | None = None,
    chunk: ChunkSpec | None = None,
    cf_spec: CounterfactualSpec | None = None,
    augment_spec: AugmentSpec | None = None,
) -> TrainingSample:
    """Run the full pipeline for one sample.

    Unusable draws (no shared frames to initialize queries, or every
    track dropped) are rejected and retried with the next seed, up to
    ``config.max_sample_attempts``. Fixing (inputs, seed) and using
    deterministic plugins makes the output bit-reproducible. The
    ``chunk`` / ``cf_spec`` / ``augment_spec`` arguments pin individual
    stages instead of sampling them.
    """
    if v_full.frame_count < config.frames:
        raise PreconditionError(
            f"source video has {v_full.frame_count} frames, need >= {config.frames}"
        )
    if (v_full.height, v_full.width) != (config.height, config.width):
        raise DimensionMismatch(
            f"source is {v_full.width}x{v_full.height}, config wants {config.width}x{config.height}"
        )

    last_err: UnusableSample | None = None
    for attempt in range(config.max_sample_attempts):
        ss = np.random.SeedSequence(seed + attempt)
        s_chunk, s_spec, s_init, s_aug, s_dt, s_dc = ss.spawn(6)
        try:
            return _make_sample_once(
                v_full, prompt, config, tracker, generator,
                chunk, cf_spec, augment_spec,
                s_chunk, s_spec, s_init, s_aug, s_dt, s_dc,
            )
        except UnusableSample as e:
            last_err = e
    raise UnusableSample(
        f"no usable sample after {config.max_sample_attempts} attempts: {last_err}"
    )


def _make_sample_once(
    v_full, prompt, config, tracker, generator,
    chunk, cf_spec, augment_spec,
    s_chunk, s_spec, s_init, s_aug, s_dt, s_dc,
):
    if chunk is None:
        v_target, chunk = extract_target_chunk(v_full, config.frames, s_chunk)
    else:
        if chunk.f_start < 0 or chunk.f_start + chunk.length > v_full.frame_count:
            raise PreconditionError(f"chunk {chunk} outside the source video")
        v_target = VideoClip(
            v_full.frames[chunk.f_start : chunk.f_start + chunk.length].copy()
        )
    if cf_spec is None:
        cf_spec = _sample_cf_spec(
            np.random.default_rng(s_spec), v_full.frame_count, config.frames,
            config.interpolation_ratio,
        )

    if cf_spec.strategy is Strategy.TEMPORAL_RESAMPLING:
        v_cf, index_map = temporal_resample(v_full, cf_spec)
    else:
        if generator is None:
            raise ConfigError("frame-interpolation strategy requires a generator plugin")
        index_map = None
        v_cf = generator.generate(
            v_full, cf_spec.f_start_cf, cf_spec.f_end_cf, prompt, config.frames
        )

    allowed = sample_temporal_coords(cf_spec, chunk, index_map)
    init_points = sample_init_points(
        seed=s_init,
        width=config.width,
        height=config.height,
        allowed_frames=allowed,
        n_range=(config.n_points_min, config.n_points_max),
        frame_count=v_full.frame_count,
    )
    t_target, t_cf = build_correspondence(v_full, v_cf, cf_spec, chunk, init_points, tracker)

    if augment_spec is None:
        augment_spec = AugmentSpec.sample(
            s_aug,
            config.augment_translate,
            config.augment_rotate,
            (config.augment_scale_min, config.augment_scale_max),
        )
    v_cf, t_cf = augment(v_cf, t_cf, augment_spec)

    t_target_kept = dropout_tracks(t_target, config.dropout_target, s_dt)
    t_cf_kept = dropout_tracks(t_cf, config.dropout_conditioning, s_dc)
    if len(t_target_kept) == 0 or len(t_cf_kept) == 0:
        raise UnusableSample("dropout removed every track")

    b_cf = render_tracks(t_cf_kept, sigma=config.sigma)
    b_target = render_tracks(t_target_kept, sigma=config.sigma)
    return TrainingSample(
        v_cf=VideoClip(v_cf.frames),
        b_cf=b_cf,
        b_target=b_target,
        v_target=v_target,
        prompt=prompt,
        t_cf=t_cf_kept,
        t_target=t_target_kept,
    )
