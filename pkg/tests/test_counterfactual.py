import numpy as np
import pytest

from conftest import FRAMES, HEIGHT, WIDTH, make_query_set, moving_disk_scene
from motionforge.config import RunConfig
from motionforge.counterfactual import (
    AugmentSpec,
    ChunkSpec,
    CounterfactualSpec,
    Strategy,
    augment,
    build_correspondence,
    extract_target_chunk,
    make_training_sample,
    resample_indices,
    sample_temporal_coords,
    temporal_resample,
    warp_clip,
)
from motionforge.errors import ConfigError, PreconditionError, UnusableSample
from motionforge.rasterizer import render_tracks
from motionforge.synthetic_oracle import OracleGenerator, OracleTracker, render_scene
from motionforge.track_core import VideoClip


def tiny_clip(frames, height=4, width=6, seed=0):
    rng = np.random.default_rng(seed)
    return VideoClip(rng.random((frames, height, width, 3), dtype=np.float32))


def make_config() -> RunConfig:
    return RunConfig(
        frames=FRAMES, width=WIDTH, height=HEIGHT,
        dropout_target=0.0, dropout_conditioning=0.0,
        augment_translate=4.0, augment_rotate=0.05,
        interpolation_ratio=0.0,
    )


class TestExtractTargetChunk:
    def test_spec_scale_bounds(self):
        v = tiny_clip(100)
        chunk, spec = extract_target_chunk(v, 49, seed=123)
        assert 0 <= spec.f_start <= 51
        assert chunk.frame_count == 49

    def test_bit_exact_copy(self):
        v = tiny_clip(20)
        chunk, spec = extract_target_chunk(v, 9, seed=5)
        assert np.array_equal(chunk.frames, v.frames[spec.f_start : spec.f_start + 9])

    def test_forced_whole_video(self):
        v = tiny_clip(9)
        chunk, spec = extract_target_chunk(v, 9, seed=1)
        assert spec.f_start == 0
        assert np.array_equal(chunk.frames, v.frames)

    def test_too_short(self):
        with pytest.raises(PreconditionError):
            extract_target_chunk(tiny_clip(5), 9, seed=0)

    def test_determinism(self):
        v = tiny_clip(50)
        _, a = extract_target_chunk(v, 10, seed=9)
        _, b = extract_target_chunk(v, 10, seed=9)
        assert a == b


class TestTemporalResample:
    def test_even_spacing(self):
        v = tiny_clip(97)
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, 96, 49)
        clip, index_map = temporal_resample(v, spec)
        assert list(index_map) == list(range(0, 97, 2))
        assert np.array_equal(clip.frames, v.frames[::2])

    def test_degenerate_span(self):
        v = tiny_clip(10)
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 4, 4, 7)
        clip, index_map = temporal_resample(v, spec)
        assert list(index_map) == [4] * 7
        for f in range(7):
            assert np.array_equal(clip.frames[f], v.frames[4])

    def test_reversal_symmetry(self):
        v = tiny_clip(97)
        fwd = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, 96, 49)
        rev = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 96, 0, 49)
        _, fwd_map = temporal_resample(v, fwd)
        clip_rev, rev_map = temporal_resample(v, rev)
        assert list(rev_map) == list(fwd_map[::-1])
        assert np.array_equal(clip_rev.frames, v.frames[fwd_map][::-1])

    def test_rounding_ties_toward_end(self):
        assert list(resample_indices(0, 3, 3)) == [0, 2, 3]
        assert list(resample_indices(3, 0, 3)) == [3, 1, 0]

    def test_matches_linspace_round_oracle(self):
        # Independent oracle: linspace + elementwise nearest-round.
        for s, e, n in [(0, 96, 49), (5, 90, 13), (80, 3, 21), (7, 7, 5)]:
            ideal = np.linspace(s, e, n)
            got = resample_indices(s, e, n)
            assert np.all(np.abs(got - ideal) <= 0.5 + 1e-9)
            assert np.all(np.abs(got - np.round(ideal)) <= 1.0)  # ties may differ by 1

    def test_out_of_range(self):
        v = tiny_clip(10)
        with pytest.raises(PreconditionError):
            temporal_resample(v, CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, 10, 5))


class TestSampleTemporalCoords:
    def test_interpolation_pins_endpoints(self):
        spec = CounterfactualSpec(Strategy.FRAME_INTERPOLATION, 3, 40, 49)
        allowed = sample_temporal_coords(spec, ChunkSpec(0, 49))
        assert allowed == frozenset({3, 40})

    def test_resampling_intersection(self):
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, 96, 49)
        chunk = ChunkSpec(10, 49)
        allowed = sample_temporal_coords(spec, chunk)
        expected = set(range(0, 97, 2)) & set(range(10, 59))
        assert allowed == frozenset(expected)

    def test_disjoint_is_unusable(self):
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 50, 96, 10)
        with pytest.raises(UnusableSample):
            sample_temporal_coords(spec, ChunkSpec(0, 10))


class TestBuildCorrespondence:
    def _scene_clip(self):
        scene = moving_disk_scene()
        return scene, render_scene(scene, FRAMES)

    def test_identity_resampling_gather(self, oracle_tracker):
        scene, clip = self._scene_clip()
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, FRAMES - 1, FRAMES)
        chunk = ChunkSpec(0, FRAMES)
        v_cf, _ = temporal_resample(clip, spec)
        queries = make_query_set([(0, 20.0, 32.0), (6, 40.0, 30.0)], FRAMES, WIDTH, HEIGHT)
        t_target, t_cf = build_correspondence(clip, v_cf, spec, chunk, queries, oracle_tracker)
        for a, b in zip(t_target.tracks, t_cf.tracks):
            assert np.array_equal(a.xy, b.xy)
            assert np.array_equal(a.visible, b.visible)

    def test_target_matches_analytic_path(self, oracle_tracker):
        scene, clip = self._scene_clip()
        disk = scene.sprites[0]
        p0 = disk.motion.position(0)
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, FRAMES - 1, FRAMES)
        chunk = ChunkSpec(0, FRAMES)
        v_cf, _ = temporal_resample(clip, spec)
        queries = make_query_set([(0, p0[0], p0[1])], FRAMES, WIDTH, HEIGHT)
        t_target, _ = build_correspondence(clip, v_cf, spec, chunk, queries, oracle_tracker)
        for f in range(FRAMES):
            assert np.allclose(t_target.tracks[0].xy[f], disk.motion.position(f), atol=0)

    def test_reversal_gather(self, oracle_tracker):
        scene, clip = self._scene_clip()
        fwd_spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, FRAMES - 1, FRAMES)
        rev_spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, FRAMES - 1, 0, FRAMES)
        chunk = ChunkSpec(0, FRAMES)
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        v_fwd, _ = temporal_resample(clip, fwd_spec)
        v_rev, _ = temporal_resample(clip, rev_spec)
        _, t_fwd = build_correspondence(clip, v_fwd, fwd_spec, chunk, queries, oracle_tracker)
        _, t_rev = build_correspondence(clip, v_rev, rev_spec, chunk, queries, oracle_tracker)
        assert np.array_equal(t_rev.tracks[0].xy, t_fwd.tracks[0].xy[::-1])
        assert np.array_equal(t_rev.tracks[0].visible, t_fwd.tracks[0].visible[::-1])

    def test_gather_exactness_nontrivial_map(self, oracle_tracker):
        scene = moving_disk_scene(frames=25)
        clip = render_scene(scene, 25)
        spec = CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 2, 22, 9)
        chunk = ChunkSpec(4, 9)
        index_map = resample_indices(2, 22, 9)
        allowed = sample_temporal_coords(spec, chunk, index_map)
        f0 = sorted(allowed)[0]
        queries = make_query_set([(f0, 30.0, 30.0)], 25, WIDTH, HEIGHT)
        v_cf, _ = temporal_resample(clip, spec)
        t_target, t_cf = build_correspondence(clip, v_cf, spec, chunk, queries, oracle_tracker)
        full = oracle_tracker.track(clip, queries)
        for f in range(9):
            assert np.array_equal(t_cf.tracks[0].xy[f], full.tracks[0].xy[index_map[f]])

    def test_interpolation_anchoring(self, oracle_tracker):
        scene, clip = self._scene_clip()
        s, e = 2, 9
        spec = CounterfactualSpec(Strategy.FRAME_INTERPOLATION, s, e, FRAMES)
        chunk = ChunkSpec(0, FRAMES)
        v_cf = OracleGenerator().generate(clip, s, e, "", FRAMES)
        queries = make_query_set([(s, 20.0, 32.0), (e, 60.0, 30.0)], FRAMES, WIDTH, HEIGHT)
        t_target, t_cf = build_correspondence(clip, v_cf, spec, chunk, queries, oracle_tracker)
        full = oracle_tracker.track(clip, queries)
        for track_cf, track_full in zip(t_cf.tracks, full.tracks):
            assert np.array_equal(track_cf.xy[0], track_full.xy[s])
            assert np.array_equal(track_cf.xy[FRAMES - 1], track_full.xy[e])

    def test_interpolation_requires_sorted_span(self, oracle_tracker):
        scene, clip = self._scene_clip()
        spec = CounterfactualSpec(Strategy.FRAME_INTERPOLATION, 9, 2, FRAMES)
        queries = make_query_set([(9, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        with pytest.raises(PreconditionError):
            build_correspondence(clip, render_scene(scene, FRAMES), spec, ChunkSpec(0, FRAMES), queries, oracle_tracker)


class TestAugment:
    def test_identity(self, disk_clip, oracle_tracker):
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = oracle_tracker.track(disk_clip, queries)
        out_clip, out_tracks = augment(disk_clip, tracks, AugmentSpec.identity())
        assert np.allclose(out_clip.frames, disk_clip.frames, atol=1e-6)
        assert np.array_equal(out_tracks.tracks[0].xy, tracks.tracks[0].xy)
        assert np.array_equal(out_tracks.tracks[0].visible, tracks.tracks[0].visible)

    def test_pure_translation_on_points(self, disk_clip, oracle_tracker):
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = oracle_tracker.track(disk_clip, queries)
        spec = AugmentSpec(translate=((3.0, -2.0), (3.0, -2.0)))
        _, out_tracks = augment(disk_clip, tracks, spec)
        visible = tracks.tracks[0].visible
        assert np.allclose(
            out_tracks.tracks[0].xy[visible],
            tracks.tracks[0].xy[visible] + [3.0, -2.0],
            atol=1e-12,
        )

    def test_points_leaving_frame_invisible(self, disk_clip, oracle_tracker):
        queries = make_query_set([(0, 5.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = oracle_tracker.track(disk_clip, queries)
        spec = AugmentSpec(translate=((-10.0, 0.0), (-10.0, 0.0)))
        _, out_tracks = augment(disk_clip, tracks, spec)
        assert not out_tracks.tracks[0].visible[0]

    def test_quarter_rotation_matches_warped_render(self):
        # Black background so the warped frame's centroid isolates the disk.
        scene = moving_disk_scene()
        scene = type(scene)(scene.width, scene.height, type(scene.background)("solid", (0, 0, 0)), scene.sprites)
        clip = render_scene(scene, FRAMES)
        disk = scene.sprites[0]
        p0 = disk.motion.position(3)
        queries = make_query_set([(3, p0[0], p0[1])], FRAMES, WIDTH, HEIGHT)
        tracks = OracleTracker().track(clip, queries)
        theta = np.pi / 2
        spec = AugmentSpec(rotate=(theta, theta), scale=(0.8, 0.8))
        out_clip, out_tracks = augment(clip, tracks, spec)
        for f in (0, 6, 12):
            if not out_tracks.tracks[0].visible[f]:
                continue
            frame = out_clip.frames[f]
            w = frame.sum(axis=2)
            ys, xs = np.mgrid[0 : frame.shape[0], 0 : frame.shape[1]]
            cx = ((xs + 0.5) * w).sum() / w.sum()
            cy = ((ys + 0.5) * w).sum() / w.sum()
            assert np.hypot(*(out_tracks.tracks[0].xy[f] - [cx, cy])) < 0.5

    def test_render_warp_commutation(self, oracle_tracker, disk_clip):
        queries = make_query_set(
            [(0, 20.0, 32.0), (4, 50.0, 20.0), (8, 70.0, 40.0)], FRAMES, WIDTH, HEIGHT
        )
        tracks = oracle_tracker.track(disk_clip, queries)
        spec = AugmentSpec(translate=((4.0, -3.0), (-2.0, 5.0)), rotate=(-0.08, 0.06), scale=(0.95, 1.08))
        blob = render_tracks(tracks, sigma=10.0)
        warped_blob = warp_clip(blob, spec)
        _, aug_tracks = augment(disk_clip, tracks, spec)
        rendered_after = render_tracks(aug_tracks, sigma=10.0)
        diff = np.abs(warped_blob.frames - rendered_after.frames)
        assert diff.mean() < 0.02

    def test_invalid_scale(self):
        with pytest.raises(PreconditionError):
            AugmentSpec(scale=(0.0, 1.0))


class TestMakeTrainingSample:
    def test_degenerate_identity(self, oracle_tracker):
        scene = moving_disk_scene()
        clip = render_scene(scene, FRAMES)
        cfg = make_config()
        sample = make_training_sample(
            clip, "a disk", cfg, seed=0, tracker=oracle_tracker,
            chunk=ChunkSpec(0, FRAMES),
            cf_spec=CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 0, FRAMES - 1, FRAMES),
            augment_spec=AugmentSpec.identity(),
        )
        assert np.allclose(sample.v_cf.frames, sample.v_target.frames, atol=1e-6)
        assert np.array_equal(sample.b_cf.frames, sample.b_target.frames)

    def test_shapes_and_prompt(self, oracle_tracker):
        scene = moving_disk_scene(frames=30)
        clip = render_scene(scene, 30)
        cfg = make_config()
        sample = make_training_sample(clip, "p", cfg, seed=3, tracker=oracle_tracker)
        for c in (sample.v_cf, sample.b_cf, sample.b_target, sample.v_target):
            assert c.frames.shape == (FRAMES, HEIGHT, WIDTH, 3)
            assert c.tensor.shape == (FRAMES, 3, HEIGHT, WIDTH)
        assert sample.prompt == "p"

    def test_bit_reproducible(self, oracle_tracker):
        scene = moving_disk_scene(frames=30)
        clip = render_scene(scene, 30)
        cfg = make_config().replace(dropout_target=0.3, dropout_conditioning=0.1)
        a = make_training_sample(clip, "p", cfg, seed=11, tracker=oracle_tracker)
        b = make_training_sample(clip, "p", cfg, seed=11, tracker=oracle_tracker)
        assert np.array_equal(a.v_cf.frames, b.v_cf.frames)
        assert np.array_equal(a.b_cf.frames, b.b_cf.frames)
        assert np.array_equal(a.b_target.frames, b.b_target.frames)
        assert np.array_equal(a.v_target.frames, b.v_target.frames)

    def test_interpolation_needs_generator(self, oracle_tracker):
        scene = moving_disk_scene()
        clip = render_scene(scene, FRAMES)
        cfg = make_config()
        with pytest.raises(ConfigError):
            make_training_sample(
                clip, "p", cfg, seed=0, tracker=oracle_tracker,
                cf_spec=CounterfactualSpec(Strategy.FRAME_INTERPOLATION, 0, FRAMES - 1, FRAMES),
            )

    def test_interpolation_end_to_end(self, oracle_tracker):
        scene = moving_disk_scene(frames=30)
        clip = render_scene(scene, 30)
        cfg = make_config().replace(interpolation_ratio=1.0)
        sample = make_training_sample(
            clip, "p", cfg, seed=2, tracker=oracle_tracker, generator=OracleGenerator(),
        )
        assert sample.v_cf.frames.shape == (FRAMES, HEIGHT, WIDTH, 3)
        assert len(sample.t_cf) == len(sample.t_target)

    def test_unusable_configuration_raises(self, oracle_tracker):
        scene = moving_disk_scene(frames=30)
        clip = render_scene(scene, 30)
        cfg = make_config().replace(max_sample_attempts=3)
        with pytest.raises(UnusableSample):
            make_training_sample(
                clip, "p", cfg, seed=0, tracker=oracle_tracker,
                chunk=ChunkSpec(0, FRAMES),
                cf_spec=CounterfactualSpec(Strategy.TEMPORAL_RESAMPLING, 29, 29, FRAMES),
            )
