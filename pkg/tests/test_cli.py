import json
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import FRAMES, HEIGHT, WIDTH, make_query_set, moving_disk_scene
from motionforge.cli import main
from motionforge.config import load_config
from motionforge.errors import ConfigError
from motionforge.pipeline_io import read_clip, write_clip
from motionforge.synthetic_oracle import (
    OracleTracker,
    render_scene,
    save_scene,
    scene_to_dict,
)
from motionforge.track_core import load_tracks


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scene_dir(tmp_path):
    scene = moving_disk_scene()
    clip = render_scene(scene, FRAMES)
    d = write_clip(clip, tmp_path / "clip")
    save_scene(scene, d / "scene.json")
    return d, scene


def tracker_manifest(tmp_path):
    p = tmp_path / "tracker.json"
    p.write_text(json.dumps({
        "contract_version": 1, "name": "oracle-tracker", "kind": "tracker",
        "executable": [sys.executable, "-m", "motionforge.plugins.oracle_tracker"],
        "timeout": 300.0,
    }))
    return p


class TestTrackCommand:
    def test_track_writes_tracks(self, runner, scene_dir, tmp_path):
        d, scene = scene_dir
        queries = tmp_path / "q.json"
        queries.write_text(json.dumps([{"f": 0, "x": 20.0, "y": 32.0}]))
        out = tmp_path / "tracks.json"
        result = runner.invoke(main, [
            "track", str(d), "--queries", str(queries),
            "--tracker", str(tracker_manifest(tmp_path)), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        ts = load_tracks(out)
        assert len(ts) == 1 and ts.frame_count == FRAMES


class TestRasterizeCommand:
    def test_rasterize(self, runner, scene_dir, tmp_path):
        d, scene = scene_dir
        clip = read_clip(d)
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = OracleTracker().track(clip, queries)
        from motionforge.track_core import save_tracks

        tpath = tmp_path / "t.json"
        save_tracks(tracks, tpath)
        out = tmp_path / "blobs"
        result = runner.invoke(main, ["rasterize", str(tpath), "--sigma", "6", "--out", str(out)])
        assert result.exit_code == 0, result.output
        blob = read_clip(out)
        assert blob.frames.shape == (FRAMES, HEIGHT, WIDTH, 3)
        assert blob.frames.max() > 0.5


class TestSynthCommand:
    def test_synth_renders_and_tracks(self, runner, tmp_path):
        scene = moving_disk_scene()
        spath = tmp_path / "scene.json"
        spath.write_text(json.dumps(scene_to_dict(scene)))
        qpath = tmp_path / "q.json"
        qpath.write_text(json.dumps([{"f": 0, "x": 16.0, "y": 32.0}]))
        out = tmp_path / "rendered"
        tout = tmp_path / "oracle_tracks.json"
        result = runner.invoke(main, [
            "synth", str(spath), "--frames", str(FRAMES), "--out", str(out),
            "--queries", str(qpath), "--tracks-out", str(tout),
        ])
        assert result.exit_code == 0, result.output
        clip = read_clip(out)
        assert clip.frame_count == FRAMES
        assert clip.meta["scene"] == scene
        assert load_tracks(tout).frame_count == FRAMES


class TestMetricsCommand:
    def test_metrics_json(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        from motionforge.track_core import VideoClip

        a = VideoClip(rng.random((2, 16, 16, 3), dtype=np.float32))
        da = write_clip(a, tmp_path / "a")
        db = write_clip(a, tmp_path / "b")
        result = runner.invoke(main, ["metrics", str(da), str(db)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["l2"] == 0.0
        assert payload["ssim"] == pytest.approx(1.0, abs=1e-9)


class TestMakeDataset:
    def test_make_dataset(self, runner, scene_dir, tmp_path):
        d, scene = scene_dir
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            "[pipeline]\n"
            f"frames = {FRAMES}\nwidth = {WIDTH}\nheight = {HEIGHT}\n"
            "dropout_target = 0.0\ndropout_conditioning = 0.0\n"
            "interpolation_ratio = 0.0\naugment_translate = 4.0\n"
            "[plugins]\n"
            f'tracker_plugin = "{tracker_manifest(tmp_path)}"\n'
        )
        manifest = tmp_path / "dataset.json"
        manifest.write_text(json.dumps({
            "samples": [{"clip_dir": str(d), "prompt": "disk", "seed": 4}],
        }))
        out = tmp_path / "dataset"
        result = runner.invoke(main, [
            "make-dataset", str(manifest), "--out", str(out), "--config", str(cfg),
        ])
        assert result.exit_code == 0, result.output
        sample = out / "sample-00000"
        for sub in ("v_cf", "b_cf", "b_target", "v_target"):
            clip = read_clip(sample / sub)
            assert clip.frames.shape == (FRAMES, HEIGHT, WIDTH, 3)
        assert (sample / "prompt.txt").read_text() == "disk"


class TestMakeEval:
    def test_make_eval_partial(self, runner, tmp_path):
        from motionforge.synthetic_oracle import Background, MotionPath, SceneSpec, Sprite

        sources = tmp_path / "sources"
        passing = SceneSpec(
            48, 48, Background("solid", (0.1, 0.1, 0.3)),
            (Sprite(id=0, shape="disk", z=1, color=(0.9, 0.9, 0.2),
                    motion=MotionPath.static(24.0, 24.0), size=((0, 20.0),), visible=(7, 13)),),
        )
        failing = SceneSpec(48, 48, Background("solid", (0.2, 0.2, 0.2)))
        for name, spec in (("a", passing), ("b", failing)):
            clip = render_scene(spec, 21)
            sd = write_clip(clip, sources / name)
            save_scene(spec, sd / "scene.json")
        out = tmp_path / "eval"
        result = runner.invoke(main, [
            "make-eval", str(sources), "--n", "1",
            "--tracker", str(tracker_manifest(tmp_path)), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        pair = out / "pair-000"
        v0, v1 = read_clip(pair / "v0"), read_clip(pair / "v1")
        assert np.array_equal(v0.frames[-1], v1.frames[0])
        assert json.loads((pair / "pair.json").read_text())["source_id"] == "a"

    def test_make_eval_shortfall_errors(self, runner, tmp_path):
        from motionforge.synthetic_oracle import Background, SceneSpec

        sources = tmp_path / "sources"
        clip = render_scene(SceneSpec(48, 48, Background("solid", (0.2, 0.2, 0.2))), 21)
        write_clip(clip, sources / "only")
        save_scene(SceneSpec(48, 48, Background("solid", (0.2, 0.2, 0.2))), sources / "only" / "scene.json")
        result = runner.invoke(main, [
            "make-eval", str(sources), "--n", "3",
            "--tracker", str(tracker_manifest(tmp_path)), "--out", str(tmp_path / "eval"),
        ])
        assert result.exit_code != 0
        assert "shortfall" in result.output


class TestCameraEditCommand:
    def test_camera_edit(self, runner, scene_dir, tmp_path):
        import motionforge.camera as camera_mod
        from motionforge.track_core import save_tracks

        d, scene = scene_dir
        clip = read_clip(d)
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = OracleTracker().track(clip, queries)
        tpath = tmp_path / "t.json"
        save_tracks(tracks, tpath)

        k = camera_mod.CameraIntrinsics(80.0, 80.0, WIDTH / 2, HEIGHT / 2)
        pmdir = tmp_path / "pointmaps"
        pmdir.mkdir()
        ys, xs = np.mgrid[0:HEIGHT, 0:WIDTH]
        depth = 4.0
        pts = np.stack([
            (xs + 0.5 - k.cx) / k.fx * depth,
            (ys + 0.5 - k.cy) / k.fy * depth,
            np.full((HEIGHT, WIDTH), depth),
        ], axis=2)
        for f in range(FRAMES):
            camera_mod.save_pointmap_frame(pmdir / f"{f:05d}.pmap", pts, np.ones((HEIGHT, WIDTH), bool))
        cams = [(k, camera_mod.CameraPose.identity())] * FRAMES
        cpath = tmp_path / "cams.json"
        camera_mod.save_cameras(cpath, cams)

        out = tmp_path / "edited.json"
        result = runner.invoke(main, [
            "camera-edit", str(d), "--pointmaps", str(pmdir),
            "--cameras", str(cpath), "--tracks", str(tpath), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        edited = load_tracks(out)
        assert np.allclose(edited.tracks[0].xy, tracks.tracks[0].xy, atol=1e-6)


class TestConfig:
    def test_toml_sections_and_overrides(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(
            "[pipeline]\nframes = 13\nwidth = 96\nheight = 64\nsigma = 8.0\n"
            "[plugins]\ntracker_plugin = \"x.json\"\n"
        )
        cfg = load_config(p, sigma=9.0)
        assert cfg.frames == 13 and cfg.sigma == 9.0
        assert cfg.tracker_plugin == "x.json"

    def test_invalid_geometry(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("frames = 12\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_unknown_keys(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("nonsense = 3\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_defaults_match_production_numbers(self):
        cfg = load_config()
        assert (cfg.frames, cfg.width, cfg.height) == (49, 720, 480)
        assert cfg.sigma == 10.0 and cfg.cap == 20 and cfg.jitter == 2.0
        assert cfg.dropout_target > cfg.dropout_conditioning
