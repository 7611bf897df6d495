import json
import os
import stat
import sys

import numpy as np
import pytest

from conftest import FRAMES, HEIGHT, WIDTH, make_query_set, moving_disk_scene
from motionforge.errors import ConfigError, PluginError, SchemaError
from motionforge.pipeline_io import (
    PluginEditor,
    PluginGenerator,
    PluginManifest,
    PluginTracker,
    find_plugin,
    load_manifest,
    read_clip,
    read_frame_images,
    run_plugin,
    write_clip,
)
from motionforge.synthetic_oracle import (
    OracleTracker,
    load_scene,
    oracle_generate,
    render_scene,
    save_scene,
)
from motionforge.track_core import VideoClip


def rand_clip(frames=3, height=10, width=12, seed=0):
    rng = np.random.default_rng(seed)
    return VideoClip(rng.random((frames, height, width, 3), dtype=np.float32))


def manifest_for(tmp_path, module, kind, name=None, timeout=120.0, **extra):
    """Manifest invoking one of the built-in plugin modules through the
    current interpreter (PATH-independent)."""
    name = name or module.rsplit(".", 1)[-1]
    payload = {
        "contract_version": 1,
        "name": name,
        "kind": kind,
        "executable": [sys.executable, "-m", module],
        "timeout": timeout,
    }
    payload.update(extra)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(payload))
    return path


class TestFrameDirectory:
    def test_read_write_round_trip_tolerance(self, tmp_path):
        clip = rand_clip()
        d = write_clip(clip, tmp_path / "clip", fps=24.0)
        back = read_clip(d)
        assert back.frames.shape == clip.frames.shape
        assert np.abs(back.frames - clip.frames).max() <= 1.0 / 255.0

    def test_written_files_stable_byte_for_byte(self, tmp_path):
        clip = rand_clip(seed=4)
        d1 = write_clip(clip, tmp_path / "a")
        back = read_clip(d1)
        d2 = write_clip(back, tmp_path / "b")
        for f in range(clip.frame_count):
            b1 = (d1 / f"{f:05d}.png").read_bytes()
            b2 = (d2 / f"{f:05d}.png").read_bytes()
            assert b1 == b2

    def test_meta_contents(self, tmp_path):
        clip = rand_clip(frames=5, height=48, width=64)
        d = write_clip(clip, tmp_path / "clip", fps=30.0)
        meta = json.loads((d / "meta.json").read_text())
        assert meta == {"fps": 30.0, "width": 64, "height": 48, "frames": 5}

    def test_gap_in_numbering_named(self, tmp_path):
        clip = rand_clip(frames=4)
        d = write_clip(clip, tmp_path / "clip")
        (d / "00002.png").unlink()
        with pytest.raises(SchemaError, match="00002"):
            read_clip(d)

    def test_meta_mismatch(self, tmp_path):
        clip = rand_clip(frames=3)
        d = write_clip(clip, tmp_path / "clip")
        meta = json.loads((d / "meta.json").read_text())
        meta["frames"] = 7
        (d / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(SchemaError):
            read_clip(d)

    def test_missing_meta(self, tmp_path):
        (tmp_path / "d").mkdir()
        with pytest.raises(SchemaError, match="meta.json"):
            read_clip(tmp_path / "d")

    def test_scene_sidecar_loads_into_meta(self, tmp_path):
        scene = moving_disk_scene()
        clip = render_scene(scene, 4)
        d = write_clip(clip, tmp_path / "clip")
        save_scene(scene, d / "scene.json")
        back = read_clip(d)
        assert back.meta["scene"] == scene


class TestManifests:
    def test_load_and_fields(self, tmp_path):
        path = manifest_for(tmp_path, "motionforge.plugins.oracle_tracker", "tracker", concurrent=True)
        m = load_manifest(path)
        assert m.kind == "tracker" and m.concurrent
        assert m.executable[0] == sys.executable

    def test_bad_contract_version(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"contract_version": 99, "kind": "tracker", "executable": "x"}))
        with pytest.raises(ConfigError):
            load_manifest(p)

    def test_env_var_discovery(self, tmp_path, monkeypatch):
        manifest_for(tmp_path, "motionforge.plugins.oracle_tracker", "tracker", name="mytracker")
        monkeypatch.setenv("MOTIONFORGE_PLUGIN_PATH", f"/nonexistent{os.pathsep}{tmp_path}")
        m = find_plugin("mytracker")
        assert m.name == "mytracker"
        monkeypatch.setenv("MOTIONFORGE_PLUGIN_PATH", "/nonexistent")
        with pytest.raises(ConfigError):
            find_plugin("mytracker")

    def test_missing_executable(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({
            "contract_version": 1, "kind": "tracker",
            "executable": "/does/not/exist-anywhere", "name": "ghost",
        }))
        (tmp_path / "in").mkdir()
        with pytest.raises(ConfigError):
            run_plugin(load_manifest(p), tmp_path / "in")


class TestOracleTrackerPlugin:
    def test_matches_in_process_oracle_exactly(self, tmp_path):
        scene = moving_disk_scene()
        clip = render_scene(scene, FRAMES)
        queries = make_query_set([(0, 20.0, 32.0), (4, 50.0, 30.0)], FRAMES, WIDTH, HEIGHT)
        manifest = manifest_for(tmp_path, "motionforge.plugins.oracle_tracker", "tracker")
        tracked = PluginTracker(manifest, workdir=tmp_path).track(clip, queries)
        direct = OracleTracker().track(clip, queries)
        for a, b in zip(tracked.tracks, direct.tracks):
            assert np.array_equal(a.xy, b.xy)
            assert np.array_equal(a.visible, b.visible)
            assert a.color == b.color and a.id == b.id

    def test_fails_without_scene(self, tmp_path):
        clip = rand_clip(frames=4, height=HEIGHT, width=WIDTH)
        queries = make_query_set([(0, 5.0, 5.0)], 4, WIDTH, HEIGHT)
        manifest = manifest_for(tmp_path, "motionforge.plugins.oracle_tracker", "tracker")
        with pytest.raises(PluginError) as exc:
            PluginTracker(manifest, workdir=tmp_path).track(clip, queries)
        assert "scene.json" in exc.value.diagnostics["stderr"]


class TestOracleGeneratorPlugin:
    def test_scene_path_matches_oracle_generate(self, tmp_path):
        scene = moving_disk_scene()
        clip = render_scene(scene, FRAMES)
        manifest = manifest_for(tmp_path, "motionforge.plugins.oracle_generator", "generator")
        out = PluginGenerator(manifest, workdir=tmp_path).generate(clip, 0, FRAMES - 1, "p", FRAMES)
        expected, _ = oracle_generate(scene.at_frame(0), scene.at_frame(FRAMES - 1), FRAMES)
        # Round trip through 8-bit PNG: exact after quantizing expected.
        assert np.abs(out.frames - expected.frames).max() <= 1.0 / 255.0
        assert out.meta["scene"] is not None

    def test_crossfade_fallback_anchors_endpoints(self, tmp_path):
        clip = rand_clip(frames=6, height=16, width=16, seed=2)
        manifest = manifest_for(tmp_path, "motionforge.plugins.oracle_generator", "generator")
        out = PluginGenerator(manifest, workdir=tmp_path).generate(clip, 1, 4, "p", 5)
        def q(a):
            return np.round(np.clip(a, 0, 1) * 255).astype(np.uint8)
        assert np.array_equal(q(out.frames[0]), q(clip.frames[1]))
        assert np.array_equal(q(out.frames[-1]), q(clip.frames[4]))


class TestFailureModes:
    def _fake_plugin(self, tmp_path, body, kind="tracker"):
        script = tmp_path / "fake.py"
        script.write_text(body)
        p = tmp_path / "fake.json"
        p.write_text(json.dumps({
            "contract_version": 1, "name": "fake", "kind": kind,
            "executable": [sys.executable, str(script)], "timeout": 10.0,
        }))
        return load_manifest(p)

    def test_nonzero_exit_captures_diagnostics(self, tmp_path):
        m = self._fake_plugin(tmp_path, "import sys; print('boom', file=sys.stderr); sys.exit(3)")
        (tmp_path / "in").mkdir()
        with pytest.raises(PluginError) as exc:
            run_plugin(m, tmp_path / "in", tmp_path / "out")
        assert "boom" in exc.value.diagnostics["stderr"]

    def test_malformed_tracks_output(self, tmp_path):
        body = (
            "import sys, pathlib\n"
            "out = pathlib.Path(sys.argv[2]); out.mkdir(parents=True, exist_ok=True)\n"
            "(out / 'tracks.json').write_text('{\"nope\": 1}')\n"
        )
        m = self._fake_plugin(tmp_path, body)
        (tmp_path / "in").mkdir()
        with pytest.raises(SchemaError):
            run_plugin(m, tmp_path / "in", tmp_path / "out")

    def test_timeout(self, tmp_path):
        script = tmp_path / "slow.py"
        script.write_text("import time; time.sleep(30)")
        p = tmp_path / "slow.json"
        p.write_text(json.dumps({
            "contract_version": 1, "name": "slow", "kind": "tracker",
            "executable": [sys.executable, str(script)], "timeout": 0.5,
        }))
        (tmp_path / "in").mkdir()
        with pytest.raises(PluginError, match="timed out"):
            run_plugin(load_manifest(p), tmp_path / "in", tmp_path / "out")


class TestOracleEditorPlugin:
    def test_renders_target_tracks(self, tmp_path):
        from motionforge.track_core import save_tracks

        scene = moving_disk_scene()
        clip = render_scene(scene, FRAMES)
        queries = make_query_set([(0, 20.0, 32.0)], FRAMES, WIDTH, HEIGHT)
        tracks = OracleTracker().track(clip, queries)
        bundle = tmp_path / "bundle"
        bundle.mkdir()
        save_tracks(tracks, bundle / "tracks_target.json")
        (bundle / "request.json").write_text(json.dumps({
            "contract_version": 1, "frames": FRAMES, "width": WIDTH, "height": HEIGHT,
        }))
        manifest = manifest_for(tmp_path, "motionforge.plugins.oracle_editor", "editor")
        out = PluginEditor(manifest, workdir=tmp_path).generate_edit(bundle)
        assert out.frame_count == FRAMES
        emitted = out.meta["scene"]
        # The emitted scene's sprite follows the target track positions.
        for f in (0, 5, 12):
            assert np.allclose(
                emitted.sprites[0].motion.position(f), tracks.tracks[0].xy[f], atol=1e-9
            )
