"""Command-line entry points.

Everything here is thin orchestration over the library; all commands
are bit-reproducible given fixed seeds and inputs.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import camera as camera_mod
from . import counterfactual, evalproto
from .config import load_config
from .errors import InsufficientSources, MotionForgeError
from .pipeline_io import (
    PluginGenerator,
    PluginTracker,
    plugin_metric,
    read_clip,
    write_clip,
)
from .rasterizer import render_tracks
from .synthetic_oracle import load_scene, oracle_track, render_scene
from .track_core import (
    Track,
    TrackSet,
    load_tracks,
    save_tracks,
)


@click.group()
def main():
    """Motion-edit authoring and counterfactual-data toolkit."""


def _query_set(queries_path: Path, clip, seed: int) -> TrackSet:
    from .palette import distinct_colors

    queries = json.loads(Path(queries_path).read_text())
    colors = distinct_colors(len(queries), seed=seed)
    tracks = []
    for i, q in enumerate(queries):
        f, x, y = int(q["f"]), float(q["x"]), float(q["y"])
        xy = np.tile([x, y], (clip.frame_count, 1))
        vis = np.zeros(clip.frame_count, dtype=bool)
        vis[f] = True
        tracks.append(Track(id=i, color=colors[i], init_frame=f, xy=xy, visible=vis))
    return TrackSet(tuple(tracks), clip.frame_count, clip.width, clip.height)


@main.command()
@click.argument("clip_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--queries", required=True, type=click.Path(exists=True), help="queries.json with [{f, x, y}, ...]")
@click.option("--tracker", required=True, help="tracker plugin manifest path or name")
@click.option("--out", default="tracks.json", show_default=True)
@click.option("--seed", default=0, show_default=True, help="seed for query color assignment")
def track(clip_dir, queries, tracker, out, seed):
    """Track query points through a clip with a tracker plugin."""
    clip = read_clip(clip_dir)
    qs = _query_set(Path(queries), clip, seed)
    result = PluginTracker(tracker).track(clip, qs)
    save_tracks(result, out)
    click.echo(f"wrote {len(result)} tracks to {out}")


@main.command()
@click.argument("tracks_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", default=10.0, show_default=True)
@click.option("--out", default="blobs", show_default=True)
@click.option("--fps", default=16.0, show_default=True)
def rasterize(tracks_path, sigma, out, fps):
    """Render a .tracks.json file into a blob-video frame directory."""
    ts = load_tracks(tracks_path)
    clip = render_tracks(ts, sigma=sigma)
    write_clip(clip, out, fps=fps)
    click.echo(f"rendered {ts.frame_count} frames to {out}")


@main.command("make-dataset")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True), help="RunConfig TOML")
@click.option("--workers", default=None, type=int, help="override config worker count")
def make_dataset(manifest_path, out, config_path, workers):
    """Generate counterfactual training samples.

    The manifest is JSON: {"samples": [{"clip_dir", "prompt", "seed"}...]}.
    """
    cfg = load_config(config_path, workers=workers)
    if cfg.tracker_plugin is None:
        raise click.ClickException("config must set tracker_plugin")
    manifest = json.loads(Path(manifest_path).read_text())
    samples = manifest["samples"]
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = PluginTracker(cfg.tracker_plugin)
    generator = PluginGenerator(cfg.generator_plugin) if cfg.generator_plugin else None

    def build(i_entry):
        i, entry = i_entry
        clip = read_clip(entry["clip_dir"])
        sample = counterfactual.make_training_sample(
            clip,
            prompt=entry.get("prompt", ""),
            config=cfg,
            seed=int(entry.get("seed", cfg.seed + i)),
            tracker=tracker,
            generator=generator,
        )
        sdir = out_dir / f"sample-{i:05d}"
        write_clip(sample.v_cf, sdir / "v_cf", fps=cfg.fps)
        write_clip(sample.b_cf, sdir / "b_cf", fps=cfg.fps)
        write_clip(sample.b_target, sdir / "b_target", fps=cfg.fps)
        write_clip(sample.v_target, sdir / "v_target", fps=cfg.fps)
        (sdir / "prompt.txt").write_text(sample.prompt)
        save_tracks(sample.t_cf, sdir / "tracks_cf.json")
        save_tracks(sample.t_target, sdir / "tracks_target.json")
        (sdir / "sample.json").write_text(json.dumps({
            "clip_dir": str(entry["clip_dir"]),
            "seed": int(entry.get("seed", cfg.seed + i)),
            "prompt": entry.get("prompt", ""),
        }, sort_keys=True))
        return i

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(build, enumerate(samples)))
    else:
        for item in enumerate(samples):
            build(item)
    click.echo(f"wrote {len(samples)} samples to {out}")


@main.command("make-eval")
@click.argument("sources_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--n", "n_target", default=100, show_default=True)
@click.option("--tracker", required=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--n-points", default=evalproto.DEFAULT_N_POINTS, show_default=True)
@click.option("--min-occluded", default=evalproto.DEFAULT_MIN_OCCLUDED, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--fps", default=16.0, show_default=True)
def make_eval(sources_dir, n_target, tracker, out, n_points, min_occluded, seed, fps):
    """Build the split/reverse evaluation dataset from a directory of
    frame-directory clips."""
    src_dirs = sorted(p for p in Path(sources_dir).iterdir() if (p / "meta.json").exists())
    sources = [(p.name, read_clip(p)) for p in src_dirs]
    tr = PluginTracker(tracker)
    try:
        pairs = evalproto.build_eval_dataset(
            sources, tr, n_target=n_target, n_points=n_points,
            min_occluded=min_occluded, seed=seed,
        )
        shortfall = 0
    except InsufficientSources as e:
        pairs, shortfall = e.pairs, e.shortfall
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, pair in enumerate(pairs):
        pdir = out_dir / f"pair-{i:03d}"
        write_clip(pair.v0, pdir / "v0", fps=fps)
        write_clip(pair.v1, pdir / "v1", fps=fps)
        save_tracks(pair.tracks, pdir / "tracks.json")
        (pdir / "pair.json").write_text(json.dumps({
            "source_id": pair.provenance.source_id,
            "split_frame": pair.provenance.split_frame,
        }))
    (out_dir / "dataset.json").write_text(json.dumps({
        "pairs": len(pairs), "requested": n_target, "shortfall": shortfall,
    }))
    if shortfall:
        raise click.ClickException(
            f"only {len(pairs)} of {n_target} pairs passed the occlusion filter "
            f"(shortfall {shortfall}); partial dataset written to {out}"
        )
    click.echo(f"wrote {len(pairs)} eval pairs to {out}")


@main.command("camera-edit")
@click.argument("clip_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--pointmaps", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tracks", "tracks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="tracks_edited.json", show_default=True)
def camera_edit(clip_dir, pointmaps, cameras, tracks_path, out):
    """Re-project a clip's tracks through user cameras."""
    clip = read_clip(clip_dir)
    source = load_tracks(tracks_path)
    if (source.frame_count, source.height, source.width) != (
        clip.frame_count, clip.height, clip.width,
    ):
        raise click.ClickException("tracks do not match the clip dimensions")
    pm = camera_mod.load_pointmap_dir(pointmaps)
    cams = camera_mod.load_cameras(cameras)
    edited = camera_mod.camera_edit_tracks(source, pm, cams)
    save_tracks(edited, out)
    click.echo(f"wrote edited tracks to {out}")


@main.command()
@click.argument("pred_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("target_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--lpips-plugin", help="optional metric plugin manifest or name")
def metrics(pred_dir, target_dir, lpips_plugin):
    """Frame-wise L2 and SSIM between two frame directories."""
    pred = read_clip(pred_dir)
    target = read_clip(target_dir)
    result = {
        "l2": evalproto.l2_metric(pred, target),
        "ssim": evalproto.ssim_metric(pred, target),
    }
    if lpips_plugin:
        result["lpips"] = plugin_metric(lpips_plugin, pred, target)
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.option("--port", default=8712, show_default=True)
@click.option("--root", default="./sessions", show_default=True)
@click.option("--tracker", help="tracker plugin manifest or name")
@click.option("--editor", help="video-model plugin manifest or name")
def serve(port, root, tracker, editor):
    """Run the local editing service."""
    import uvicorn

    from .edit_service import EditService, create_app
    from .pipeline_io import PluginEditor

    service = EditService(
        root,
        tracker=PluginTracker(tracker) if tracker else None,
        editor=PluginEditor(editor).generate_edit if editor else None,
    )
    uvicorn.run(create_app(service), host="127.0.0.1", port=port)


@main.command()
@click.argument("scene_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--frames", default=49, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--queries", type=click.Path(exists=True), help="also oracle-track these queries")
@click.option("--tracks-out", default="tracks.json", show_default=True)
@click.option("--fps", default=16.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth(scene_path, frames, out, queries, tracks_out, fps, seed):
    """Render a synthetic scene to a frame directory (with scene.json
    sidecar), optionally emitting exact oracle tracks for queries."""
    from .synthetic_oracle import save_scene

    spec = load_scene(scene_path)
    clip = render_scene(spec, frames)
    write_clip(clip, out, fps=fps)
    save_scene(spec, Path(out) / "scene.json")
    if queries:
        qs = _query_set(Path(queries), clip, seed)
        save_tracks(oracle_track(spec, qs, frame_count=frames), tracks_out)
        click.echo(f"wrote oracle tracks to {tracks_out}")
    click.echo(f"rendered {frames} frames to {out}")


def run_main():  # pragma: no cover
    try:
        main()
    except MotionForgeError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    run_main()
