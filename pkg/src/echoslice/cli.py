"""Command-line interface.

Exit codes: 0 ok, 2 input error, 3 adapter failure, 4 internal error.
"""

from __future__ import annotations

import json
import statistics
import sys
import time
from pathlib import Path

import click

from . import adapters, codec, kernels
from .config import load_config
from .errors import AdapterError, EchoSliceError
from .geometry import PlaneAD
from .phantom import (PhantomSpec, PhantomTruth, generate_phantom,
                      phantom_landmark_provider, phantom_scorer,
                      standard_phantom)
from .resampler import ViewRenderConfig, plane_grid, render_slice
from .search import extract_standard_views
from .storage import manifest_from_result


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        fn()
    except AdapterError as exc:
        _fail(3, str(exc))
    except (EchoSliceError, OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(2, str(exc))
    except Exception as exc:  # pragma: no cover
        _fail(4, f"internal: {exc!r}")


def _load_volume(path: str, config):
    data = Path(path).read_bytes()
    if data[:4] == codec.E3DC_MAGIC:
        return codec.read_e3dc(data)
    if config.tags is None:
        raise EchoSliceError(
            "input is not E3DC; DICOM decoding needs a config file with a [tags] section")
    stream, meta = codec.parse_dicom_private_payload(data, config.tags)
    return codec.decode_volume(stream, meta)


@click.group()
def main():
    """Slice 3D echocardiography volumes and extract standard views."""


@main.command()
@click.argument("src")
@click.option("--out", required=True, help="output E3DC path")
@click.option("--config", "config_path", default=None, help="TOML/JSON config with tag addresses")
def decode(src, out, config_path):
    """Decode a DICOM or E3DC file into a normalized E3DC container."""

    def go():
        volume = _load_volume(src, load_config(config_path))
        Path(out).write_bytes(codec.write_e3dc(volume))
        click.echo(json.dumps(volume.meta.to_dict(), indent=2))

    _run(go)


@main.command("slice")
@click.argument("src")
@click.option("--d", type=float, required=True)
@click.option("--phi", type=float, required=True)
@click.option("--theta", type=float, required=True)
@click.option("--frame", type=int, default=0)
@click.option("--cmpp", type=float, default=0.05)
@click.option("--flip-h", is_flag=True)
@click.option("--flip-v", is_flag=True)
@click.option("--rot", type=float, default=0.0)
@click.option("--out", required=True, help="output PNG path")
@click.option("--config", "config_path", default=None)
def slice_cmd(src, d, phi, theta, frame, cmpp, flip_h, flip_v, rot, out, config_path):
    """Render a single slice to PNG."""

    def go():
        volume = _load_volume(src, load_config(config_path))
        cfg = ViewRenderConfig(cm_per_pix=cmpp, flip_h=flip_h, flip_v=flip_v,
                               rotation_deg=rot)
        image = render_slice(volume, PlaneAD(d, phi, theta), frame, cfg)
        Path(out).write_bytes(adapters.png_bytes(image.pixels))

    _run(go)


@main.command()
@click.argument("src")
@click.option("--scorer", "scorer_target", default=None, help="scorer command or URL")
@click.option("--landmarks", "landmarks_target", default=None, help="landmark command or URL")
@click.option("--truth", "truth_path", default=None,
              help="phantom truth JSON; uses the built-in oracle adapters")
@click.option("--out", "out_dir", required=True)
@click.option("--config", "config_path", default=None)
def extract(src, scorer_target, landmarks_target, truth_path, out_dir, config_path):
    """Run the full 8-view extraction; writes a study manifest + PNG sequences."""

    def go():
        config = load_config(config_path)
        volume = _load_volume(src, config)
        if truth_path:
            truth = PhantomTruth.from_json(json.loads(Path(truth_path).read_text()))
            provider = phantom_landmark_provider(truth)
            scorer = phantom_scorer(truth)
        else:
            if not scorer_target or not landmarks_target:
                raise EchoSliceError("provide --truth, or both --scorer and --landmarks")
            provider = adapters.external_landmark_provider(
                landmarks_target, config.adapters.timeout)
            scorer = adapters.external_scorer(scorer_target, config.adapters.timeout)

        result = extract_standard_views(volume, provider, scorer,
                                        config.extract_config())
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "study_id": out.name, "volume_id": str(src),
            "state": "pending", "views": {}, "provenance": {},
        }
        manifest_from_result(manifest, result, out, volume.meta.frame_interval_ms)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
        for view, sel in sorted(result.views.items()):
            click.echo(f"{view:8s} d={sel.plane.d:7.3f} phi={sel.plane.phi_n:8.3f} "
                       f"theta={sel.plane.theta_n:8.3f} score={sel.score:.4f}")

    _run(go)


@main.command()
@click.option("--spec", "spec_path", default=None,
              help="phantom spec JSON; omit for a default randomized phantom")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, help="output E3DC path")
@click.option("--truth", "truth_out", default=None, help="write truth JSON here")
def phantom(spec_path, seed, out, truth_out):
    """Generate a synthetic phantom volume (and its analytic truth)."""

    def go():
        if spec_path:
            spec = PhantomSpec.from_json(json.loads(Path(spec_path).read_text()))
        else:
            spec = standard_phantom(seed=seed)
        volume, truth = generate_phantom(spec)
        Path(out).write_bytes(codec.write_e3dc(volume))
        click.echo(json.dumps(volume.meta.to_dict(), indent=2))
        if truth_out:
            if truth is None:
                raise EchoSliceError("phantom has no LV, no truth to write")
            Path(truth_out).write_text(json.dumps(truth.to_json(), indent=2))

    _run(go)


@main.command()
@click.argument("src")
@click.option("--config", "config_path", default=None)
@click.option("--slices", type=int, default=20, help="renders per backend")
def bench(src, config_path, slices):
    """Benchmark slice rendering (compiled vs pure kernels) and extraction."""

    def go():
        volume = _load_volume(src, load_config(config_path))
        plane = PlaneAD(0.0, 0.0, 90.0)
        grid = plane_grid(volume, plane, 1.0)
        extent = max(grid.extent.s_max - grid.extent.s_min,
                     grid.extent.t_max - grid.extent.t_min)
        cmpp = extent / 512.0
        cfg = ViewRenderConfig(cm_per_pix=cmpp)
        for backend in kernels.available_backends():
            times = []
            for _ in range(slices):
                t0 = time.perf_counter()
                render_slice(volume, plane, 0, cfg, backend=backend)
                times.append(time.perf_counter() - t0)
            med = statistics.median(times)
            click.echo(f"{backend:7s} 512x512 render: median {med * 1e3:7.2f} ms "
                       f"({1.0 / med:6.1f} slices/s)")

        spec = standard_phantom(seed=1)
        pvol, truth = generate_phantom(spec)
        t0 = time.perf_counter()
        extract_standard_views(pvol, phantom_landmark_provider(truth),
                               lambda imgs, view: [0.5] * len(imgs))
        click.echo(f"8-view extraction (stub scorer): {time.perf_counter() - t0:6.2f} s")

    _run(go)


@main.command()
@click.option("--data-dir", required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--config", "config_path", default=None)
def serve(data_dir, host, port, config_path):
    """Run the HTTP service backing the review UI."""

    def go():
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(data_dir, load_config(config_path)),
                    host=host, port=port)

    _run(go)


if __name__ == "__main__":
    main()
