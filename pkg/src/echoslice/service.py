"""HTTP service exposing decode, slice, landmark, and extraction operations.

Slice responses are pure functions of (volume, query params) and are
cache-safe. Extraction runs as a background job, one per volume at a time;
GET /studies/{id} reports progress. Adapter endpoints come from the app
config; volumes with registered phantom truth fall back to the built-in
oracle adapters, which is how the review UI is exercised end to end
without any neural models.
"""

from __future__ import annotations

import threading

from fastapi import Body, FastAPI, HTTPException, Request, Response

from . import adapters
from .config import AppConfig
from .errors import (AdapterError, CodecError, EchoSliceError, GeometryError,
                     LandmarkError, PlaneOutsideVolumeError, SearchError)
from .geometry import PlaneAD
from .landmarks import locate_landmarks
from .phantom import PhantomTruth, phantom_landmark_provider, phantom_scorer
from .resampler import ViewRenderConfig, render_slice
from .search import extract_standard_views
from .storage import Store, manifest_from_result


def create_app(data_dir, config: AppConfig = AppConfig()) -> FastAPI:
    app = FastAPI(title="echoslice")
    store = Store(data_dir)
    running: dict[str, str] = {}  # volume_id -> study_id of active extraction
    running_lock = threading.Lock()

    def get_volume_or_404(vid: str):
        try:
            return store.get_volume(vid)
        except KeyError:
            raise HTTPException(404, f"unknown volume {vid}")

    def resolve_adapters(vid: str):
        """(landmark_provider, scorer) from config endpoints or phantom truth."""
        provider = scorer = None
        if config.adapters.landmarks:
            provider = adapters.external_landmark_provider(
                config.adapters.landmarks, config.adapters.timeout)
        if config.adapters.scorer:
            scorer = adapters.external_scorer(
                config.adapters.scorer, config.adapters.timeout)
        if provider is None or scorer is None:
            truth_json = store.get_truth(vid)
            if truth_json is not None:
                truth = PhantomTruth.from_json(truth_json)
                provider = provider or phantom_landmark_provider(truth)
                scorer = scorer or phantom_scorer(truth)
        return provider, scorer

    @app.post("/volumes")
    async def upload_volume(request: Request):
        data = await request.body()
        try:
            vid = store.put_volume(data)
        except CodecError as exc:
            raise HTTPException(422, f"invalid volume: {exc}")
        return {"id": vid}

    @app.get("/volumes/{vid}/meta")
    def volume_meta(vid: str):
        return get_volume_or_404(vid).meta.to_dict()

    @app.post("/volumes/{vid}/truth")
    def register_truth(vid: str, truth: dict = Body(...)):
        try:
            PhantomTruth.from_json(truth)  # validate
        except (EchoSliceError, KeyError, ValueError, TypeError) as exc:
            raise HTTPException(422, f"invalid truth: {exc!r}")
        try:
            store.put_truth(vid, truth)
        except KeyError:
            raise HTTPException(404, f"unknown volume {vid}")
        return {"ok": True}

    @app.get("/volumes/{vid}/slice")
    def slice_endpoint(
        vid: str, d: float, phi: float, theta: float, frame: int = 0,
        cmpp: float = 0.05, flip_h: bool = False, flip_v: bool = False,
        rot: float = 0.0,
    ):
        volume = get_volume_or_404(vid)
        if not 0 <= frame < volume.meta.dims[3]:
            raise HTTPException(422, f"frame {frame} out of range")
        try:
            plane = PlaneAD(d, phi, theta)
            cfg = ViewRenderConfig(cm_per_pix=cmpp, flip_h=flip_h,
                                   flip_v=flip_v, rotation_deg=rot)
            image = render_slice(volume, plane, frame, cfg)
        except (GeometryError, PlaneOutsideVolumeError, EchoSliceError) as exc:
            raise HTTPException(422, str(exc))
        return Response(adapters.png_bytes(image.pixels), media_type="image/png")

    @app.get("/volumes/{vid}/landmarks")
    def landmarks_endpoint(vid: str):
        volume = get_volume_or_404(vid)
        provider, _ = resolve_adapters(vid)
        if provider is None:
            raise HTTPException(502, "landmarks: no adapter configured")
        try:
            lm = locate_landmarks(
                volume, provider,
                config=ViewRenderConfig(cm_per_pix=config.landmark_cm_per_pix))
        except (LandmarkError, AdapterError) as exc:
            raise HTTPException(502, f"landmarks: {exc}")
        return lm.to_dict()

    def run_extraction(vid: str, study_id: str):
        volume = store.get_volume(vid)
        provider, scorer = resolve_adapters(vid)

        def progress(stage, done, total):
            def apply(m):
                m["state"] = "running"
                m["progress"] = {"stage": stage, "done": done, "total": total}
            store.mutate_manifest(study_id, apply)

        try:
            result = extract_standard_views(
                volume, provider, scorer, config.extract_config(), progress)

            def apply(m):
                manifest_from_result(m, result, store.study_dir(study_id),
                                     volume.meta.frame_interval_ms)
                m["progress"] = {"stage": "done", "done": 8, "total": 8}
            store.mutate_manifest(study_id, apply)
        except Exception as exc:  # keep partial provenance, surface the stage
            def apply(m):
                m["state"] = "error"
                m["error"] = str(exc)
            store.mutate_manifest(study_id, apply)
        finally:
            with running_lock:
                running.pop(vid, None)

    @app.post("/volumes/{vid}/extract")
    def extract_endpoint(vid: str):
        get_volume_or_404(vid)
        provider, scorer = resolve_adapters(vid)
        if provider is None or scorer is None:
            raise HTTPException(
                502, "extract: no landmark/scorer adapters configured "
                     "and no phantom truth registered")
        with running_lock:
            if vid in running:
                return {"study_id": running[vid], "state": "running"}
            manifest = store.new_study(vid)
            running[vid] = manifest["study_id"]
        thread = threading.Thread(
            target=run_extraction, args=(vid, manifest["study_id"]), daemon=True)
        thread.start()
        return {"study_id": manifest["study_id"], "state": "pending"}

    @app.get("/studies/{study_id}")
    def get_study(study_id: str):
        try:
            return store.load_manifest(study_id)
        except KeyError:
            raise HTTPException(404, f"unknown study {study_id}")

    @app.get("/studies/{study_id}/views/{view}/frames/{frame}")
    def get_view_frame(study_id: str, view: str, frame: int):
        path = store.study_dir(study_id) / view / f"frame_{frame:04d}.png"
        if not path.exists():
            raise HTTPException(404, "no such frame")
        return Response(path.read_bytes(), media_type="image/png")

    @app.post("/studies/{study_id}/views/{view}")
    def update_view(study_id: str, view: str, action: dict = Body(...)):
        try:
            return store.set_view_status(study_id, view, action)
        except KeyError as exc:
            raise HTTPException(404, f"unknown study or view: {exc}")
        except (EchoSliceError, ValueError, TypeError) as exc:
            raise HTTPException(422, str(exc))

    app.state.store = store
    app.state.config = config
    return app
