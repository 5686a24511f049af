"""Filesystem persistence: content-addressed volume blobs + study manifests.

Layout under the data directory:

    volumes/<id>.e3dc         volume blob, id = sha256 prefix of the bytes
    volumes/<id>.truth.json   optional phantom truth for oracle adapters
    studies/<study_id>/manifest.json
    studies/<study_id>/<view>/frame_0000.png ... + view.json sidecar

Manifest writes go through a temp file + os.replace, so a crash mid-write
never leaves a half-written manifest visible.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import threading
import uuid
from pathlib import Path

from .adapters import png_bytes
from .codec import read_e3dc
from .errors import EchoSliceError
from .geometry import plane_ad_to_pn, plane_basis
from .search import ExtractionResult
from .volume import VolumeSequence

VIEW_STATUSES = ("auto", "accepted", "overridden")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "volumes").mkdir(parents=True, exist_ok=True)
        (self.root / "studies").mkdir(parents=True, exist_ok=True)
        self._volumes: dict[str, VolumeSequence] = {}
        self._manifest_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- volumes ----------------------------------------------------------

    def put_volume(self, e3dc_bytes: bytes) -> str:
        volume = read_e3dc(e3dc_bytes)  # validate before persisting
        vid = hashlib.sha256(e3dc_bytes).hexdigest()[:16]
        path = self.root / "volumes" / f"{vid}.e3dc"
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(e3dc_bytes)
            os.replace(tmp, path)
        self._volumes[vid] = volume
        return vid

    def has_volume(self, vid: str) -> bool:
        return vid in self._volumes or (self.root / "volumes" / f"{vid}.e3dc").exists()

    def get_volume(self, vid: str) -> VolumeSequence:
        if vid not in self._volumes:
            path = self.root / "volumes" / f"{vid}.e3dc"
            if not path.exists():
                raise KeyError(vid)
            self._volumes[vid] = read_e3dc(path.read_bytes())
        return self._volumes[vid]

    def put_truth(self, vid: str, truth_json: dict) -> None:
        if not self.has_volume(vid):
            raise KeyError(vid)
        path = self.root / "volumes" / f"{vid}.truth.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(truth_json))
        os.replace(tmp, path)

    def get_truth(self, vid: str) -> dict | None:
        path = self.root / "volumes" / f"{vid}.truth.json"
        return json.loads(path.read_text()) if path.exists() else None

    # -- studies ----------------------------------------------------------

    def _manifest_lock(self, study_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._manifest_locks.setdefault(study_id, threading.Lock())

    def _manifest_path(self, study_id: str) -> Path:
        return self.root / "studies" / study_id / "manifest.json"

    def study_dir(self, study_id: str) -> Path:
        return self.root / "studies" / study_id

    def new_study(self, volume_id: str) -> dict:
        study_id = uuid.uuid4().hex[:12]
        manifest = {
            "study_id": study_id,
            "volume_id": volume_id,
            "created_at": _now(),
            "updated_at": _now(),
            "state": "pending",
            "progress": {"stage": None, "done": 0, "total": 8},
            "error": None,
            "ed_frame": None,
            "landmark_set": None,
            "views": {},
            "provenance": {},
        }
        self.study_dir(study_id).mkdir(parents=True, exist_ok=True)
        self.save_manifest(manifest)
        return manifest

    def save_manifest(self, manifest: dict) -> None:
        manifest["updated_at"] = _now()
        path = self._manifest_path(manifest["study_id"])
        tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
        tmp.write_text(json.dumps(manifest, indent=2))
        os.replace(tmp, path)

    def load_manifest(self, study_id: str) -> dict:
        path = self._manifest_path(study_id)
        if not path.exists():
            raise KeyError(study_id)
        return json.loads(path.read_text())

    def mutate_manifest(self, study_id: str, fn) -> dict:
        """Apply fn(manifest) under the study's lock and persist atomically."""
        with self._manifest_lock(study_id):
            manifest = self.load_manifest(study_id)
            fn(manifest)
            self.save_manifest(manifest)
            return manifest

    def set_view_status(self, study_id: str, view: str, action: dict) -> dict:
        """accept -> status accepted; override {d, phi, theta} -> overridden
        with the new plane persisted. Only auto -> accepted/overridden."""

        def apply(manifest):
            if view not in manifest["views"]:
                raise KeyError(view)
            entry = manifest["views"][view]
            if "accept" in action:
                entry["status"] = "accepted"
            elif "override" in action:
                plane = action["override"]
                entry["status"] = "overridden"
                entry["plane"] = {
                    "d": float(plane["d"]),
                    "phi_n": float(plane["phi"]),
                    "theta_n": float(plane["theta"]),
                }
            else:
                raise EchoSliceError("action must be accept or override")

        return self.mutate_manifest(study_id, apply)


def write_view_artifacts(
    view_dir: Path, selected, frame_interval_ms: float | None
) -> list[str]:
    """PNG frame sequence + JSON sidecar for one selected view; returns
    artifact paths relative to the view directory's parent."""
    view_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(selected.frames or ()):
        name = f"frame_{i:04d}.png"
        (view_dir / name).write_bytes(png_bytes(frame.pixels))
        paths.append(f"{view_dir.name}/{name}")
    pn = plane_ad_to_pn(selected.plane)
    basis = plane_basis(pn)
    sidecar = {
        "plane": {
            "angle_distance": selected.plane.to_json(),
            "point_normal": pn.to_json(),
            "basis": basis.to_json(),
        },
        "cm_per_pix": selected.render_config.cm_per_pix,
        "flip_h": selected.render_config.flip_h,
        "flip_v": selected.render_config.flip_v,
        "rotation_deg": selected.render_config.rotation_deg,
        "frame_interval_ms": frame_interval_ms,
    }
    (view_dir / "view.json").write_text(json.dumps(sidecar, indent=2))
    paths.append(f"{view_dir.name}/view.json")
    return paths


def manifest_from_result(
    manifest: dict, result: ExtractionResult, study_dir: Path | None = None,
    frame_interval_ms: float | None = None,
) -> dict:
    manifest["state"] = "done"
    manifest["ed_frame"] = result.ed_frame
    manifest["landmark_set"] = result.landmark_set.to_dict()
    manifest["provenance"] = result.provenance
    manifest["views"] = {}
    for view, sel in result.views.items():
        artifacts = []
        if study_dir is not None and sel.frames:
            artifacts = write_view_artifacts(study_dir / view, sel, frame_interval_ms)
        manifest["views"][view] = {
            "plane": sel.plane.to_json(),
            "score": sel.score,
            "render_config": sel.render_config.to_dict(),
            "status": "auto",
            "artifacts": artifacts,
        }
    return manifest
