"""Adapters to external landmark and view-scoring models.

Both adapters speak JSON, either over a one-shot subprocess (request on
stdin, response on stdout) or an HTTP POST endpoint. Wire schemas:

  landmarks: {"image_png_base64": str, "cm_per_pix": float}
             -> {"apex": [row, col], "base": [row, col], "mask"?: RLE}
  scorer:    {"images": [png_base64, ...], "target_view": str}
             -> {"probabilities": [float, ...]}

The mask, when present, is run-length encoded as flat [value0, run0,
value1, run1, ...] over row-major pixels starting with the count of zeros.
"""

from __future__ import annotations

import base64
import io
import json
import shlex
import subprocess

import httpx
import numpy as np
from PIL import Image

from .errors import AdapterError
from .landmarks import LandmarkProviderResult

DEFAULT_TIMEOUT = 30.0


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_base64(pixels: np.ndarray) -> str:
    return base64.b64encode(png_bytes(pixels)).decode("ascii")


def decode_rle_mask(rle: list[int], shape: tuple[int, int]) -> np.ndarray:
    flat = np.zeros(shape[0] * shape[1], dtype=bool)
    pos = 0
    value = False
    for run in rle:
        if run < 0 or pos + run > flat.size:
            raise AdapterError("malformed mask RLE")
        flat[pos : pos + run] = value
        pos += run
        value = not value
    return flat.reshape(shape)


def _is_url(target: str) -> bool:
    return target.startswith("http://") or target.startswith("https://")


def _call_endpoint(target: str, payload: dict, timeout: float, stage: str) -> dict:
    """POST to a URL or pipe through a subprocess command; returns parsed JSON."""
    try:
        if _is_url(target):
            resp = httpx.post(target, json=payload, timeout=timeout)
            resp.raise_for_status()
            body = resp.text
        else:
            proc = subprocess.run(
                shlex.split(target),
                input=json.dumps(payload).encode(),
                capture_output=True,
                timeout=timeout,
            )
            if proc.returncode != 0:
                raise AdapterError(
                    f"{stage} adapter exited {proc.returncode}: "
                    f"{proc.stderr.decode(errors='replace')[:200]}")
            body = proc.stdout.decode()
    except subprocess.TimeoutExpired as exc:
        raise AdapterError(f"{stage} unavailable (timeout)") from exc
    except httpx.TimeoutException as exc:
        raise AdapterError(f"{stage} unavailable (timeout)") from exc
    except httpx.HTTPError as exc:
        raise AdapterError(f"{stage} adapter HTTP error: {exc}") from exc
    except OSError as exc:
        raise AdapterError(f"{stage} adapter unreachable: {exc}") from exc
    try:
        return json.loads(body)
    except json.JSONDecodeError as exc:
        raise AdapterError(f"{stage} adapter returned malformed JSON") from exc


def external_landmark_provider(command_or_url: str, timeout: float = DEFAULT_TIMEOUT):
    """LandmarkProvider backed by an external segmentation model."""

    def provider(image, grid, config) -> LandmarkProviderResult:
        payload = {
            "image_png_base64": png_base64(image.pixels),
            "cm_per_pix": image.cm_per_pix,
        }
        resp = _call_endpoint(command_or_url, payload, timeout, "landmarks")
        for key in ("apex", "base"):
            if key not in resp:
                raise AdapterError(f"landmarks response missing {key!r}")
        try:
            apex = (int(resp["apex"][0]), int(resp["apex"][1]))
            base = (int(resp["base"][0]), int(resp["base"][1]))
        except (TypeError, ValueError, IndexError) as exc:
            raise AdapterError("landmarks response pixels malformed") from exc
        h, w = image.pixels.shape
        for name, (r, c) in (("apex", apex), ("base", base)):
            if not (0 <= r < h and 0 <= c < w):
                raise AdapterError(f"landmarks response {name} pixel out of bounds")
        mask = None
        if resp.get("mask") is not None:
            mask = decode_rle_mask(resp["mask"], image.pixels.shape)
        return LandmarkProviderResult(apex, base, mask)

    return provider


def external_scorer(command_or_url: str, timeout: float = DEFAULT_TIMEOUT):
    """ViewScorer backed by an external view classifier; batches per request."""

    def scorer(images, target_view: str) -> list[float]:
        payload = {
            "images": [png_base64(img.pixels) for img in images],
            "target_view": target_view,
        }
        resp = _call_endpoint(command_or_url, payload, timeout, "scorer")
        probs = resp.get("probabilities")
        if not isinstance(probs, list) or len(probs) != len(images):
            raise AdapterError("scorer response probabilities malformed")
        try:
            out = [float(p) for p in probs]
        except (TypeError, ValueError) as exc:
            raise AdapterError("scorer response probabilities malformed") from exc
        if any(not 0.0 <= p <= 1.0 for p in out):
            raise AdapterError("scorer probabilities outside [0, 1]")
        return out

    return scorer
