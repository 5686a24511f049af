"""Standard-view search: ranges from landmarks, candidate sweep, selection.

Search ranges follow sonographer transition heuristics expressed as
arithmetic on the landmark set (long-axis, four-chamber, and short-axis
planes plus LV length). Candidates are the Cartesian product of inclusive
linear sweeps (default 1 degree for angles, 0.1 cm for distance); each is
rendered at the end-diastole frame and scored by a pluggable view scorer,
with ties broken toward the lexicographically smallest (d, phi, theta).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

from .errors import PlaneOutsideVolumeError, SearchError
from .geometry import PlaneAD
from .landmarks import (LandmarkProvider, LandmarkSet, locate_landmarks,
                        render_a4c)
from .resampler import SliceImage, ViewRenderConfig, render_sequence, render_slice
from .volume import VolumeSequence

VIEWS = ("A2C", "A3C", "A4C", "A5C", "PLAX", "SAX_apex", "SAX_PAP", "SAX_MV")

# Search for these views needs an earlier selection first.
VIEW_DEPENDENCIES = {"A3C": "A2C", "PLAX": "A3C"}

PLAX_ROTATION_DEG = 70.0  # approximate in-plane rotation relating PLAX to A3C

_SWEEP_EPS = 1e-9


@dataclass(frozen=True)
class ParamRange:
    """Inclusive (min, max) per plane parameter; point ranges have min == max."""

    d: tuple[float, float]
    phi: tuple[float, float]
    theta: tuple[float, float]

    def __post_init__(self):
        for name in ("d", "phi", "theta"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise SearchError(f"{name} range min must be <= max")
            object.__setattr__(self, name, (float(lo), float(hi)))

    def to_dict(self) -> dict:
        return {"d": list(self.d), "phi": list(self.phi), "theta": list(self.theta)}


@dataclass(frozen=True)
class StepConfig:
    d_step: float = 0.1      # cm
    angle_step: float = 1.0  # degrees


class ViewScorer(Protocol):
    def __call__(self, images: Sequence[SliceImage], target_view: str) -> list[float]: ...


@dataclass(frozen=True)
class SelectedView:
    view: str
    plane: PlaneAD
    score: float
    render_config: ViewRenderConfig
    frames: tuple[SliceImage, ...] | None = None


@dataclass(frozen=True)
class ExtractionResult:
    views: dict[str, SelectedView]
    landmark_set: LandmarkSet
    ed_frame: int
    provenance: dict[str, dict]


def _point(x: float) -> tuple[float, float]:
    return (x, x)


def _ordered(a: float, b: float) -> tuple[float, float]:
    return (a, b) if a <= b else (b, a)


def build_search_ranges(
    lm: LandmarkSet,
    selected: dict[str, PlaneAD] | None = None,
    views: Sequence[str] | None = None,
    a2c_theta_sign: int = 1,
) -> dict[str, ParamRange]:
    """Search range per view from landmark arithmetic.

    A3C needs the selected A2C plane and PLAX the selected A3C plane; a
    request for either without its dependency raises. a2c_theta_sign flips
    the rotation sense of the A2C/A3C sweeps (anatomy-dependent).
    """
    selected = selected or {}
    views = tuple(views) if views is not None else VIEWS
    sgn = 1 if a2c_theta_sign >= 0 else -1
    la, a4c, sax = lm.plane_la, lm.plane_a4c, lm.plane_sax

    out: dict[str, ParamRange] = {}
    for view in views:
        dep = VIEW_DEPENDENCIES.get(view)
        if dep is not None and dep not in selected:
            raise SearchError(f"sequential dependency unmet: {view} needs {dep}")
        if view == "A2C":
            rng = ParamRange(_point(la.d), _point(la.phi_n),
                             _ordered(la.theta_n, la.theta_n + 30 * sgn))
        elif view == "A3C":
            a2c = selected["A2C"]
            rng = ParamRange(_point(la.d), _point(la.phi_n),
                             _ordered(a2c.theta_n - 60 * sgn, a2c.theta_n - 15 * sgn))
        elif view == "A4C":
            rng = ParamRange(_point(a4c.d), _point(a4c.phi_n), _point(a4c.theta_n))
        elif view == "A5C":
            rng = ParamRange(_point(a4c.d), _point(a4c.phi_n),
                             (a4c.theta_n + 10, a4c.theta_n + 35))
        elif view == "SAX_apex":
            rng = ParamRange((sax.d + 0.10 * lm.l_lv, sax.d + 0.20 * lm.l_lv),
                             _point(sax.phi_n), _point(sax.theta_n))
        elif view == "SAX_PAP":
            rng = ParamRange((sax.d + 0.40 * lm.l_lv, sax.d + 0.50 * lm.l_lv),
                             _point(sax.phi_n), _point(sax.theta_n))
        elif view == "SAX_MV":
            rng = ParamRange((sax.d + 0.75 * lm.l_lv, sax.d + 0.80 * lm.l_lv),
                             _point(sax.phi_n), _point(sax.theta_n))
        elif view == "PLAX":
            a3c = selected["A3C"]
            rng = ParamRange(_point(la.d), _point(a3c.phi_n), _point(a3c.theta_n))
        else:
            raise SearchError(f"unknown view {view!r}")
        out[view] = rng
    return out


def _sweep(lo: float, hi: float, step: float) -> list[float]:
    if hi - lo < _SWEEP_EPS:
        return [lo]
    n = int(math.floor((hi - lo) / step + _SWEEP_EPS)) + 1
    vals = [lo + i * step for i in range(n)]
    if vals[-1] < hi - _SWEEP_EPS:
        vals.append(hi)
    return vals


def enumerate_candidates(prange: ParamRange, steps: StepConfig = StepConfig()) -> list[PlaneAD]:
    """Inclusive sweep over the range, lexicographic in (d, phi, theta)."""
    ds = _sweep(*prange.d, steps.d_step)
    phis = _sweep(*prange.phi, steps.angle_step)
    thetas = _sweep(*prange.theta, steps.angle_step)
    return [PlaneAD(d, phi, theta) for d in ds for phi in phis for theta in thetas]


def select_view(
    volume: VolumeSequence,
    view: str,
    prange: ParamRange,
    scorer: ViewScorer,
    ed_frame: int,
    render_config: ViewRenderConfig = ViewRenderConfig(),
    steps: StepConfig = StepConfig(),
    parallelism: int = 1,
    cache: dict | None = None,
) -> SelectedView:
    """Render every candidate at the ED frame, score, and take the argmax.

    The result is independent of parallelism: scores are reduced in
    candidate (lexicographic) order with a strict comparison.
    """
    candidates = enumerate_candidates(prange, steps)

    def _render(plane: PlaneAD) -> SliceImage | None:
        try:
            return render_slice(volume, plane, ed_frame, render_config)
        except PlaneOutsideVolumeError:
            return None

    if parallelism > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rendered = list(pool.map(_render, candidates))
    else:
        rendered = [_render(p) for p in candidates]

    viable = [(p, img) for p, img in zip(candidates, rendered) if img is not None]
    if not viable:
        raise SearchError(f"no viable candidate for {view}")

    def _key(plane: PlaneAD):
        return (view, round(plane.d, 9), round(plane.phi_n, 9),
                round(plane.theta_n, 9), ed_frame)

    scores: list[float | None] = [None] * len(viable)
    to_score = []
    for idx, (plane, img) in enumerate(viable):
        if cache is not None and _key(plane) in cache:
            scores[idx] = cache[_key(plane)]
        else:
            to_score.append((idx, img))
    if to_score:
        fresh = scorer([img for _, img in to_score], view)
        if len(fresh) != len(to_score):
            raise SearchError(f"scorer returned {len(fresh)} scores for "
                              f"{len(to_score)} candidates ({view})")
        for (idx, _), s in zip(to_score, fresh):
            scores[idx] = float(s)
            if cache is not None:
                cache[_key(viable[idx][0])] = float(s)

    best_idx = 0
    for idx in range(1, len(viable)):
        if scores[idx] > scores[best_idx]:
            best_idx = idx
    plane, _ = viable[best_idx]
    return SelectedView(view, plane, scores[best_idx], render_config)


def end_diastole_frame(
    volume: VolumeSequence,
    strategy: str = "first",
    provider: LandmarkProvider | None = None,
    config: ViewRenderConfig = ViewRenderConfig(),
) -> int:
    """Pick the frame treated as end-diastole.

    Strategies: "first", "fixed:<k>", or "largest_lv_area" (renders the
    A4C slice per frame and takes the largest provider LV mask).
    """
    nt = volume.meta.dims[3]
    if strategy == "first":
        return 0
    if strategy.startswith("fixed:"):
        k = int(strategy.split(":", 1)[1])
        if not 0 <= k < nt:
            raise SearchError(f"fixed ED frame {k} out of range (T={nt})")
        return k
    if strategy == "largest_lv_area":
        if provider is None:
            raise SearchError("largest_lv_area strategy needs a landmark provider")
        best, best_area = 0, -1
        for t in range(nt):
            image, grid = render_a4c(volume, t, config)
            result = provider(image, grid, config)
            if result.lv_mask is None:
                raise SearchError("largest_lv_area strategy needs provider masks")
            area = int(result.lv_mask.sum())
            if area > best_area:
                best, best_area = t, area
        return best
    raise SearchError(f"unknown ED strategy {strategy!r}")


def default_render_configs(cm_per_pix: float = 0.05) -> dict[str, ViewRenderConfig]:
    configs = {view: ViewRenderConfig(cm_per_pix=cm_per_pix) for view in VIEWS}
    configs["PLAX"] = ViewRenderConfig(cm_per_pix=cm_per_pix,
                                       rotation_deg=PLAX_ROTATION_DEG)
    return configs


@dataclass(frozen=True)
class ExtractConfig:
    render_configs: dict[str, ViewRenderConfig] = field(default_factory=default_render_configs)
    steps: StepConfig = StepConfig()
    ed_strategy: str = "first"
    parallelism: int = 1
    a2c_theta_sign: int = 1
    landmark_config: ViewRenderConfig = ViewRenderConfig()
    render_videos: bool = True


def extract_standard_views(
    volume: VolumeSequence,
    landmark_provider: LandmarkProvider,
    scorer: ViewScorer,
    config: ExtractConfig = ExtractConfig(),
    progress: Callable[[str, int, int], None] | None = None,
) -> ExtractionResult:
    """Full pipeline: ED frame, landmarks, then the eight view searches.

    A4C is a point range; A2C feeds A3C which feeds PLAX; A5C and the
    three SAX levels are independent. Full videos are rendered for each
    selected plane unless render_videos is off.
    """
    ed = end_diastole_frame(volume, config.ed_strategy, landmark_provider,
                            config.landmark_config)
    lm = locate_landmarks(volume, landmark_provider, ed, config.landmark_config)

    order = ("A4C", "A2C", "A3C", "PLAX", "A5C", "SAX_apex", "SAX_PAP", "SAX_MV")
    selected: dict[str, PlaneAD] = {}
    views: dict[str, SelectedView] = {}
    provenance: dict[str, dict] = {}
    cache: dict = {}
    for pos, view in enumerate(order):
        if progress is not None:
            progress(view, pos, len(order))
        rng = build_search_ranges(lm, selected, views=[view],
                                  a2c_theta_sign=config.a2c_theta_sign)[view]
        start = time.perf_counter()
        try:
            sel = select_view(volume, view, rng, scorer, ed,
                              config.render_configs[view], config.steps,
                              config.parallelism, cache)
        except SearchError as exc:
            raise SearchError(f"{view}: {exc}") from exc
        provenance[view] = {
            "candidates": len(enumerate_candidates(rng, config.steps)),
            "seconds": time.perf_counter() - start,
            "range": rng.to_dict(),
        }
        selected[view] = sel.plane
        views[view] = sel

    if config.render_videos:
        for view, sel in views.items():
            frames = render_sequence(volume, sel.plane, sel.render_config)
            views[view] = replace(sel, frames=tuple(frames))

    return ExtractionResult(views, lm, ed, provenance)


def edv_disk_summation(lv_length: float, areas: Sequence[float]) -> float:
    """Disk-summation volume: sum over N slices of (length / N) * area_i."""
    if len(areas) == 0:
        raise SearchError("disk summation needs at least one slice area")
    if lv_length <= 0:
        raise SearchError("LV length must be positive")
    if any(a < 0 for a in areas):
        raise SearchError("slice areas must be non-negative")
    n = len(areas)
    return float(sum(lv_length / n * a for a in areas))
