/** Explorer state: the full slider/scrubber configuration, URL-encodable
 * so any plane is a shareable bookmark. */

import type { PlaneAD, SliceParams, VolumeMeta } from "./api.js";

export interface ExplorerState {
  volumeId: string;
  d: number;
  phi: number;
  theta: number;
  frame: number;
  cmpp: number;
  flipH: boolean;
  flipV: boolean;
  rot: number;
  preset: string | null;
}

export interface SliderBounds {
  d: { min: number; max: number; step: number };
  phi: { min: number; max: number; step: number };
  theta: { min: number; max: number; step: number };
  frame: { min: number; max: number; step: number };
}

/** Slider ranges derived from the volume's geometry: the signed plane
 * distance can never exceed the outer radius, angles cover the full circle
 * (sweeps may pass the pole), and the scrubber covers the frame count. */
export function sliderBounds(meta: VolumeMeta): SliderBounds {
  const r = meta.bounds.rho_max;
  return {
    d: { min: -r, max: r, step: 0.1 },
    phi: { min: -180, max: 180, step: 1 },
    theta: { min: -180, max: 180, step: 1 },
    frame: { min: 0, max: meta.dims[3] - 1, step: 1 },
  };
}

export function defaultState(volumeId: string): ExplorerState {
  // the canonical four-chamber orientation
  return {
    volumeId,
    d: 0,
    phi: 0,
    theta: 90,
    frame: 0,
    cmpp: 0.05,
    flipH: false,
    flipV: false,
    rot: 0,
    preset: null,
  };
}

export function clampState(state: ExplorerState, bounds: SliderBounds): ExplorerState {
  const clamp = (v: number, b: { min: number; max: number }) =>
    Math.min(Math.max(v, b.min), b.max);
  return {
    ...state,
    d: clamp(state.d, bounds.d),
    phi: clamp(state.phi, bounds.phi),
    theta: clamp(state.theta, bounds.theta),
    frame: Math.round(clamp(state.frame, bounds.frame)),
  };
}

export function stateToSliceParams(state: ExplorerState): SliceParams {
  return {
    d: state.d,
    phi: state.phi,
    theta: state.theta,
    frame: state.frame,
    cmpp: state.cmpp,
    flipH: state.flipH,
    flipV: state.flipV,
    rot: state.rot,
  };
}

/** Seed the sliders from a study's selected plane (the Adjust workflow). */
export function stateFromPlane(
  base: ExplorerState,
  plane: PlaneAD,
  preset: string,
): ExplorerState {
  return { ...base, d: plane.d, phi: plane.phi_n, theta: plane.theta_n, preset };
}

export function encodeState(state: ExplorerState): string {
  const q = new URLSearchParams({
    vol: state.volumeId,
    d: String(state.d),
    phi: String(state.phi),
    theta: String(state.theta),
    frame: String(state.frame),
    cmpp: String(state.cmpp),
    flip_h: String(state.flipH),
    flip_v: String(state.flipV),
    rot: String(state.rot),
  });
  if (state.preset) q.set("preset", state.preset);
  return q.toString();
}

export function decodeState(query: string): ExplorerState | null {
  const q = new URLSearchParams(query);
  const vol = q.get("vol");
  if (!vol) return null;
  const num = (key: string, fallback: number) => {
    const raw = q.get(key);
    if (raw === null) return fallback;
    const v = Number(raw);
    return Number.isFinite(v) ? v : fallback;
  };
  const base = defaultState(vol);
  return {
    volumeId: vol,
    d: num("d", base.d),
    phi: num("phi", base.phi),
    theta: num("theta", base.theta),
    frame: num("frame", base.frame),
    cmpp: num("cmpp", base.cmpp),
    flipH: q.get("flip_h") === "true",
    flipV: q.get("flip_v") === "true",
    rot: num("rot", base.rot),
    preset: q.get("preset"),
  };
}
