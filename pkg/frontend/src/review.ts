/** Study review: poll extraction progress, adjudicate the eight views. */

import type { ApiClient, StudyManifest, ViewEntry } from "./api.js";

export const VIEW_ORDER = [
  "A4C",
  "A2C",
  "A3C",
  "PLAX",
  "A5C",
  "SAX_apex",
  "SAX_PAP",
  "SAX_MV",
] as const;

export interface ReviewRow {
  view: string;
  entry: ViewEntry;
}

/** Views in canonical display order; missing views are skipped. */
export function reviewRows(manifest: StudyManifest): ReviewRow[] {
  return VIEW_ORDER.filter((v) => v in manifest.views).map((view) => ({
    view,
    entry: manifest.views[view],
  }));
}

export function reviewComplete(manifest: StudyManifest): boolean {
  const rows = reviewRows(manifest);
  return rows.length > 0 && rows.every((r) => r.entry.status !== "auto");
}

export async function acceptView(
  api: ApiClient,
  studyId: string,
  view: string,
): Promise<StudyManifest> {
  return api.acceptView(studyId, view);
}

/** Save an adjusted plane (from the explorer) as an override. */
export async function overrideView(
  api: ApiClient,
  studyId: string,
  view: string,
  plane: { d: number; phi: number; theta: number },
): Promise<StudyManifest> {
  return api.overrideView(studyId, view, plane);
}

/** Poll the study until extraction finishes (or errors out). */
export async function waitForStudy(
  api: ApiClient,
  studyId: string,
  opts: {
    intervalMs?: number;
    timeoutMs?: number;
    onProgress?: (m: StudyManifest) => void;
    sleep?: (ms: number) => Promise<void>;
  } = {},
): Promise<StudyManifest> {
  const interval = opts.intervalMs ?? 500;
  const timeout = opts.timeoutMs ?? 120_000;
  const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  const deadline = Date.now() + timeout;
  for (;;) {
    const manifest = await api.getStudy(studyId);
    opts.onProgress?.(manifest);
    if (manifest.state === "done" || manifest.state === "error") return manifest;
    if (Date.now() > deadline) throw new Error("extraction timed out");
    await sleep(interval);
  }
}
