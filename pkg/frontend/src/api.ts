/** Typed client for the echoslice HTTP service.
 *
 * The UI never computes geometry itself: every rendered pixel and every
 * cm value comes from the service through this module.
 */

export interface VolumeMeta {
  dims: [number, number, number, number];
  bounds: {
    rho_min: number;
    rho_max: number;
    phi_min: number;
    phi_max: number;
    theta_min: number;
    theta_max: number;
  };
  frame_interval_ms: number | null;
}

export interface PlaneAD {
  d: number;
  phi_n: number;
  theta_n: number;
}

export interface RenderConfig {
  cm_per_pix: number;
  flip_h: boolean;
  flip_v: boolean;
  rotation_deg: number;
}

export interface ViewEntry {
  plane: PlaneAD;
  score: number;
  render_config: RenderConfig;
  status: "auto" | "accepted" | "overridden";
  artifacts: string[];
}

export interface StudyManifest {
  study_id: string;
  volume_id: string;
  state: "pending" | "running" | "done" | "error";
  progress: { stage: string | null; done: number; total: number };
  error: string | null;
  ed_frame: number | null;
  views: Record<string, ViewEntry>;
}

export interface SliceParams {
  d: number;
  phi: number;
  theta: number;
  frame: number;
  cmpp: number;
  flipH: boolean;
  flipV: boolean;
  rot: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  /** Slice URL for the given plane; the single source of truth for pixels. */
  sliceUrl(volumeId: string, p: SliceParams): string {
    const q = new URLSearchParams({
      d: String(p.d),
      phi: String(p.phi),
      theta: String(p.theta),
      frame: String(p.frame),
      cmpp: String(p.cmpp),
      flip_h: String(p.flipH),
      flip_v: String(p.flipV),
      rot: String(p.rot),
    });
    return `${this.baseUrl}/volumes/${volumeId}/slice?${q.toString()}`;
  }

  async getMeta(volumeId: string): Promise<VolumeMeta> {
    return this.json(`${this.baseUrl}/volumes/${volumeId}/meta`);
  }

  async fetchSlice(volumeId: string, p: SliceParams): Promise<Blob> {
    const resp = await this.fetchFn(this.sliceUrl(volumeId, p));
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.blob();
  }

  async startExtraction(volumeId: string): Promise<{ study_id: string; state: string }> {
    return this.json(`${this.baseUrl}/volumes/${volumeId}/extract`, { method: "POST" });
  }

  async getStudy(studyId: string): Promise<StudyManifest> {
    return this.json(`${this.baseUrl}/studies/${studyId}`);
  }

  viewFrameUrl(studyId: string, view: string, frame: number): string {
    return `${this.baseUrl}/studies/${studyId}/views/${view}/frames/${frame}`;
  }

  async acceptView(studyId: string, view: string): Promise<StudyManifest> {
    return this.json(`${this.baseUrl}/studies/${studyId}/views/${view}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ accept: true }),
    });
  }

  async overrideView(
    studyId: string,
    view: string,
    plane: { d: number; phi: number; theta: number },
  ): Promise<StudyManifest> {
    return this.json(`${this.baseUrl}/studies/${studyId}/views/${view}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ override: plane }),
    });
  }

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(url, init);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.json() as Promise<T>;
  }
}
