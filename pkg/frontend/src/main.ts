/** DOM wiring: plane explorer + study review, against the HTTP service.
 *
 * Layout (see index.html): a slider panel and live slice image on the
 * left, the eight-view review grid on the right. Explorer state mirrors
 * into the URL hash so any plane is a shareable bookmark.
 */

import { ApiClient, type StudyManifest, type VolumeMeta } from "./api.js";
import { Caliper } from "./caliper.js";
import { SliceStream } from "./requests.js";
import { acceptView, overrideView, reviewRows, waitForStudy } from "./review.js";
import {
  clampState,
  decodeState,
  defaultState,
  encodeState,
  sliderBounds,
  stateFromPlane,
  stateToSliceParams,
  type ExplorerState,
} from "./state.js";

const api = new ApiClient("");

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

class ExplorerPanel {
  state: ExplorerState;
  private readonly stream: SliceStream<ExplorerState>;
  private readonly caliper: Caliper;
  private readonly image: HTMLImageElement;
  private readonly overlay: HTMLCanvasElement;
  private readonly readout: HTMLElement;
  private readonly sliders = new Map<string, HTMLInputElement>();
  private objectUrl: string | null = null;
  private playTimer: number | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly meta: VolumeMeta,
    initial: ExplorerState,
  ) {
    this.state = clampState(initial, sliderBounds(meta));
    this.caliper = new Caliper(this.state.cmpp);
    this.image = el("img", { id: "slice-image", alt: "slice" });
    this.overlay = el("canvas", { id: "caliper-overlay" });
    this.readout = el("div", { id: "caliper-readout" });
    this.stream = new SliceStream({
      fetcher: (s) => api.fetchSlice(s.volumeId, stateToSliceParams(s)),
      onImage: (blob) => this.showImage(blob),
      onError: (err) => this.showError(err),
    });
    this.build();
    this.stream.request(this.state);
  }

  private build(): void {
    const bounds = sliderBounds(this.meta);
    const panel = el("div", { id: "explorer-controls" });
    const rows: Array<[keyof typeof bounds, string]> = [
      ["d", "distance (cm)"],
      ["phi", "azimuth (deg)"],
      ["theta", "elevation (deg)"],
      ["frame", "frame"],
    ];
    for (const [key, label] of rows) {
      const b = bounds[key];
      const input = el("input", {
        type: "range",
        id: `slider-${key}`,
        min: String(b.min),
        max: String(b.max),
        step: String(b.step),
        value: String(this.state[key]),
      });
      input.addEventListener("input", () => {
        this.update({ [key]: Number(input.value) } as Partial<ExplorerState>);
      });
      this.sliders.set(key, input);
      const row = el("label", {}, label);
      row.append(input);
      panel.append(row);
    }

    const play = el("button", { id: "play-button" }, "play");
    play.addEventListener("click", () => this.togglePlay(play));
    panel.append(play);

    const stage = el("div", { id: "slice-stage" });
    stage.append(this.image, this.overlay);
    this.overlay.addEventListener("click", (ev) => this.caliperClick(ev));
    this.root.append(panel, stage, this.readout);
  }

  update(patch: Partial<ExplorerState>): void {
    this.state = clampState({ ...this.state, ...patch }, sliderBounds(this.meta));
    if (patch.cmpp !== undefined) this.caliper.setScale(this.state.cmpp);
    for (const [key, input] of this.sliders) {
      input.value = String(this.state[key as "d" | "phi" | "theta" | "frame"]);
    }
    window.location.hash = encodeState(this.state);
    this.stream.request(this.state);
  }

  seedFromView(manifest: StudyManifest, view: string): void {
    const entry = manifest.views[view];
    if (!entry) return;
    this.update(stateFromPlane(this.state, entry.plane, view));
  }

  private showImage(blob: Blob): void {
    if (this.objectUrl) URL.revokeObjectURL(this.objectUrl);
    this.objectUrl = URL.createObjectURL(blob);
    this.image.src = this.objectUrl;
    this.image.onload = () => {
      this.overlay.width = this.image.naturalWidth;
      this.overlay.height = this.image.naturalHeight;
      this.drawCaliper();
    };
  }

  private showError(err: unknown): void {
    this.readout.textContent = `slice error: ${String(err)}`;
  }

  private caliperClick(ev: MouseEvent): void {
    const rect = this.overlay.getBoundingClientRect();
    const scaleX = this.overlay.width / rect.width;
    const scaleY = this.overlay.height / rect.height;
    const point = {
      x: (ev.clientX - rect.left) * scaleX,
      y: (ev.clientY - rect.top) * scaleY,
    };
    const done = this.caliper.click(point);
    this.readout.textContent = done
      ? `${done.lengthCm.toFixed(2)} cm`
      : "caliper: click the second point";
    this.drawCaliper();
  }

  private drawCaliper(): void {
    const ctx = this.overlay.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.overlay.width, this.overlay.height);
    const m = this.caliper.measurement;
    if (!m) return;
    ctx.strokeStyle = "#ffd400";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(m.a.x, m.a.y);
    ctx.lineTo(m.b.x, m.b.y);
    ctx.stroke();
  }

  private togglePlay(button: HTMLButtonElement): void {
    if (this.playTimer !== null) {
      window.clearInterval(this.playTimer);
      this.playTimer = null;
      button.textContent = "play";
      return;
    }
    const interval = this.meta.frame_interval_ms ?? 50;
    const frames = this.meta.dims[3];
    this.playTimer = window.setInterval(() => {
      this.update({ frame: (this.state.frame + 1) % frames });
    }, interval);
    button.textContent = "stop";
  }
}

class ReviewPanel {
  private manifest: StudyManifest | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly explorer: ExplorerPanel,
  ) {}

  async start(volumeId: string): Promise<void> {
    this.root.textContent = "extracting views…";
    const { study_id } = await api.startExtraction(volumeId);
    this.manifest = await waitForStudy(api, study_id, {
      onProgress: (m) => {
        if (m.state === "running" && m.progress.stage) {
          this.root.textContent = `extracting ${m.progress.stage} (${m.progress.done}/${m.progress.total})…`;
        }
      },
    });
    this.render();
  }

  private render(): void {
    const manifest = this.manifest;
    if (!manifest) return;
    this.root.replaceChildren();
    if (manifest.state === "error") {
      this.root.append(el("div", { class: "error" }, manifest.error ?? "extraction failed"));
      return;
    }
    for (const { view, entry } of reviewRows(manifest)) {
      const card = el("div", { class: "view-card", id: `card-${view}` });
      const img = el("img", { alt: view });
      img.src = api.viewFrameUrl(manifest.study_id, view, 0);
      const title = el("div", { class: "view-title" },
        `${view} — score ${entry.score.toFixed(3)} [${entry.status}]`);

      const accept = el("button", {}, "accept");
      accept.addEventListener("click", async () => {
        this.manifest = await acceptView(api, manifest.study_id, view);
        this.render();
      });

      const adjust = el("button", {}, "adjust");
      adjust.addEventListener("click", () => this.explorer.seedFromView(manifest, view));

      const save = el("button", {}, "save override");
      save.addEventListener("click", async () => {
        const s = this.explorer.state;
        this.manifest = await overrideView(api, manifest.study_id, view, {
          d: s.d,
          phi: s.phi,
          theta: s.theta,
        });
        this.render();
      });

      card.append(title, img, accept, adjust, save);
      this.root.append(card);
    }
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const fromHash = decodeState(window.location.hash.replace(/^#/, ""));
  const volumeId = fromHash?.volumeId ?? params.get("vol");
  const explorerRoot = document.getElementById("explorer");
  const reviewRoot = document.getElementById("review");
  if (!volumeId || !explorerRoot || !reviewRoot) {
    document.body.textContent = "missing ?vol=<volume id>";
    return;
  }
  const meta = await api.getMeta(volumeId);
  const explorer = new ExplorerPanel(
    explorerRoot, meta, fromHash ?? defaultState(volumeId));
  const review = new ReviewPanel(reviewRoot, explorer);
  if (params.get("review") !== "false") void review.start(volumeId);
}

void boot();
