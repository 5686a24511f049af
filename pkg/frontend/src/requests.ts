/** Debounced slice streaming with stale-response discarding.
 *
 * Slider drags fire many state changes; this coalesces them (default
 * 80 ms), keeps at most one request in flight, and tags every request
 * with a sequence number so a slow early response can never overwrite a
 * newer image.
 */

export const DEFAULT_DEBOUNCE_MS = 80;

export interface SliceStreamOptions<S> {
  /** Perform the actual fetch for a state snapshot. */
  fetcher: (state: S) => Promise<Blob>;
  /** Called with the winning (non-stale) response. */
  onImage: (blob: Blob, state: S) => void;
  onError?: (error: unknown, state: S) => void;
  debounceMs?: number;
  setTimeoutFn?: typeof setTimeout;
  clearTimeoutFn?: typeof clearTimeout;
}

export class SliceStream<S> {
  private seq = 0;
  private delivered = 0;
  private inFlight = 0;
  private pending: S | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly debounceMs: number;
  private readonly setTimeoutFn: typeof setTimeout;
  private readonly clearTimeoutFn: typeof clearTimeout;

  constructor(private readonly opts: SliceStreamOptions<S>) {
    this.debounceMs = opts.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.setTimeoutFn = opts.setTimeoutFn ?? setTimeout;
    this.clearTimeoutFn = opts.clearTimeoutFn ?? clearTimeout;
  }

  /** Note a new desired state; the fetch fires after the debounce window. */
  request(state: S): void {
    this.pending = state;
    if (this.timer !== null) this.clearTimeoutFn(this.timer);
    this.timer = this.setTimeoutFn(() => {
      this.timer = null;
      this.flush();
    }, this.debounceMs);
  }

  /** Requests currently on the wire (0 or 1 unless a fetch is stuck). */
  get inFlightCount(): number {
    return this.inFlight;
  }

  private flush(): void {
    if (this.pending === null || this.inFlight > 0) return;
    const state = this.pending;
    this.pending = null;
    const mySeq = ++this.seq;
    this.inFlight += 1;
    this.opts
      .fetcher(state)
      .then((blob) => {
        if (mySeq > this.delivered) {
          this.delivered = mySeq;
          this.opts.onImage(blob, state);
        }
      })
      .catch((err) => {
        this.opts.onError?.(err, state);
      })
      .finally(() => {
        this.inFlight -= 1;
        // a newer state arrived while we were busy: fetch it immediately
        if (this.pending !== null && this.timer === null) this.flush();
      });
  }
}
