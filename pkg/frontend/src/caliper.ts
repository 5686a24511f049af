/** Two-click distance measurement on a rendered slice.
 *
 * The image is calibrated (exact cm per pixel), so distance is plain
 * pixel geometry scaled by cm_per_pix; no server round-trip needed.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Measurement {
  a: Point;
  b: Point;
  lengthCm: number;
}

export function distanceCm(a: Point, b: Point, cmPerPix: number): number {
  return Math.hypot(b.x - a.x, b.y - a.y) * cmPerPix;
}

export class Caliper {
  private first: Point | null = null;
  private current: Measurement | null = null;

  constructor(private cmPerPix: number) {}

  /** A new image scale invalidates any measurement in progress. */
  setScale(cmPerPix: number): void {
    this.cmPerPix = cmPerPix;
    this.reset();
  }

  /** Register a click; returns the completed measurement on the second. */
  click(point: Point): Measurement | null {
    if (this.first === null) {
      this.first = { ...point };
      this.current = null;
      return null;
    }
    this.current = {
      a: this.first,
      b: { ...point },
      lengthCm: distanceCm(this.first, point, this.cmPerPix),
    };
    this.first = null;
    return this.current;
  }

  get measurement(): Measurement | null {
    return this.current;
  }

  /** True between the first and second click. */
  get armed(): boolean {
    return this.first !== null;
  }

  reset(): void {
    this.first = null;
    this.current = null;
  }
}
