// Stroke capture: normalized pointer events in, a trimmed sample buffer out.
//
// Recording starts at the first pointer-down; stroke boundaries follow
// pointer-up/down; moves between strokes (hover) are kept as contact=false
// samples so inter-stroke gaps survive into the uploaded trace. Devices
// that report no pressure get a constant 0.5 and a capability flag the UI
// surfaces as a warning banner.

import { CaptureMode, CaptureSession, PointerSample, RawSample } from "./types";

const FALLBACK_PRESSURE = 0.5;

export class StrokeRecorder {
  readonly session: CaptureSession;
  private down = false;
  private started = false;
  private t0 = 0;

  constructor(mode: CaptureMode, userId: string, sampleRateHz = 60) {
    this.session = {
      mode,
      userId,
      samples: [],
      pressureSupported: false,
      sampleRateHz,
    };
  }

  get strokeCount(): number {
    let count = 0;
    let prev = false;
    for (const s of this.session.samples) {
      if (s.contact && !prev) count += 1;
      prev = s.contact;
    }
    return count;
  }

  handle(ev: PointerSample): void {
    if (!this.started) {
      if (ev.kind !== "down") return; // recording starts at first contact
      this.started = true;
      this.t0 = ev.t;
    }
    if (ev.kind === "down") this.down = true;
    if (ev.hasPressure) this.session.pressureSupported = true;
    const t = ev.t - this.t0;
    const last = this.session.samples[this.session.samples.length - 1];
    if (last !== undefined && t <= last.t) return; // clock went backwards: drop
    const contact = this.down && ev.kind !== "up";
    this.session.samples.push({
      t,
      x: ev.x,
      y: ev.y,
      pressure: this.pressureOf(ev, contact),
      contact,
    });
    if (ev.kind === "up") this.down = false;
  }

  private pressureOf(ev: PointerSample, contact: boolean): number {
    if (!contact) return 0;
    if (ev.hasPressure) return Math.min(Math.max(ev.pressure, 0), 1);
    return FALLBACK_PRESSURE;
  }

  /** Trim trailing non-contact samples, mirroring the server's truncation. */
  finish(): RawSample[] {
    const samples = this.session.samples;
    let end = samples.length;
    while (end > 0 && !samples[end - 1].contact) end -= 1;
    this.session.samples = samples.slice(0, end);
    return this.session.samples;
  }

  reset(): void {
    this.session.samples = [];
    this.down = false;
    this.started = false;
  }
}

/** Adapt a DOM PointerEvent into the normalized form. */
export function fromPointerEvent(
  ev: { type: string; clientX: number; clientY: number; pressure?: number;
        pointerType?: string; timeStamp: number },
  origin: { left: number; top: number },
): PointerSample | null {
  const kinds: Record<string, PointerSample["kind"]> = {
    pointerdown: "down",
    pointermove: "move",
    pointerup: "up",
  };
  const kind = kinds[ev.type];
  if (kind === undefined) return null;
  const hasPressure = ev.pointerType === "pen" && ev.pressure !== undefined;
  return {
    kind,
    t: ev.timeStamp / 1000,
    x: ev.clientX - origin.left,
    y: ev.clientY - origin.top,
    pressure: ev.pressure ?? 0,
    hasPressure,
  };
}
