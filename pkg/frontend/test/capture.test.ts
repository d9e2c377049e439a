import { describe, expect, it } from "vitest";

import { StrokeRecorder } from "../src/capture";
import { PointerSample } from "../src/types";

function pen(kind: PointerSample["kind"], t: number, x: number, y: number,
             pressure: number): PointerSample {
  return { kind, t, x, y, pressure, hasPressure: true };
}

function mouse(kind: PointerSample["kind"], t: number, x: number,
               y: number): PointerSample {
  return { kind, t, x, y, pressure: 0.5, hasPressure: false };
}

describe("StrokeRecorder", () => {
  it("passes stylus pressure through and flags the capability", () => {
    const rec = new StrokeRecorder("enroll", "u");
    rec.handle(pen("down", 10.0, 0, 0, 0.2));
    rec.handle(pen("move", 10.02, 1, 1, 0.6));
    rec.handle(pen("move", 10.04, 2, 2, 0.9));
    const samples = rec.finish();
    expect(rec.session.pressureSupported).toBe(true);
    expect(samples.map((s) => s.pressure)).toEqual([0.2, 0.6, 0.9]);
  });

  it("emits constant 0.5 without pressure support", () => {
    const rec = new StrokeRecorder("enroll", "u");
    rec.handle(mouse("down", 5.0, 0, 0));
    rec.handle(mouse("move", 5.02, 1, 0));
    rec.handle(mouse("move", 5.04, 2, 0));
    const samples = rec.finish();
    expect(rec.session.pressureSupported).toBe(false);
    expect(samples.every((s) => s.pressure === 0.5)).toBe(true);
  });

  it("separates strokes with non-contact samples", () => {
    const rec = new StrokeRecorder("enroll", "u");
    rec.handle(mouse("down", 0.0, 0, 0));
    rec.handle(mouse("move", 0.02, 1, 0));
    rec.handle(mouse("up", 0.04, 2, 0));
    rec.handle(mouse("move", 0.10, 5, 5)); // hover between strokes
    rec.handle(mouse("down", 0.20, 8, 8));
    rec.handle(mouse("move", 0.22, 9, 9));
    const samples = rec.session.samples;
    expect(rec.strokeCount).toBe(2);
    const hover = samples.filter((s) => !s.contact);
    expect(hover.length).toBeGreaterThan(0);
    expect(hover.every((s) => s.pressure === 0)).toBe(true);
  });

  it("timestamps are relative to the first contact and monotone", () => {
    const rec = new StrokeRecorder("verify", "u");
    rec.handle(mouse("move", 99.0, 0, 0)); // before first down: ignored
    rec.handle(mouse("down", 100.0, 0, 0));
    rec.handle(mouse("move", 100.05, 1, 1));
    rec.handle(mouse("move", 100.03, 2, 2)); // clock hiccup: dropped
    rec.handle(mouse("move", 100.10, 3, 3));
    const samples = rec.finish();
    expect(samples[0].t).toBe(0);
    expect(samples.length).toBe(3);
    for (let i = 1; i < samples.length; i += 1) {
      expect(samples[i].t).toBeGreaterThan(samples[i - 1].t);
    }
  });

  it("trims trailing non-contact samples like the server does", () => {
    const rec = new StrokeRecorder("enroll", "u");
    rec.handle(mouse("down", 0.0, 0, 0));
    rec.handle(mouse("move", 0.02, 1, 1));
    rec.handle(mouse("up", 0.04, 2, 2));
    rec.handle(mouse("move", 0.06, 3, 3));
    rec.handle(mouse("move", 0.08, 4, 4));
    const samples = rec.finish();
    expect(samples[samples.length - 1].contact).toBe(true);
  });
});
