// 60 Hz resampling onto a single global grid anchored at the first contact.
//
// Each stroke is linearly interpolated onto the grid ticks inside its own
// time span (so inter-stroke gaps are never interpolated across); grid
// ticks falling between strokes become contact=false hover samples with
// zero force. Strokes too short to cover a grid tick (or with a single
// raw sample) are dropped and reported, not silently extrapolated.

import { RawSample, TraceDocument, TraceSample } from "./types";

export interface ResampleResult {
  document: TraceDocument;
  droppedStrokes: number; // strokes skipped with a visible notice
}

interface Stroke {
  samples: RawSample[];
}

function splitStrokes(samples: RawSample[]): Stroke[] {
  const strokes: Stroke[] = [];
  let current: RawSample[] | null = null;
  for (const s of samples) {
    if (s.contact) {
      if (current === null) current = [];
      current.push(s);
    } else if (current !== null) {
      strokes.push({ samples: current });
      current = null;
    }
  }
  if (current !== null) strokes.push({ samples: current });
  return strokes;
}

function interpolate(stroke: RawSample[], t: number): TraceSample {
  let i = 1;
  while (i < stroke.length - 1 && stroke[i].t < t) i += 1;
  const a = stroke[i - 1];
  const b = stroke[i];
  const span = b.t - a.t;
  const w = span > 0 ? (t - a.t) / span : 0;
  return {
    t,
    x: a.x + w * (b.x - a.x),
    y: a.y + w * (b.y - a.y),
    f: a.pressure + w * (b.pressure - a.pressure),
    contact: true,
  };
}

export function resampleTo60Hz(
  samples: RawSample[],
  task = "signature-static",
  rateHz = 60,
  user?: string,
): ResampleResult {
  const dt = 1 / rateHz;
  const strokes = splitStrokes(samples);
  let dropped = 0;
  const kept: Stroke[] = [];
  for (const s of strokes) {
    if (s.samples.length < 2) {
      dropped += 1;
      continue;
    }
    kept.push(s);
  }
  const out: TraceSample[] = [];
  if (kept.length > 0) {
    const t0 = kept[0].samples[0].t;
    let tick = 0;
    for (let k = 0; k < kept.length; k += 1) {
      const stroke = kept[k].samples;
      const start = stroke[0].t - t0;
      const end = stroke[stroke.length - 1].t - t0;
      // hover across the gap before this stroke, exactly on the grid
      const entry = [];
      while (tick * dt < start - 1e-12) {
        entry.push(tick);
        tick += 1;
      }
      const first = Math.max(tick, Math.ceil((start - 1e-12) / dt));
      const last = Math.floor((end + 1e-12) / dt);
      if (last < first) {
        dropped += 1; // stroke shorter than one grid interval
        continue;
      }
      if (k > 0 && out.length > 0) {
        const prev = out[out.length - 1];
        const target = interpolate(stroke, start + t0);
        for (const n of entry) {
          const w = (n * dt - prev.t) / (start - prev.t || 1);
          out.push({
            t: n * dt,
            x: prev.x + w * (target.x - prev.x),
            y: prev.y + w * (target.y - prev.y),
            f: 0,
            contact: false,
          });
        }
      }
      for (let n = first; n <= last; n += 1) {
        out.push(interpolate(stroke, t0 + n * dt));
        out[out.length - 1].t = n * dt;
      }
      tick = last + 1;
    }
  }
  return {
    document: {
      sample_rate_hz: rateHz,
      task,
      samples: out,
      ...(user !== undefined ? { user } : {}),
    },
    droppedStrokes: dropped,
  };
}
