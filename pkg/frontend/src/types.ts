// Shared types for the capture client. TraceDocument mirrors the service's
// trace JSON schema exactly; anything else is client-local state.

export interface RawSample {
  t: number;        // seconds, monotone, relative to capture start
  x: number;
  y: number;
  pressure: number; // [0, 1]; 0.5 constant when the device reports none
  contact: boolean;
}

export type CaptureMode = "enroll" | "verify";

export interface CaptureSession {
  mode: CaptureMode;
  userId: string;
  samples: RawSample[];
  pressureSupported: boolean;
  sampleRateHz: number; // resample target, 60
}

export interface TraceSample {
  t: number;
  x: number;
  y: number;
  f: number;
  contact: boolean;
}

export interface TraceDocument {
  sample_rate_hz: number;
  task: string;
  samples: TraceSample[];
  user?: string;
}

// a normalized pointer event, decoupled from the DOM so logic is testable
export interface PointerSample {
  kind: "down" | "move" | "up";
  t: number;        // seconds (high-resolution clock / 1000)
  x: number;
  y: number;
  pressure: number; // raw event pressure, 0 when unknown
  hasPressure: boolean;
}

export interface EnrollStatus {
  user_id: string;
  status: "pending" | "enrolled";
  staged: number;
  needed: number;
}

export interface VerifyResult {
  user_id: string;
  accepted: boolean;
  distance: number;
  threshold: number;
  adapted: boolean;
  drift: "OK" | "RETRAIN_REQUIRED";
  drift_value: number;
}
