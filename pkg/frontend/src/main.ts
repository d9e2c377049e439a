// Browser entry: canvas capture surface wired to the enroll/verify flows.

import { StrokeRecorder, fromPointerEvent } from "./capture";
import { ServiceClient } from "./client";
import { EnrollFlow, VerifyFlow } from "./flows";
import { resampleTo60Hz } from "./resample";
import { CaptureMode } from "./types";

const SERVICE_URL = (window as { HAPTICPASS_URL?: string }).HAPTICPASS_URL
  ?? "http://127.0.0.1:8321";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setBanner(text: string, warn = false): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = warn ? "banner warn" : "banner";
}

function drawBar(ratio: number | null): void {
  const canvas = el<HTMLCanvasElement>("bar");
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (ratio === null) return;
  const clipped = Math.min(ratio, 2.0) / 2.0;
  ctx.fillStyle = ratio < 1 ? "#2a4" : "#c33";
  ctx.fillRect(0, 0, clipped * canvas.width, canvas.height);
  ctx.strokeStyle = "#000";
  ctx.beginPath();
  ctx.moveTo(canvas.width / 2, 0); // threshold marker at ratio 1.0
  ctx.lineTo(canvas.width / 2, canvas.height);
  ctx.stroke();
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("pad");
  const ctx = canvas.getContext("2d")!;
  const client = new ServiceClient(SERVICE_URL);
  let mode: CaptureMode = "enroll";
  let recorder = new StrokeRecorder(mode, "");

  const redraw = () => {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#123";
    let prev: { x: number; y: number } | null = null;
    for (const s of recorder.session.samples) {
      if (!s.contact) {
        prev = null;
        continue;
      }
      if (prev) {
        ctx.beginPath();
        ctx.moveTo(prev.x, prev.y);
        ctx.lineTo(s.x, s.y);
        ctx.stroke();
      }
      prev = s;
    }
  };

  for (const type of ["pointerdown", "pointermove", "pointerup"]) {
    canvas.addEventListener(type, (ev) => {
      ev.preventDefault();
      const rect = canvas.getBoundingClientRect();
      const sample = fromPointerEvent(ev as PointerEvent, rect);
      if (sample) {
        recorder.handle(sample);
        redraw();
      }
    });
  }

  const userInput = el<HTMLInputElement>("user");
  const methodInput = el<HTMLSelectElement>("method");

  el<HTMLButtonElement>("clear").onclick = () => {
    recorder.reset();
    redraw();
  };

  el<HTMLButtonElement>("submit").onclick = async () => {
    const userId = userInput.value.trim();
    if (!userId) {
      setBanner("enter a user id first", true);
      return;
    }
    const samples = recorder.finish();
    if (samples.length === 0) {
      setBanner("draw your password first", true);
      return;
    }
    if (!recorder.session.pressureSupported) {
      setBanner("no pressure input on this device: force discrimination "
        + "is disabled (constant 0.5)", true);
    }
    const { document: trace, droppedStrokes } = resampleTo60Hz(
      samples, "signature-static", 60, userId,
    );
    if (droppedStrokes > 0) {
      setBanner(`${droppedStrokes} stroke(s) too short, dropped`, true);
    }
    if (mode === "enroll") {
      const flow = new EnrollFlow(client, userId);
      await flow.start();
      const state = await flow.submit(trace);
      el<HTMLDivElement>("progress").textContent =
        state.phase === "enrolled"
          ? "enrolled"
          : `${state.staged}/${state.needed}`;
      setBanner(state.message, state.phase === "error");
      if (state.phase === "enrolled") mode = "verify";
    } else {
      const flow = new VerifyFlow(
        client, userId, methodInput.value as "euclidean" | "hamming", true,
      );
      const state = await flow.submit(trace);
      drawBar(state.ratio);
      setBanner(state.message, !(state.accepted ?? false));
      if (state.phase === "retrain") {
        mode = "enroll";
        setBanner("drift detected: re-enrollment required", true);
      }
    }
    recorder = new StrokeRecorder(mode, userId);
    redraw();
  };

  el<HTMLSelectElement>("mode").onchange = (ev) => {
    mode = (ev.target as HTMLSelectElement).value as CaptureMode;
    recorder = new StrokeRecorder(mode, userInput.value);
    redraw();
  };
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
