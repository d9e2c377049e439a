"""Stroke-trace ingestion and the 8-channel kinematic state matrix.

A password trace is an ordered sequence of (t, x, y, f) touch samples with a
contact flag. From it we derive per-sample velocities, speed change, heading
and heading change; all derived channels are first differences over the raw
sample sequence (per sample, not per second) with initial values fixed to 0.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

MIN_SAMPLES = 8

CHANNELS = ("x", "y", "f", "vx", "vy", "a", "theta", "omega")

TASKS = ("signature-static", "signature-holding", "pattern-holding")


class TraceError(ValueError):
    """Malformed or invalid trace document."""


class TraceTooShort(TraceError):
    """Trace has fewer than MIN_SAMPLES contact-terminated samples.

    Raised as a distinct type so callers can prompt the user to re-enter.
    """


@dataclass(frozen=True)
class Sample:
    t: float
    x: float
    y: float
    f: float
    contact: bool
    stroke_id: int


@dataclass(frozen=True)
class PasswordTrace:
    samples: tuple[Sample, ...]
    sample_rate: float = 60.0
    task: str = "signature-static"
    user: str | None = None
    session_day: int | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def channel(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def contact_flags(self) -> np.ndarray:
        return np.array([s.contact for s in self.samples], dtype=bool)

    def to_json(self) -> str:
        doc = {
            "sample_rate_hz": self.sample_rate,
            "task": self.task,
            "samples": [
                {"t": s.t, "x": s.x, "y": s.y, "f": s.f, "contact": s.contact}
                for s in self.samples
            ],
        }
        if self.user is not None:
            doc["user"] = self.user
        if self.session_day is not None:
            doc["session_day"] = self.session_day
        return json.dumps(doc, sort_keys=True)


@dataclass(frozen=True)
class StateMatrix:
    """Eight equal-length channels (x, y, f, vx, vy, a, theta, omega)."""

    channels: np.ndarray  # shape (8, N), row order per CHANNELS

    def __post_init__(self):
        if self.channels.ndim != 2 or self.channels.shape[0] != len(CHANNELS):
            raise ValueError("state matrix must have 8 channel rows")

    def __len__(self) -> int:
        return self.channels.shape[1]

    def channel(self, name: str) -> np.ndarray:
        return self.channels[CHANNELS.index(name)]


def _assign_stroke_ids(raw: list[dict]) -> list[Sample]:
    samples = []
    stroke = 0
    prev_contact = False
    for r in raw:
        if r["contact"] and not prev_contact:
            stroke += 1
        prev_contact = r["contact"]
        samples.append(
            Sample(
                t=float(r["t"]),
                x=float(r["x"]),
                y=float(r["y"]),
                f=float(r["f"]),
                contact=bool(r["contact"]),
                stroke_id=max(stroke - 1, 0),
            )
        )
    return samples


def _validate(samples: list[Sample]) -> None:
    if not samples:
        raise TraceError("empty trace")
    for s in samples:
        if not all(math.isfinite(v) for v in (s.t, s.x, s.y, s.f)):
            raise TraceError("non-finite sample value")
        if s.f < 0:
            raise TraceError("negative force")
    for prev, cur in zip(samples, samples[1:]):
        if cur.t < prev.t:
            raise TraceError("non-monotone timestamps")
        if cur.stroke_id == prev.stroke_id and prev.contact and cur.contact and cur.t <= prev.t:
            raise TraceError("non-increasing timestamps within stroke")


def _truncated_length(samples: list[Sample]) -> int:
    for i in range(len(samples) - 1, -1, -1):
        if samples[i].contact:
            return i + 1
    return 0


def parse_trace(document: bytes | str | dict) -> PasswordTrace:
    """Parse and validate a trace document (JSON object or CSV text).

    The returned trace is ordered and carries derived stroke ids, but trailing
    non-contact samples are kept; run truncate_trailing before feature
    extraction. Traces whose contact-terminated prefix is shorter than
    MIN_SAMPLES are rejected here with TraceTooShort.
    """
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    if isinstance(document, str):
        text = document.lstrip()
        if text.startswith("{"):
            try:
                document = json.loads(text)
            except json.JSONDecodeError as exc:
                raise TraceError(f"malformed document: {exc}") from exc
        else:
            return _parse_csv(text)
    if not isinstance(document, dict):
        raise TraceError("malformed document: expected JSON object or CSV text")
    return _parse_obj(document)


def _parse_obj(doc: dict) -> PasswordTrace:
    try:
        raw = doc["samples"]
    except KeyError as exc:
        raise TraceError("malformed document: missing 'samples'") from exc
    if not isinstance(raw, list) or not raw:
        raise TraceError("empty trace")
    try:
        samples = _assign_stroke_ids(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed document: bad sample record ({exc})") from exc
    _validate(samples)
    n_contact = _truncated_length(samples)
    if n_contact < MIN_SAMPLES:
        raise TraceTooShort(
            f"trace has {n_contact} contact-terminated samples, need {MIN_SAMPLES}"
        )
    trace = PasswordTrace(
        samples=tuple(samples),
        sample_rate=float(doc.get("sample_rate_hz", 60.0)),
        task=str(doc.get("task", "signature-static")),
        user=doc.get("user"),
        session_day=doc.get("session_day"),
    )
    return trace


def _parse_csv(text: str) -> PasswordTrace:
    reader = csv.DictReader(io.StringIO(text))
    required = {"t", "x", "y", "f", "contact"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise TraceError("malformed document: CSV header must be t,x,y,f,contact")
    raw = []
    for row in reader:
        raw.append(
            {
                "t": float(row["t"]),
                "x": float(row["x"]),
                "y": float(row["y"]),
                "f": float(row["f"]),
                "contact": row["contact"].strip().lower() in ("1", "true", "t", "yes"),
            }
        )
    return _parse_obj({"samples": raw})


def truncate_trailing(trace: PasswordTrace) -> PasswordTrace:
    """Drop every sample after the final contact sample."""
    n = _truncated_length(list(trace.samples))
    if n == 0:
        raise TraceError("trace has no contact samples")
    if n == len(trace.samples):
        return trace
    return replace(trace, samples=trace.samples[:n])


def load_trace(path) -> PasswordTrace:
    """Parse a trace file (JSON or CSV by content) and truncate its tail."""
    with open(path, "rb") as fh:
        return truncate_trailing(parse_trace(fh.read()))


def _wrap_angle(d: np.ndarray) -> np.ndarray:
    """Wrap angle differences into (-pi, pi]."""
    w = np.mod(d, 2.0 * np.pi)
    w[w > np.pi] -= 2.0 * np.pi
    return w


def compute_state(trace: PasswordTrace) -> StateMatrix:
    """Derive the 8-channel state matrix from a truncated trace.

    vx, vy are per-sample position differences; a is the per-sample speed
    difference; theta is the full-quadrant heading, holding the previous
    heading while the pen is stationary; omega is the heading difference
    wrapped into (-pi, pi]. All channels start at 0.
    """
    x = trace.channel("x")
    y = trace.channel("y")
    f = trace.channel("f")
    n = len(x)
    vx = np.diff(x, prepend=x[:1])
    vy = np.diff(y, prepend=y[:1])
    speed = np.hypot(vx, vy)
    a = np.diff(speed, prepend=speed[:1])

    moving = (vx != 0.0) | (vy != 0.0)
    theta_raw = np.arctan2(vy, vx)
    # hold last heading through stationary samples; nothing seen yet -> 0
    last_moving = np.maximum.accumulate(np.where(moving, np.arange(n), -1))
    theta = np.where(last_moving >= 0, theta_raw[np.maximum(last_moving, 0)], 0.0)

    omega = _wrap_angle(np.diff(theta, prepend=theta[:1]))

    return StateMatrix(channels=np.vstack([x, y, f, vx, vy, a, theta, omega]))
