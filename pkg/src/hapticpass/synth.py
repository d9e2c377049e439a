"""Deterministic synthetic cohorts: genuine traces and skilled forgeries.

Trajectories are sums of sinusoids over a unit path parameter, giving
smooth signature-like curves whose stroke count, self-intersections and
speed modulation are controllable per difficulty preset. Forgeries copy the
victim's path shape within a small spatial tolerance but carry the forger's
tempo, force envelope and jitter spectrum: shape-accurate, dynamics-wrong.

All randomness flows through named PRNG streams derived from (purpose,
seed, ...) keys, so adding a stream never perturbs existing draws and a
(seed, config) pair always produces byte-identical trace files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# stream purposes
_PROFILE, _JITTER, _FORGERY, _DRIFT = 1, 2, 3, 4

PRESETS = ("signature-like", "pattern-like")


def _stream(purpose: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([purpose, *key]))


@dataclass(frozen=True)
class SynthParams:
    """Generator magnitudes; defaults emulate a cooperative cohort."""

    sample_rate: float = 60.0
    gap_samples: int = 6
    jitter_pos: float = 2.0        # px, smooth per-trace trajectory noise
    jitter_force: float = 0.02
    jitter_tempo: float = 0.02     # fractional sample-count variation
    drift_pos: float = 12.0        # day-2 systematic offset scale, px
    drift_amp: float = 0.10        # day-2 amplitude rescale spread
    drift_tempo: float = 0.02      # day-2 tempo stretch spread (symmetric)
    drift_force: float = 0.09
    forger_tempo_factor: float = 1.3   # forgers trace shapes deliberately
    forger_trace_error: float = 0.8    # x jitter_pos spatial tolerance


@dataclass(frozen=True)
class UserProfile:
    seed: int
    preset: str
    n_strokes: int
    n_samples: int                  # nominal contact samples per password
    center: tuple[float, float]
    amps_x: tuple[float, ...]
    freqs_x: tuple[float, ...]
    phases_x: tuple[float, ...]
    amps_y: tuple[float, ...]
    freqs_y: tuple[float, ...]
    phases_y: tuple[float, ...]
    force_base: tuple[float, ...]   # per stroke
    force_bump: tuple[float, ...]   # per stroke
    force_freq: tuple[float, ...]   # per stroke
    params: SynthParams = field(default=SynthParams())

    @property
    def task(self) -> str:
        return "pattern-holding" if self.preset == "pattern-like" else "signature-static"


def gen_user(seed: int, preset: str = "signature-like",
             params: SynthParams | None = None) -> UserProfile:
    """Deterministic user profile for a difficulty preset."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; options: {PRESETS}")
    params = params or SynthParams()
    rng = _stream(_PROFILE, seed)
    if preset == "signature-like":
        n_strokes = int(rng.integers(3, 6))
        n_harm = int(rng.integers(4, 7))
        n_samples = int(rng.integers(180, 280))
        freqs_x = np.sort(rng.uniform(0.4, 3.2, n_harm))
        freqs_y = np.sort(rng.uniform(0.4, 3.2, n_harm))
        amps_x = rng.uniform(40, 110, n_harm) / (1.0 + freqs_x)
        amps_y = rng.uniform(40, 110, n_harm) / (1.0 + freqs_y)
        # a fast small wiggle adds cusps: speed minima with sharp turns
        freqs_x = np.append(freqs_x, rng.uniform(8.0, 14.0))
        freqs_y = np.append(freqs_y, rng.uniform(8.0, 14.0))
        amps_x = np.append(amps_x, rng.uniform(5.0, 10.0))
        amps_y = np.append(amps_y, rng.uniform(5.0, 10.0))
        force_base = rng.uniform(0.35, 0.65, n_strokes)
        force_bump = rng.uniform(0.12, 0.30, n_strokes)
        force_freq = rng.uniform(1.0, 3.0, n_strokes)
    else:
        n_strokes = 1
        n_harm = 1
        n_samples = int(rng.integers(80, 120))
        freqs_x = np.sort(rng.uniform(0.25, 0.5, n_harm))
        freqs_y = np.sort(rng.uniform(0.25, 0.5, n_harm))
        amps_x = rng.uniform(90, 160, n_harm)
        amps_y = rng.uniform(90, 160, n_harm)
        force_base = rng.uniform(0.40, 0.60, n_strokes)
        force_bump = rng.uniform(0.04, 0.08, n_strokes)
        force_freq = rng.uniform(0.5, 1.0, n_strokes)
    phases_x = rng.uniform(0, 2 * np.pi, len(freqs_x))
    phases_y = rng.uniform(0, 2 * np.pi, len(freqs_y))
    center = (float(rng.uniform(140, 240)), float(rng.uniform(250, 420)))
    return UserProfile(
        seed=seed,
        preset=preset,
        n_strokes=n_strokes,
        n_samples=n_samples,
        center=center,
        amps_x=tuple(amps_x), freqs_x=tuple(freqs_x), phases_x=tuple(phases_x),
        amps_y=tuple(amps_y), freqs_y=tuple(freqs_y), phases_y=tuple(phases_y),
        force_base=tuple(force_base),
        force_bump=tuple(force_bump),
        force_freq=tuple(force_freq),
        params=params,
    )


def _path(profile: UserProfile, u: np.ndarray, amp_scale: float = 1.0):
    cx, cy = profile.center
    x = cx + amp_scale * sum(
        a * np.sin(2 * np.pi * f * u + p)
        for a, f, p in zip(profile.amps_x, profile.freqs_x, profile.phases_x)
    )
    y = cy + amp_scale * sum(
        a * np.sin(2 * np.pi * f * u + p)
        for a, f, p in zip(profile.amps_y, profile.freqs_y, profile.phases_y)
    )
    return x, y


def _smooth_noise(rng: np.random.Generator, u: np.ndarray, scale: float) -> np.ndarray:
    """Low-frequency random perturbation with std ~ scale (keeps derived
    channels from being dominated by white measurement noise)."""
    out = np.zeros_like(u)
    for _ in range(3):
        amp = scale * rng.uniform(0.4, 1.0) / np.sqrt(3)
        freq = rng.uniform(0.8, 5.0)
        phase = rng.uniform(0, 2 * np.pi)
        out += amp * np.sin(2 * np.pi * freq * u + phase)
    return out


@dataclass(frozen=True)
class _Drift:
    dx: float = 0.0
    dy: float = 0.0
    amp_scale: float = 1.0
    tempo_scale: float = 1.0
    force_offset: float = 0.0
    force_scale: float = 1.0


def _day2_drift(profile: UserProfile) -> _Drift:
    p = profile.params
    rng = _stream(_DRIFT, profile.seed)
    return _Drift(
        dx=float(rng.normal() * p.drift_pos),
        dy=float(rng.normal() * p.drift_pos),
        amp_scale=float(1.0 + rng.normal() * p.drift_amp),
        tempo_scale=float(1.0 + rng.normal() * p.drift_tempo),
        force_offset=float(rng.normal() * p.drift_force),
        force_scale=float(1.0 + rng.normal() * p.drift_force),
    )


def _render(
    profile: UserProfile,
    rng: np.random.Generator,
    *,
    n_contact: int,
    drift: _Drift,
    force_base: tuple[float, ...],
    force_bump: tuple[float, ...],
    force_freq: tuple[float, ...],
    trace_noise: float,
    force_noise: float,
    task: str,
    session_day: int,
    user_label: str | None,
) -> dict:
    p = profile.params
    n_strokes = profile.n_strokes
    gaps = n_strokes - 1
    per_stroke = np.full(n_strokes, n_contact // n_strokes)
    per_stroke[: n_contact % n_strokes] += 1
    total = n_contact + gaps * p.gap_samples

    u = np.linspace(0.0, 1.0, total)
    x, y = _path(profile, u, amp_scale=drift.amp_scale)
    x = x + drift.dx + _smooth_noise(rng, u, trace_noise)
    y = y + drift.dy + _smooth_noise(rng, u, trace_noise)

    contact = np.ones(total, dtype=bool)
    stroke_of = np.zeros(total, dtype=int)
    local = np.zeros(total)
    pos = 0
    for s in range(n_strokes):
        m = int(per_stroke[s])
        stroke_of[pos: pos + m] = s
        local[pos: pos + m] = np.linspace(0.0, 1.0, m)
        pos += m
        if s < n_strokes - 1:
            contact[pos: pos + p.gap_samples] = False
            pos += p.gap_samples

    f = np.zeros(total)
    wiggle = _smooth_noise(rng, u, force_noise)
    for s in range(n_strokes):
        mask = contact & (stroke_of == s)
        env = force_base[s % len(force_base)] + force_bump[s % len(force_bump)] * np.sin(
            np.pi * local[mask] * force_freq[s % len(force_freq)]
        )
        f[mask] = env * drift.force_scale + drift.force_offset + wiggle[mask]
    f = np.clip(f, 0.005, None)
    f[~contact] = 0.0

    t = np.arange(total) / p.sample_rate
    return {
        "sample_rate_hz": p.sample_rate,
        "task": task,
        "user": user_label,
        "session_day": session_day,
        "samples": [
            {"t": float(t[i]), "x": float(x[i]), "y": float(y[i]),
             "f": float(f[i]), "contact": bool(contact[i])}
            for i in range(total)
        ],
    }


def gen_genuine(
    profile: UserProfile,
    n: int,
    session: int = 1,
    user_label: str | None = None,
) -> list[dict]:
    """n genuine trace documents; day-2 sessions add the user's systematic
    drift vector on top of per-trace jitter."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = profile.params
    drift = _day2_drift(profile) if session >= 2 else _Drift()
    traces = []
    for i in range(n):
        rng = _stream(_JITTER, profile.seed, session, i)
        tempo = profile.n_samples * drift.tempo_scale
        n_contact = max(8, int(round(tempo * (1.0 + rng.normal() * p.jitter_tempo))))
        traces.append(
            _render(
                profile,
                rng,
                n_contact=n_contact,
                drift=drift,
                force_base=profile.force_base,
                force_bump=profile.force_bump,
                force_freq=profile.force_freq,
                trace_noise=p.jitter_pos,
                force_noise=p.jitter_force,
                task=profile.task,
                session_day=session,
                user_label=user_label,
            )
        )
    return traces


def gen_forgery(
    victim: UserProfile,
    forger: UserProfile,
    index: int = 0,
    user_label: str | None = None,
) -> dict:
    """One shape-accurate forgery of the victim by the forger.

    The trajectory follows the victim's base path within a small tracing
    tolerance; tempo, force envelope and jitter spectrum are the forger's.
    """
    if victim.seed == forger.seed:
        raise ValueError("cannot forge your own password")
    p = victim.params
    rng = _stream(_FORGERY, forger.seed, victim.seed, index)
    tempo = victim.n_samples * p.forger_tempo_factor
    n_contact = max(8, int(round(tempo * (1.0 + rng.normal() * forger.params.jitter_tempo))))
    # the forger presses like themselves, not like the victim
    fb = tuple(forger.force_base)
    bump = tuple(forger.force_bump)
    ffreq = tuple(forger.force_freq)
    return _render(
        victim,
        rng,
        n_contact=n_contact,
        drift=_Drift(),
        force_base=fb,
        force_bump=bump,
        force_freq=ffreq,
        trace_noise=p.forger_trace_error * p.jitter_pos,
        force_noise=forger.params.jitter_force,
        task=victim.task,
        session_day=1,
        user_label=user_label,
    )


def _preset_for(index: int, n_users: int, preset: str) -> str:
    if preset != "mixed":
        return preset
    return "signature-like" if index < (n_users + 1) // 2 else "pattern-like"


def user_seed(master_seed: int, index: int) -> int:
    return master_seed * 1009 + index


def generate_cohort(
    outdir: str | Path,
    n_users: int = 10,
    preset: str = "signature-like",
    seed: int = 0,
    n_day1: int = 20,
    n_day2: int = 10,
    n_forgers: int = 4,
    forgeries_per_forger: int = 5,
    params: SynthParams | None = None,
) -> dict:
    """Write a cohort directory consumable by the evaluation protocol.

    Layout: <user>/day1/genuine/*.json, <user>/day2/genuine/*.json and
    <user>/forgeries/*.json, where user i is forged by the n_forgers
    preceding users (cyclically), several attempts each.
    """
    if preset not in PRESETS + ("mixed",):
        raise ValueError(f"unknown preset {preset!r}")
    if n_users < 2:
        raise ValueError("need at least 2 users for forgeries")
    params = params or SynthParams()
    outdir = Path(outdir)
    profiles = [
        gen_user(user_seed(seed, i), _preset_for(i, n_users, preset), params)
        for i in range(n_users)
    ]
    manifest = {"seed": seed, "preset": preset, "n_users": n_users, "users": []}
    for i, profile in enumerate(profiles):
        uid = f"u{i:02d}"
        manifest["users"].append(
            {"user_id": uid, "seed": profile.seed, "preset": profile.preset,
             "task": profile.task}
        )
        d1 = outdir / uid / "day1" / "genuine"
        d2 = outdir / uid / "day2" / "genuine"
        df = outdir / uid / "forgeries"
        for d in (d1, d2, df):
            d.mkdir(parents=True, exist_ok=True)
        for j, doc in enumerate(gen_genuine(profile, n_day1, session=1, user_label=uid)):
            (d1 / f"t{j:02d}.json").write_text(json.dumps(doc, sort_keys=True))
        for j, doc in enumerate(gen_genuine(profile, n_day2, session=2, user_label=uid)):
            (d2 / f"t{j:02d}.json").write_text(json.dumps(doc, sort_keys=True))
        fi = 0
        for fo in range(1, min(n_forgers, n_users - 1) + 1):
            forger = profiles[(i - fo) % n_users]
            for a in range(forgeries_per_forger):
                doc = gen_forgery(profile, forger, index=a, user_label=uid)
                (df / f"f{fi:02d}.json").write_text(json.dumps(doc, sort_keys=True))
                fi += 1
    (outdir / "cohort.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    return manifest
