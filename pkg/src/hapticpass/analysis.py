"""Password complexity, forging difficulty, and cohort entropy.

Complexity combines four per-user averages, each rescaled by the cohort
maximum for the same metric: stroke count, trajectory self-intersections,
acceleration zero crossings, and medium direction changes (turn magnitude
between pi/6 and pi/4 per sample). Entropy counts distinguishable symbols
per uncorrelated position/force feature across the cohort.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import hamming
from .features import FeatureVector, channel_feature_indices
from .trace import PasswordTrace, StateMatrix, compute_state

MEDIUM_TURN_LOW = np.pi / 6
MEDIUM_TURN_HIGH = np.pi / 4

COMPLEXITY_BUCKETS = ((0.0, 0.5), (0.5, 1.0), (1.0, 1.5), (1.5, float("inf")))

# published reference values; the underlying 29-subject data is unavailable
REFERENCE_FORGING_DIFFICULTY = {
    "note": "published reference; not reproducible without the original study",
    "signature-static": {"[0,0.5)": 111.50, "[0.5,1)": 119.50,
                         "[1,1.5)": 120.11, "[1.5,inf)": 136.00},
    "signature-holding": {"[0,0.5)": 105.67, "[0.5,1)": 114.50,
                          "[1,1.5)": 121.00, "[1.5,inf)": 129.50},
    "pattern-holding": {"[0,0.5)": 107.32, "[0.5,1)": 105.00},
}
REFERENCE_ENTROPY_BITS = {
    "note": "published reference; not reproducible without the original study",
    "haptic-signature": 67.45,
    "alphanumeric": 40.54,
}


@dataclass(frozen=True)
class ComplexityScore:
    user_id: str
    strokes: float               # s-bar
    intersections: float         # x-bar
    accel_crossings: float       # a-bar
    direction_changes: float     # d-bar
    maxima: tuple[float, float, float, float]
    delta: float

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "strokes": self.strokes,
            "intersections": self.intersections,
            "accel_crossings": self.accel_crossings,
            "direction_changes": self.direction_changes,
            "maxima": list(self.maxima),
            "delta": self.delta,
        }


@dataclass(frozen=True)
class EntropyReport:
    selected_indices: tuple[int, ...]
    ranges: np.ndarray
    sigma_max: np.ndarray
    symbol_sizes: np.ndarray
    bits: float

    def to_dict(self) -> dict:
        return {
            "selected_indices": list(self.selected_indices),
            "ranges": self.ranges.tolist(),
            "sigma_max": self.sigma_max.tolist(),
            "symbol_sizes": self.symbol_sizes.tolist(),
            "bits": self.bits,
        }


def count_strokes(trace: PasswordTrace) -> int:
    """Number of maximal contiguous-contact segments."""
    count = 0
    prev = False
    for s in trace.samples:
        if s.contact and not prev:
            count += 1
        prev = s.contact
    return count


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(px, py, qx, qy, rx, ry) -> bool:
    return (
        min(px, qx) <= rx <= max(px, qx) and min(py, qy) <= ry <= max(py, qy)
    )


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1])
    d2 = _cross(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1])
    d3 = _cross(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1])
    d4 = _cross(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 \
            and d3 != 0 and d4 != 0:
        return True
    # collinear touches / overlaps count as a single crossing
    if d1 == 0 and _on_segment(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1]):
        return True
    if d2 == 0 and _on_segment(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1]):
        return True
    if d3 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1]):
        return True
    if d4 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1]):
        return True
    return False


def _contact_segments(trace: PasswordTrace):
    """(stroke_id, seg_index, p, q) for consecutive contact samples."""
    segs = []
    samples = trace.samples
    seg_index = 0
    for a, b in zip(samples, samples[1:]):
        if a.contact and b.contact and a.stroke_id == b.stroke_id:
            if (a.x, a.y) != (b.x, b.y):  # skip degenerate zero-length segments
                segs.append((a.stroke_id, seg_index, (a.x, a.y), (b.x, b.y)))
        seg_index += 1
    return segs


def count_intersections(trace: PasswordTrace) -> int:
    """Transverse crossings among non-adjacent polyline segments.

    All strokes are pooled; consecutive segments of the same stroke and any
    pair sharing an endpoint are excluded, so an ordinary corner is not a
    crossing but an X drawn as two strokes is.
    """
    segs = _contact_segments(trace)
    count = 0
    for i in range(len(segs)):
        si, ii, p1, p2 = segs[i]
        for j in range(i + 1, len(segs)):
            sj, jj, p3, p4 = segs[j]
            if si == sj and abs(ii - jj) == 1:
                continue
            if p1 in (p3, p4) or p2 in (p3, p4):
                continue
            if _segments_intersect(p1, p2, p3, p4):
                count += 1
    return count


def count_accel_zero_crossings(state: StateMatrix) -> int:
    """Strict sign changes in the acceleration channel; zeros carry the
    preceding sign."""
    a = state.channel("a")
    count = 0
    last = 0
    for v in a:
        s = 1 if v > 0 else (-1 if v < 0 else 0)
        if s == 0:
            continue
        if last != 0 and s != last:
            count += 1
        last = s
    return count


def curved_portion(state: StateMatrix) -> int:
    """Samples whose absolute turn rate lies in [pi/6, pi/4]."""
    w = np.abs(state.channel("omega"))
    return int(np.count_nonzero((w >= MEDIUM_TURN_LOW) & (w <= MEDIUM_TURN_HIGH)))


def trace_counts(trace: PasswordTrace) -> tuple[int, int, int, int]:
    state = compute_state(trace)
    return (
        count_strokes(trace),
        count_intersections(trace),
        count_accel_zero_crossings(state),
        curved_portion(state),
    )


def user_mean_counts(traces: list[PasswordTrace]) -> tuple[float, float, float, float]:
    counts = np.array([trace_counts(t) for t in traces], dtype=float)
    return tuple(counts.mean(axis=0))


def cohort_maxima(per_user_means: dict[str, tuple]) -> tuple[float, float, float, float]:
    arr = np.array(list(per_user_means.values()), dtype=float)
    return tuple(arr.max(axis=0))


def complexity(
    user_id: str,
    mean_counts: tuple[float, float, float, float],
    maxima: tuple[float, float, float, float],
) -> ComplexityScore:
    """delta = sum of the four count averages, each over its cohort maximum.

    A zero cohort maximum makes that term 0 (degenerate cohort metric).
    """
    terms = [
        (m / mx if mx > 0 else 0.0) for m, mx in zip(mean_counts, maxima)
    ]
    return ComplexityScore(
        user_id=user_id,
        strokes=mean_counts[0],
        intersections=mean_counts[1],
        accel_crossings=mean_counts[2],
        direction_changes=mean_counts[3],
        maxima=tuple(maxima),
        delta=float(sum(terms)),
    )


def cohort_complexity(training_sets: dict[str, list[PasswordTrace]]) -> list[ComplexityScore]:
    """Complexity of every user against maxima from the same cohort."""
    means = {uid: user_mean_counts(traces) for uid, traces in sorted(training_sets.items())}
    maxima = cohort_maxima(means)
    return [complexity(uid, m, maxima) for uid, m in means.items()]


def complexity_histogram(scores: list[ComplexityScore]) -> dict[str, int]:
    hist = {}
    for lo, hi in COMPLEXITY_BUCKETS:
        label = f"[{lo:g},{hi:g})" if hi != float("inf") else f"[{lo:g},inf)"
        hist[label] = sum(1 for s in scores if lo <= s.delta < hi)
    return hist


def forging_difficulty(tpl: hamming.HammingTemplate, forgeries: list[FeatureVector]) -> int:
    """Smallest deviation count any forgery achieves against the template."""
    if not forgeries:
        raise ValueError("empty forgery set")
    return min(hamming.hamming_distance(f, tpl).distance for f in forgeries)


POSITION_FORCE_CHANNELS = ("x", "y", "f")


def _position_force_indices() -> np.ndarray:
    return np.concatenate(
        [channel_feature_indices(c) for c in POSITION_FORCE_CHANNELS]
    )


def password_entropy(
    cohort: dict[str, np.ndarray],
    correlation_limit: float = 0.3,
    eps_sigma: float = 1e-6,
) -> EntropyReport:
    """Bits of distinguishable-symbol space over uncorrelated
    position/force features.

    cohort maps user id -> (n_vectors, 184) feature matrix. Only the x, y
    and f channel features enter (the derived channels are functions of
    position). Features whose mean absolute correlation with the other
    candidates exceeds the limit are dropped; survivors contribute
    log2(R_i / (3 sigma_i_max)) bits when that symbol count exceeds 1.
    """
    if len(cohort) < 2:
        raise ValueError("need at least 2 users")
    mats = {uid: np.atleast_2d(np.asarray(m, dtype=float)) for uid, m in cohort.items()}
    for uid, m in mats.items():
        if m.shape[0] < 2:
            raise ValueError(f"user {uid!r} needs at least 2 vectors")
    idx = _position_force_indices()
    pooled = np.vstack([m[:, idx] for m in mats.values()])
    if np.allclose(pooled, pooled[0]):
        raise ValueError("degenerate cohort: all vectors identical")

    # zero-variance features measure no linear relationship; correlation 0
    std = pooled.std(axis=0)
    centered = pooled - pooled.mean(axis=0)
    safe_std = np.where(std > 0, std, 1.0)
    z = centered / safe_std
    corr = (z.T @ z) / len(pooled)
    corr[std == 0, :] = 0.0
    corr[:, std == 0] = 0.0
    np.fill_diagonal(corr, 0.0)
    mean_abs_corr = np.abs(corr).sum(axis=1) / (len(idx) - 1)
    survivors = mean_abs_corr <= correlation_limit

    sel = idx[survivors]
    ranges = pooled[:, survivors].max(axis=0) - pooled[:, survivors].min(axis=0)
    per_user_std = np.vstack([m[:, sel].std(axis=0) for m in mats.values()])
    sigma_max = np.maximum(per_user_std.max(axis=0), eps_sigma)
    symbols = ranges / (3.0 * sigma_max)
    # a feature with fewer than one distinguishable symbol carries no bits
    bits = float(np.log2(np.where(symbols > 1.0, symbols, 1.0)).sum())
    return EntropyReport(
        selected_indices=tuple(int(i) for i in sel),
        ranges=ranges,
        sigma_max=sigma_max,
        symbol_sizes=symbols,
        bits=bits,
    )


def complexity_report_json(scores: list[ComplexityScore]) -> str:
    return json.dumps(
        {
            "users": [s.to_dict() for s in scores],
            "histogram": complexity_histogram(scores),
            "reference_forging_difficulty": REFERENCE_FORGING_DIFFICULTY,
        },
        sort_keys=True,
        indent=2,
    )


def complexity_report_markdown(scores: list[ComplexityScore]) -> str:
    hist = complexity_histogram(scores)
    lines = [
        "# Password complexity",
        "",
        "| user | strokes | intersections | accel crossings | medium turns | delta |",
        "|---|---|---|---|---|---|",
    ]
    for s in scores:
        lines.append(
            f"| {s.user_id} | {s.strokes:.2f} | {s.intersections:.2f} | "
            f"{s.accel_crossings:.2f} | {s.direction_changes:.2f} | {s.delta:.3f} |"
        )
    lines += ["", "## Histogram", ""]
    for label, n in hist.items():
        lines.append(f"- {label}: {n}")
    return "\n".join(lines) + "\n"


def entropy_report_json(report: EntropyReport) -> str:
    doc = report.to_dict()
    doc["reference_bits"] = REFERENCE_ENTROPY_BITS
    return json.dumps(doc, sort_keys=True, indent=2)
