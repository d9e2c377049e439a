"""184-dimensional MODWT sub-band feature vectors.

Each of the 8 state channels is decomposed to 5 levels; per channel we take
mean/std/max of absolute coefficients in every band plus adjacent-band mean
ratios, giving 23 numbers per channel in a frozen order. The mapping is
deliberately non-invertible: only absolute-value statistics survive, so a
stored vector cannot reproduce the originating trace.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .trace import CHANNELS, StateMatrix
from .wavelet import ModwtPyramid, canonical_name, modwt

LAYOUT_VERSION = "v1"
FEATURES_PER_CHANNEL = 23
FEATURE_LENGTH = FEATURES_PER_CHANNEL * len(CHANNELS)  # 184

PER_CHANNEL_LABELS = tuple(
    [f"W{i}_{s}" for i in range(1, 5) for s in ("absmean", "absstd", "absmax", "ratio")]
    + ["W5_absmean", "W5_absstd", "W5_absmax", "W5_ratio"]
    + ["V5_absmean", "V5_absstd", "V5_absmax"]
)

FEATURE_LABELS = tuple(
    f"{ch}.{lab}" for ch in CHANNELS for lab in PER_CHANNEL_LABELS
)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray  # shape (FEATURE_LENGTH,)
    wavelet: str
    layout: str = LAYOUT_VERSION

    def __post_init__(self):
        if self.values.shape != (FEATURE_LENGTH,):
            raise ValueError(f"feature vector must have length {FEATURE_LENGTH}")

    def to_json(self) -> str:
        return json.dumps(
            {"layout": self.layout, "wavelet": self.wavelet,
             "values": self.values.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str | dict) -> "FeatureVector":
        doc = json.loads(text) if isinstance(text, str) else text
        if doc.get("layout") != LAYOUT_VERSION:
            raise ValueError(
                f"unsupported feature layout {doc.get('layout')!r}, "
                f"expected {LAYOUT_VERSION!r}"
            )
        values = np.asarray(doc["values"], dtype=float)
        return cls(values=values, wavelet=canonical_name(doc["wavelet"]))


def _ratio(num: float, den: float) -> float:
    # a silent band carries no content; define its ratio as 0, not inf
    return num / den if den > 0.0 else 0.0


def subband_stats(p: ModwtPyramid) -> np.ndarray:
    """23 per-channel statistics of a depth-5 pyramid.

    For detail bands 1..4: mean/std/max of |W_j| plus mean|W_j|/mean|W_j+1|;
    band 5 ratios against mean|V_5|; the smooth band contributes its own
    mean/std/max of absolute values. Std is the population form.
    """
    if p.levels != 5:
        raise ValueError("feature layout requires a depth-5 pyramid")
    abs_bands = [np.abs(b) for b in p.details] + [np.abs(p.smooth)]
    means = [float(np.mean(b)) for b in abs_bands]
    out = np.empty(FEATURES_PER_CHANNEL)
    pos = 0
    for i in range(5):
        band = abs_bands[i]
        out[pos] = means[i]
        out[pos + 1] = float(np.std(band))
        out[pos + 2] = float(np.max(band))
        out[pos + 3] = _ratio(means[i], means[i + 1])
        pos += 4
    smooth = abs_bands[5]
    out[pos] = means[5]
    out[pos + 1] = float(np.std(smooth))
    out[pos + 2] = float(np.max(smooth))
    return out


def extract_features(state: StateMatrix, wavelet: str, levels: int = 5) -> FeatureVector:
    """Concatenate per-channel sub-band statistics in fixed channel order."""
    name = canonical_name(wavelet)
    parts = [
        subband_stats(modwt(state.channels[ci], name, levels))
        for ci in range(len(CHANNELS))
    ]
    values = np.concatenate(parts)
    values.setflags(write=False)
    return FeatureVector(values=values, wavelet=name)


def channel_feature_indices(channel: str) -> np.ndarray:
    """Flat feature indices belonging to one named channel."""
    ci = CHANNELS.index(channel)
    return np.arange(ci * FEATURES_PER_CHANNEL, (ci + 1) * FEATURES_PER_CHANNEL)
