"""Deviation-count (Hamming) template matching with mean-shift adaptation.

The template is a robust per-dimension center and spread: outlier feature
instances beyond 2 sigma of the raw training statistics are discarded once,
and the statistics recomputed from the survivors. A probe is normalized by
the robust statistics and scored by how many dimensions deviate beyond a
threshold T_f; acceptance compares that count to an integer threshold.
Accepted probes pull the center toward themselves at rate eta while the
spread stays frozen (it encodes the enrollment-time size of the user's
password interval, assumed stable over time).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .config import PipelineConfig
from .features import FEATURE_LENGTH, LAYOUT_VERSION, FeatureVector

OK = "OK"
RETRAIN_REQUIRED = "RETRAIN_REQUIRED"


class HammingResult(NamedTuple):
    distance: int
    accepted: bool


@dataclass(frozen=True)
class DriftStatus:
    status: str
    value: float
    threshold: float


@dataclass(frozen=True)
class HammingTemplate:
    user_id: str
    wavelet: str
    mu: np.ndarray                # robust center
    sigma: np.ndarray             # robust spread, floored
    initial_mean: np.ndarray      # frozen enrollment-time center
    feature_threshold: float      # T_f
    distance_threshold: int       # T_DH
    adapt_rate: float             # eta
    drift_threshold: float
    update_count: int = 0
    layout: str = LAYOUT_VERSION

    def __post_init__(self):
        if not 0 <= self.distance_threshold <= FEATURE_LENGTH:
            raise ValueError("distance threshold out of range")
        if not 0.0 <= self.adapt_rate <= 1.0:
            raise ValueError("adapt rate must be in [0, 1]")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma must be strictly positive")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "method": "hamming",
            "user_id": self.user_id,
            "wavelet": self.wavelet,
            "layout": self.layout,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "initial_mean": self.initial_mean.tolist(),
            "feature_threshold": self.feature_threshold,
            "distance_threshold": self.distance_threshold,
            "adapt_rate": self.adapt_rate,
            "drift_threshold": self.drift_threshold,
            "update_count": self.update_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HammingTemplate":
        if doc.get("layout") != LAYOUT_VERSION:
            raise ValueError(
                f"template layout {doc.get('layout')!r} does not match "
                f"{LAYOUT_VERSION!r}; re-enrollment required"
            )
        return cls(
            user_id=doc["user_id"],
            wavelet=doc["wavelet"],
            mu=np.asarray(doc["mu"], dtype=float),
            sigma=np.asarray(doc["sigma"], dtype=float),
            initial_mean=np.asarray(doc["initial_mean"], dtype=float),
            feature_threshold=float(doc["feature_threshold"]),
            distance_threshold=int(doc["distance_threshold"]),
            adapt_rate=float(doc["adapt_rate"]),
            drift_threshold=float(doc["drift_threshold"]),
            update_count=int(doc.get("update_count", 0)),
        )


def robust_stats(training, eps_sigma: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Single-pass 2-sigma outlier rejection, then recomputed mean/std.

    Instances with |value - mu| >= 2 sigma are discarded per dimension; the
    rule runs exactly once (no iteration to a fixpoint). Dimensions whose
    instances are all discarded fall back to the raw statistics. Stds are
    population form and floored at eps_sigma.
    """
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, float)
            for v in training]
    mat = np.vstack(rows)
    if mat.shape[0] < 3:
        raise ValueError("need at least 3 training vectors")
    mu = mat.mean(axis=0)
    sigma = mat.std(axis=0)
    keep = np.abs(mat - mu) < 2.0 * sigma
    n_keep = keep.sum(axis=0)
    safe = np.maximum(n_keep, 1)
    kept = np.where(keep, mat, 0.0)
    mu_hat = kept.sum(axis=0) / safe
    var_hat = (np.where(keep, (mat - mu_hat) ** 2, 0.0)).sum(axis=0) / safe
    sigma_hat = np.sqrt(var_hat)
    empty = n_keep == 0
    mu_hat = np.where(empty, mu, mu_hat)
    sigma_hat = np.where(empty, sigma, sigma_hat)
    return mu_hat, np.maximum(sigma_hat, eps_sigma)


def deviation_counts(probes: np.ndarray, mu, sigma, t_f: float) -> np.ndarray:
    """d_H for a batch of probes: dimensions with |(p - mu)/sigma| > t_f."""
    z = np.abs((np.atleast_2d(probes) - mu) / sigma)
    return (z > t_f).sum(axis=1)


def hamming_distance(probe: FeatureVector, tpl: HammingTemplate) -> HammingResult:
    """Count of deviating dimensions; accept when strictly below T_DH."""
    if probe.layout != tpl.layout or probe.wavelet != tpl.wavelet:
        raise ValueError(
            f"probe layout/wavelet ({probe.layout}, {probe.wavelet}) does not "
            f"match template ({tpl.layout}, {tpl.wavelet})"
        )
    if not np.all(np.isfinite(probe.values)):
        raise ValueError("non-finite probe")
    d = int(deviation_counts(probe.values, tpl.mu, tpl.sigma, tpl.feature_threshold)[0])
    return HammingResult(distance=d, accepted=d < tpl.distance_threshold)


def adaptive_mean_update(tpl: HammingTemplate, probe: FeatureVector) -> HammingTemplate:
    """Shift the center toward an accepted probe: mu += eta * (probe - mu)."""
    result = hamming_distance(probe, tpl)
    if not result.accepted:
        raise ValueError("adaptive_mean_update requires an accepted probe")
    mu = tpl.mu + tpl.adapt_rate * (probe.values - tpl.mu)
    return replace(tpl, mu=mu, update_count=tpl.update_count + 1)


def drift_value(tpl: HammingTemplate) -> float:
    """RMS sigma-normalized shift of the center since enrollment."""
    z = (tpl.mu - tpl.initial_mean) / tpl.sigma
    return float(np.sqrt(np.mean(z * z)))


def drift_check(tpl: HammingTemplate) -> DriftStatus:
    value = drift_value(tpl)
    status = RETRAIN_REQUIRED if value > tpl.drift_threshold else OK
    return DriftStatus(status=status, value=value, threshold=tpl.drift_threshold)


def genuine_loo_scores(vectors: np.ndarray, t_f: float, eps_sigma: float) -> list[int]:
    """Hold each vector out, refit robust stats on the rest, count deviations."""
    n = len(vectors)
    scores = []
    for i in range(n):
        rest = np.delete(vectors, i, axis=0)
        mu, sigma = robust_stats(rest, eps_sigma)
        scores.append(int(deviation_counts(vectors[i], mu, sigma, t_f)[0]))
    return scores


def enroll(
    user_id: str,
    vectors: list[FeatureVector],
    cfg: PipelineConfig,
    *,
    distance_threshold: int,
    wavelet: str | None = None,
) -> HammingTemplate:
    """Build a template from enrollment vectors with an externally
    calibrated count threshold."""
    if not vectors:
        raise ValueError("no enrollment vectors")
    wavelet = wavelet or vectors[0].wavelet
    mu, sigma = robust_stats(vectors, cfg.eps_sigma)
    return HammingTemplate(
        user_id=user_id,
        wavelet=wavelet,
        mu=mu,
        sigma=sigma,
        initial_mean=mu.copy(),
        feature_threshold=cfg.feature_threshold,
        distance_threshold=distance_threshold,
        adapt_rate=cfg.adapt_rate,
        drift_threshold=cfg.hamming_drift_threshold,
    )
