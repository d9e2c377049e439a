"""Weighted-Euclidean template matching with SumMin scoring.

Enrollment fits a per-user normalizer (mean/std of the training vectors) and
a per-dimension weight vector on the probability simplex that minimizes the
sum of pairwise weighted distances between the training vectors, i.e. makes
the user's own vectors maximally self-consistent. A probe is scored by the
sum of its k smallest weighted distances to the enrolled templates, which
tolerates a few bad enrollment samples and users with more than one way of
entering their password.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .config import PipelineConfig
from .features import FEATURE_LENGTH, LAYOUT_VERSION, FeatureVector

OK = "OK"
RETRAIN_REQUIRED = "RETRAIN_REQUIRED"


@dataclass(frozen=True)
class MatchResult:
    distance: float
    accepted: bool
    per_template: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DriftStatus:
    status: str  # OK | RETRAIN_REQUIRED
    value: float
    threshold: float


@dataclass(frozen=True)
class EuclideanTemplate:
    user_id: str
    wavelet: str
    k: int
    threshold: float
    mu: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    templates: np.ndarray           # (N, 184), raw feature space
    initial_templates: np.ndarray   # frozen enrollment-time copy
    drift_threshold: float
    update_count: int = 0
    layout: str = LAYOUT_VERSION

    def __post_init__(self):
        w = self.weights
        if np.any(w < -1e-12) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must lie on the probability simplex")
        if self.templates.shape[1] != FEATURE_LENGTH:
            raise ValueError("template vectors must have the feature length")
        if not 1 <= self.k <= len(self.templates):
            raise ValueError("k must be between 1 and the template count")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "method": "euclidean",
            "user_id": self.user_id,
            "wavelet": self.wavelet,
            "layout": self.layout,
            "k": self.k,
            "threshold": self.threshold,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "weights": self.weights.tolist(),
            "templates": self.templates.tolist(),
            "initial_templates": self.initial_templates.tolist(),
            "drift_threshold": self.drift_threshold,
            "update_count": self.update_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EuclideanTemplate":
        if doc.get("layout") != LAYOUT_VERSION:
            raise ValueError(
                f"template layout {doc.get('layout')!r} does not match "
                f"{LAYOUT_VERSION!r}; re-enrollment required"
            )
        return cls(
            user_id=doc["user_id"],
            wavelet=doc["wavelet"],
            k=int(doc["k"]),
            threshold=float(doc["threshold"]),
            mu=np.asarray(doc["mu"], dtype=float),
            sigma=np.asarray(doc["sigma"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            templates=np.asarray(doc["templates"], dtype=float),
            initial_templates=np.asarray(doc["initial_templates"], dtype=float),
            drift_threshold=float(doc["drift_threshold"]),
            update_count=int(doc.get("update_count", 0)),
        )


def _as_matrix(vectors) -> np.ndarray:
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, float)
            for v in vectors]
    return np.vstack(rows)


def fit_normalizer(training, eps_sigma: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and population std of the training set.

    Stds are floored at eps_sigma so constant dimensions stay divisible.
    """
    mat = _as_matrix(training)
    if mat.shape[0] < 2:
        raise ValueError("need at least 2 training vectors")
    mu = mat.mean(axis=0)
    sigma = np.maximum(mat.std(axis=0), eps_sigma)
    return mu, sigma


def simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w_i >= 0, sum w_i = 1} (sort method)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def pairwise_objective(weights: np.ndarray, sq_diffs: np.ndarray) -> float:
    """sum over pairs of sqrt(sum_m w_m^2 * (F_im - F_jm)^2)."""
    return float(np.sqrt(sq_diffs @ (weights * weights)).sum())


def _objective_and_grad(weights, sq_diffs):
    per_pair = np.sqrt(sq_diffs @ (weights * weights))
    obj = float(per_pair.sum())
    nonzero = per_pair > 0.0
    # subgradient 0 where a pair distance is exactly 0
    grad = ((sq_diffs[nonzero] / per_pair[nonzero, None]).sum(axis=0)) * weights
    return obj, grad


def optimize_weights(
    training: np.ndarray,
    *,
    tol: float = 1e-8,
    max_iter: int = 5000,
    weight_floor: float = 0.0,
) -> np.ndarray:
    """Minimize the pairwise weighted-distance objective on the simplex.

    Projected gradient descent with backtracking line search; the objective
    never increases across iterations. Stops when the improvement drops
    below tol. An optional floor redistributes mass onto starved dimensions
    (renormalized afterwards); the default 0 leaves the optimum untouched.
    """
    mat = np.asarray(training, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 2:
        raise ValueError("need at least 2 training vectors")
    if not np.all(np.isfinite(mat)):
        raise ValueError("non-finite training values")
    n_vec, n_dim = mat.shape
    iu, ju = np.triu_indices(n_vec, k=1)
    sq_diffs = (mat[iu] - mat[ju]) ** 2  # (n_pairs, n_dim)

    w = np.full(n_dim, 1.0 / n_dim)
    obj, grad = _objective_and_grad(w, sq_diffs)
    step = 1.0 / (np.linalg.norm(grad) + 1e-12)
    for _ in range(max_iter):
        improved = False
        trial_step = step
        for _bt in range(50):
            w_new = simplex_projection(w - trial_step * grad)
            obj_new = pairwise_objective(w_new, sq_diffs)
            if obj_new <= obj:
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
        gain = obj - obj_new
        w = w_new
        obj, grad = _objective_and_grad(w, sq_diffs)
        step = trial_step * 2.0  # allow the step to grow back
        if gain < tol:
            break
    if weight_floor > 0.0:
        w = np.maximum(w, weight_floor)
        w = w / w.sum()
    return w


def sum_min(distances: np.ndarray, k: int) -> float:
    """Sum of the k smallest entries."""
    d = np.asarray(distances, dtype=float)
    if not 1 <= k <= len(d):
        raise ValueError("k out of range")
    return float(np.sort(d)[:k].sum())


def _weighted_distances(tpl: EuclideanTemplate, probe: np.ndarray) -> np.ndarray:
    probe_n = (probe - tpl.mu) / tpl.sigma
    templates_n = (tpl.templates - tpl.mu) / tpl.sigma
    diffs = (templates_n - probe_n) * tpl.weights
    return np.sqrt((diffs * diffs).sum(axis=1))


def matching_distance(probe: FeatureVector, tpl: EuclideanTemplate) -> MatchResult:
    """SumMin of the k smallest weighted template distances; accept if < threshold."""
    if probe.layout != tpl.layout or probe.wavelet != tpl.wavelet:
        raise ValueError(
            f"probe layout/wavelet ({probe.layout}, {probe.wavelet}) does not "
            f"match template ({tpl.layout}, {tpl.wavelet})"
        )
    per_template = _weighted_distances(tpl, probe.values)
    d = sum_min(per_template, tpl.k)
    return MatchResult(distance=d, accepted=d < tpl.threshold, per_template=per_template)


def adaptive_update(
    tpl: EuclideanTemplate,
    probe: FeatureVector,
    refresh_stats: bool = False,
    cfg: PipelineConfig | None = None,
) -> EuclideanTemplate:
    """Replace the template farthest from an accepted probe with the probe.

    By default only the template set moves; the normalizer and weights stay
    frozen at their enrollment values. refresh_stats=True refits both from
    the post-replacement set instead (alternative behavior, off by default).
    """
    result = matching_distance(probe, tpl)
    if not result.accepted:
        raise ValueError("adaptive_update requires an accepted probe")
    farthest = int(np.argmax(result.per_template))
    templates = tpl.templates.copy()
    templates[farthest] = probe.values
    updated = replace(tpl, templates=templates, update_count=tpl.update_count + 1)
    if refresh_stats:
        cfg = cfg or PipelineConfig()
        mu, sigma = fit_normalizer(templates, cfg.eps_sigma)
        weights = optimize_weights(
            (templates - mu) / sigma,
            tol=cfg.optimizer_tol,
            max_iter=cfg.optimizer_max_iter,
            weight_floor=cfg.weight_floor,
        )
        updated = replace(updated, mu=mu, sigma=sigma, weights=weights)
    return updated


def mean_intra_distance(tpl: EuclideanTemplate) -> float:
    """Mean pairwise weighted distance within the current template set."""
    t_n = (tpl.templates - tpl.mu) / tpl.sigma
    n = len(t_n)
    iu, ju = np.triu_indices(n, k=1)
    diffs = (t_n[iu] - t_n[ju]) * tpl.weights
    return float(np.sqrt((diffs * diffs).sum(axis=1)).mean())


def drift_value(tpl: EuclideanTemplate) -> float:
    """Mean distance between current and enrollment-time templates, slot by slot."""
    cur = (tpl.templates - tpl.mu) / tpl.sigma
    init = (tpl.initial_templates - tpl.mu) / tpl.sigma
    diffs = (cur - init) * tpl.weights
    return float(np.sqrt((diffs * diffs).sum(axis=1)).mean())


def drift_check(tpl: EuclideanTemplate) -> DriftStatus:
    """Flag re-enrollment when the set has moved too far from its origin."""
    value = drift_value(tpl)
    status = RETRAIN_REQUIRED if value > tpl.drift_threshold else OK
    return DriftStatus(status=status, value=value, threshold=tpl.drift_threshold)


def genuine_loo_scores(
    vectors: np.ndarray, mu, sigma, weights, k: int
) -> list[float]:
    """Hold each enrollment vector out and score it against the rest."""
    n = len(vectors)
    norm = (vectors - mu) / sigma
    scores = []
    for i in range(n):
        rest = np.delete(norm, i, axis=0)
        diffs = (rest - norm[i]) * weights
        d = np.sqrt((diffs * diffs).sum(axis=1))
        scores.append(sum_min(d, min(k, len(rest))))
    return scores


def enroll(
    user_id: str,
    vectors: list[FeatureVector],
    cfg: PipelineConfig,
    *,
    threshold: float,
    wavelet: str | None = None,
) -> EuclideanTemplate:
    """Build a template from enrollment vectors with an externally
    calibrated acceptance threshold."""
    if not vectors:
        raise ValueError("no enrollment vectors")
    wavelet = wavelet or vectors[0].wavelet
    mat = _as_matrix(vectors)
    mu, sigma = fit_normalizer(mat, cfg.eps_sigma)
    weights = optimize_weights(
        (mat - mu) / sigma,
        tol=cfg.optimizer_tol,
        max_iter=cfg.optimizer_max_iter,
        weight_floor=cfg.weight_floor,
    )
    tpl = EuclideanTemplate(
        user_id=user_id,
        wavelet=wavelet,
        k=min(cfg.summin_k, len(vectors)),
        threshold=threshold,
        mu=mu,
        sigma=sigma,
        weights=weights,
        templates=mat.copy(),
        initial_templates=mat.copy(),
        drift_threshold=0.0,
    )
    drift_threshold = cfg.euclidean_drift_factor * mean_intra_distance(tpl)
    return replace(tpl, drift_threshold=drift_threshold)
