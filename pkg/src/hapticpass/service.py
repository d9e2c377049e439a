"""Local authentication service: enrollment, verification, import/export.

AuthService holds the business logic over a UserStore; create_app wraps it
in a local HTTP JSON API. Requests for different users run fully in
parallel; requests for one user serialize through that user's lock, so a
verify decision and its adaptive update are atomic.
"""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import euclidean, hamming
from .config import PipelineConfig
from .evaluation import calibrate_count_threshold, calibrate_threshold, run_protocol
from .features import FeatureVector, extract_features
from .store import StoreError, UnknownUser, UserRecord, UserStore
from .trace import TraceError, compute_state, parse_trace, truncate_trailing


class ServiceError(ValueError):
    pass


class NotEnrolled(ServiceError):
    pass


class AlreadyEnrolled(ServiceError):
    pass


class AuthService:
    def __init__(self, store: UserStore, cfg: PipelineConfig | None = None):
        self.store = store
        self.cfg = cfg or PipelineConfig()

    # -- helpers ----------------------------------------------------------

    def _wavelets_for(self, task: str) -> tuple[str, ...]:
        needed = {self.cfg.wavelet_for_task(task), self.cfg.wavelet_hamming}
        return tuple(sorted(needed))

    def _extract(self, trace_doc, task: str) -> dict[str, list[float]]:
        trace = truncate_trailing(parse_trace(trace_doc))
        state = compute_state(trace)
        return {
            w: extract_features(state, w, self.cfg.levels).values.tolist()
            for w in self._wavelets_for(task)
        }

    def _imposter_pool(self, user_id: str, wavelet: str) -> np.ndarray | None:
        rows = []
        for other in self.store.list_users():
            if other == user_id:
                continue
            rec = self.store.get(other)
            rows.extend(rec.enrollment.get(wavelet, []))
        return np.asarray(rows, dtype=float) if rows else None

    # -- operations -------------------------------------------------------

    def create_user(self, user_id: str, task: str) -> dict:
        rec = self.store.create_user(user_id, task)
        return self.status(rec.user_id)

    def status(self, user_id: str) -> dict:
        rec = self.store.get(user_id)
        return {
            "user_id": rec.user_id,
            "task": rec.task,
            "status": rec.status,
            "staged": rec.staged_count(),
            "needed": self.cfg.enroll_count,
            "methods": sorted(m for m, t in rec.templates.items() if t),
            "verify_count": len(rec.audit),
        }

    def enroll(self, user_id: str, trace_doc) -> dict:
        with self.store.lock(user_id):
            rec = self.store.get(user_id)
            if rec.enrolled:
                raise AlreadyEnrolled(f"user {user_id!r} is already enrolled")
            feats = self._extract(trace_doc, rec.task)
            for wavelet, row in feats.items():
                rec.staged.setdefault(wavelet, []).append(row)
            if rec.staged_count() >= self.cfg.enroll_count:
                self._fit_templates(rec)
            self.store.save(rec)
            return self.status(user_id)

    def _fit_templates(self, rec: UserRecord) -> None:
        cfg = self.cfg
        e_wavelet = cfg.wavelet_for_task(rec.task)
        h_wavelet = cfg.wavelet_hamming

        own = np.asarray(rec.staged[e_wavelet], dtype=float)
        mu, sigma = euclidean.fit_normalizer(own, cfg.eps_sigma)
        weights = euclidean.optimize_weights(
            (own - mu) / sigma,
            tol=cfg.optimizer_tol,
            max_iter=cfg.optimizer_max_iter,
            weight_floor=cfg.weight_floor,
        )
        genuine = euclidean.genuine_loo_scores(
            own, mu, sigma, weights, min(cfg.summin_k, len(own) - 1)
        )
        pool = self._imposter_pool(rec.user_id, e_wavelet)
        imp_scores = None
        if pool is not None:
            norm_t = (own - mu) / sigma
            probes = (pool - mu) / sigma
            imp_scores = [
                euclidean.sum_min(
                    np.sqrt((((norm_t - p) * weights) ** 2).sum(axis=1)),
                    min(cfg.summin_k, len(norm_t)),
                )
                for p in probes
            ]
        threshold = calibrate_threshold(genuine, imp_scores, cfg.fmr_target)
        e_tpl = euclidean.enroll(
            rec.user_id,
            [FeatureVector(values=r, wavelet=e_wavelet) for r in own],
            cfg,
            threshold=threshold,
            wavelet=e_wavelet,
        )

        own_h = np.asarray(rec.staged[h_wavelet], dtype=float)
        genuine_h = hamming.genuine_loo_scores(
            own_h, cfg.feature_threshold, cfg.eps_sigma
        )
        mu_h, sigma_h = hamming.robust_stats(own_h, cfg.eps_sigma)
        pool_h = self._imposter_pool(rec.user_id, h_wavelet)
        imp_h = None
        if pool_h is not None:
            imp_h = hamming.deviation_counts(
                pool_h, mu_h, sigma_h, cfg.feature_threshold
            )
        t_dh = calibrate_count_threshold(genuine_h, imp_h, cfg.fmr_target)
        h_tpl = hamming.enroll(
            rec.user_id,
            [FeatureVector(values=r, wavelet=h_wavelet) for r in own_h],
            cfg,
            distance_threshold=t_dh,
            wavelet=h_wavelet,
        )

        rec.templates = {"euclidean": e_tpl.to_dict(), "hamming": h_tpl.to_dict()}
        rec.enrollment = rec.staged
        rec.staged = {}
        rec.status = "enrolled"

    def verify(self, user_id: str, trace_doc, method: str = "euclidean",
               adapt: bool = False) -> dict:
        if method not in ("euclidean", "hamming"):
            raise ServiceError(f"unknown method {method!r}")
        with self.store.lock(user_id):
            rec = self.store.get(user_id)
            if not rec.enrolled:
                raise NotEnrolled(f"user {user_id!r} is not enrolled")
            tpl_doc = rec.templates.get(method)
            if not tpl_doc:
                raise ServiceError(f"no {method} template for user {user_id!r}")
            if method == "euclidean":
                tpl = euclidean.EuclideanTemplate.from_dict(tpl_doc)
            else:
                tpl = hamming.HammingTemplate.from_dict(tpl_doc)
            feats = self._extract(trace_doc, rec.task)
            probe = FeatureVector(
                values=np.asarray(feats[tpl.wavelet], dtype=float),
                wavelet=tpl.wavelet,
            )
            adapted = False
            if method == "euclidean":
                res = euclidean.matching_distance(probe, tpl)
                distance, accepted = res.distance, res.accepted
                threshold = tpl.threshold
                if accepted and adapt:
                    tpl = euclidean.adaptive_update(
                        tpl, probe,
                        refresh_stats=self.cfg.refresh_stats_on_update,
                        cfg=self.cfg,
                    )
                    adapted = True
                drift = euclidean.drift_check(tpl)
            else:
                d, accepted = hamming.hamming_distance(probe, tpl)
                distance, threshold = float(d), float(tpl.distance_threshold)
                if accepted and adapt:
                    tpl = hamming.adaptive_mean_update(tpl, probe)
                    adapted = True
                drift = hamming.drift_check(tpl)
            if adapted:
                rec.templates[method] = tpl.to_dict()
            entry = {
                "timestamp": time.time(),
                "method": method,
                "distance": distance,
                "threshold": threshold,
                "accepted": accepted,
                "adapted": adapted,
                "drift": drift.status,
            }
            rec.audit.append(entry)
            self.store.save(rec)
            return {
                "user_id": user_id,
                "accepted": accepted,
                "distance": distance,
                "threshold": threshold,
                "adapted": adapted,
                "drift": drift.status,
                "drift_value": drift.value,
            }

    def export_user(self, user_id: str) -> dict:
        return self.store.export_user(user_id)

    def import_user(self, doc: dict, overwrite: bool = False) -> dict:
        rec = self.store.import_user(doc, overwrite=overwrite)
        return self.status(rec.user_id)

    def evaluate(self, cohort_dir: str, methods=("euclidean", "hamming"),
                 adaptivity=(False, True)) -> dict:
        report = run_protocol(Path(cohort_dir), self.cfg, methods, adaptivity)
        return {k: v for k, v in report.items() if not k.startswith("_")}


def create_app(store_dir: str | Path, cfg: PipelineConfig | None = None):
    """FastAPI wrapper; payloads use the trace JSON schema verbatim."""
    from fastapi import Body, FastAPI, HTTPException

    service = AuthService(UserStore(store_dir), cfg)
    app = FastAPI(title="hapticpass", version="0.1.0")

    def _wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UnknownUser as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (NotEnrolled, AlreadyEnrolled) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (TraceError, StoreError, ServiceError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/users")
    def list_users():
        return {"users": service.store.list_users()}

    @app.post("/users", status_code=201)
    def create_user(body: dict = Body(...)):
        user_id = body.get("user_id")
        if not user_id:
            raise HTTPException(status_code=400, detail="user_id required")
        return _wrap(service.create_user, user_id, body.get("task", "signature-static"))

    @app.get("/users/{user_id}/status")
    def status(user_id: str):
        return _wrap(service.status, user_id)

    @app.post("/users/{user_id}/enroll")
    def enroll(user_id: str, trace: dict = Body(...)):
        return _wrap(service.enroll, user_id, trace)

    @app.post("/users/{user_id}/verify")
    def verify(user_id: str, body: dict = Body(...)):
        trace = body.get("trace")
        if trace is None:
            raise HTTPException(status_code=400, detail="trace required")
        return _wrap(
            service.verify, user_id, trace,
            body.get("method", "euclidean"), bool(body.get("adapt", False)),
        )

    @app.get("/users/{user_id}/export")
    def export_user(user_id: str):
        return _wrap(service.export_user, user_id)

    @app.post("/users/{user_id}/import")
    def import_user(user_id: str, doc: dict = Body(...), overwrite: bool = False):
        if doc.get("user_id") != user_id:
            raise HTTPException(status_code=400, detail="user_id mismatch")
        try:
            return service.import_user(doc, overwrite=overwrite)
        except UnknownUser as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except StoreError as exc:
            # schema mismatch and duplicates are conflicts, not bad requests
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/admin/evaluate")
    def evaluate(body: dict = Body(...)):
        cohort = body.get("cohort_dir")
        if not cohort or not Path(cohort).exists():
            raise HTTPException(status_code=400, detail="cohort_dir missing or not found")
        return _wrap(
            service.evaluate, cohort,
            tuple(body.get("methods", ("euclidean", "hamming"))),
            tuple(bool(a) for a in body.get("adaptivity", (False, True))),
        )

    return app
