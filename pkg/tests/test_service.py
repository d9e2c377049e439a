import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hapticpass import synth
from hapticpass.config import PipelineConfig
from hapticpass.service import (AlreadyEnrolled, AuthService, NotEnrolled,
                                create_app)
from hapticpass.store import (SchemaMismatch, StoreError, UnknownUser,
                              UserRecord, UserStore)

CFG = PipelineConfig()


def traces_for(seed, n, session=1):
    profile = synth.gen_user(seed, "signature-like")
    return synth.gen_genuine(profile, n, session=session)


def forgery_against(victim_seed, forger_seed):
    victim = synth.gen_user(victim_seed, "signature-like")
    forger = synth.gen_user(forger_seed, "signature-like")
    return synth.gen_forgery(victim, forger)


@pytest.fixture()
def service(tmp_path):
    return AuthService(UserStore(tmp_path / "store"), CFG)


@pytest.fixture(scope="module")
def enrolled_service(tmp_path_factory):
    svc = AuthService(UserStore(tmp_path_factory.mktemp("store")), CFG)
    svc.create_user("alice", "signature-static")
    for doc in traces_for(21, 10):
        svc.enroll("alice", doc)
    svc.create_user("bob", "signature-static")
    for doc in traces_for(22, 10):
        svc.enroll("bob", doc)
    return svc


class TestStore:
    def test_create_get_save_round_trip(self, tmp_path):
        store = UserStore(tmp_path)
        store.create_user("u1", "signature-static")
        rec = store.get("u1")
        assert rec.status == "pending"
        rec.audit.append({"x": 1})
        store.save(rec)
        assert store.get("u1").audit == [{"x": 1}]
        assert store.list_users() == ["u1"]

    def test_unknown_user(self, tmp_path):
        with pytest.raises(UnknownUser):
            UserStore(tmp_path).get("ghost")

    def test_duplicate_create_rejected(self, tmp_path):
        store = UserStore(tmp_path)
        store.create_user("u1", "signature-static")
        with pytest.raises(StoreError, match="exists"):
            store.create_user("u1", "signature-static")

    def test_schema_version_enforced(self, tmp_path):
        doc = UserRecord(user_id="u", task="signature-static").to_dict()
        doc["schema_version"] = 0
        with pytest.raises(SchemaMismatch, match="migration"):
            UserStore(tmp_path).import_user(doc)


class TestEnrollment:
    def test_progress_and_flip_to_enrolled(self, service):
        service.create_user("u", "signature-static")
        docs = traces_for(30, 10)
        for i, doc in enumerate(docs[:3]):
            status = service.enroll("u", doc)
        assert status["status"] == "pending"
        assert status["staged"] == 3
        for doc in docs[3:]:
            status = service.enroll("u", doc)
        assert status["status"] == "enrolled"
        assert sorted(status["methods"]) == ["euclidean", "hamming"]

    def test_short_trace_rejected_count_unchanged(self, service):
        service.create_user("u", "signature-static")
        doc = traces_for(31, 1)[0]
        service.enroll("u", doc)
        bad = {"sample_rate_hz": 60, "task": "signature-static",
               "samples": doc["samples"][:5]}
        from hapticpass.trace import TraceTooShort

        with pytest.raises(TraceTooShort):
            service.enroll("u", bad)
        assert service.status("u")["staged"] == 1

    def test_already_enrolled_rejected(self, enrolled_service):
        with pytest.raises(AlreadyEnrolled):
            enrolled_service.enroll("alice", traces_for(33, 1)[0])

    def test_raw_traces_never_stored(self, enrolled_service):
        raw = json.dumps(enrolled_service.store.export_user("alice"))
        assert "samples" not in raw
        assert "contact" not in raw


class TestVerify:
    def test_genuine_accepted(self, enrolled_service):
        probe = traces_for(21, 12)[11]
        for method in ("euclidean", "hamming"):
            result = enrolled_service.verify("alice", probe, method, adapt=False)
            assert result["accepted"], method
            assert result["distance"] < result["threshold"]

    def test_forgery_rejected(self, enrolled_service):
        probe = forgery_against(21, 22)
        for method in ("euclidean", "hamming"):
            result = enrolled_service.verify("alice", probe, method, adapt=False)
            assert not result["accepted"], method

    def test_adapt_false_leaves_template_untouched(self, enrolled_service):
        before = json.dumps(enrolled_service.store.get("alice").templates,
                            sort_keys=True)
        enrolled_service.verify("alice", traces_for(21, 13)[12], "euclidean",
                                adapt=False)
        after = json.dumps(enrolled_service.store.get("alice").templates,
                           sort_keys=True)
        assert before == after

    def test_adapt_true_updates_template(self, enrolled_service):
        before = enrolled_service.store.get("alice").templates["hamming"]
        probe = traces_for(21, 14)[13]
        result = enrolled_service.verify("alice", probe, "hamming", adapt=True)
        assert result["accepted"] and result["adapted"]
        after = enrolled_service.store.get("alice").templates["hamming"]
        assert before["mu"] != after["mu"]
        assert before["sigma"] == after["sigma"]

    def test_not_enrolled(self, service):
        service.create_user("u", "signature-static")
        with pytest.raises(NotEnrolled):
            service.verify("u", traces_for(35, 1)[0], "euclidean", False)

    def test_audit_log_grows_per_verify(self, enrolled_service):
        before = len(enrolled_service.store.get("bob").audit)
        probe = traces_for(22, 11)[10]
        enrolled_service.verify("bob", probe, "euclidean", False)
        enrolled_service.verify("bob", probe, "hamming", False)
        audit = enrolled_service.store.get("bob").audit
        assert len(audit) == before + 2
        assert {"method", "distance", "accepted", "adapted", "drift",
                "timestamp", "threshold"} <= set(audit[-1])

    def test_concurrent_adaptive_verifies_never_lose_updates(self, tmp_path):
        svc = AuthService(UserStore(tmp_path / "s"), CFG)
        svc.create_user("u", "signature-static")
        for doc in traces_for(40, 10):
            svc.enroll("u", doc)
        probes = traces_for(40, 18)[10:]
        errors = []

        def work(doc):
            try:
                svc.verify("u", doc, "euclidean", adapt=True)
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(d,)) for d in probes]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        rec = svc.store.get("u")
        accepted_adapts = sum(1 for e in rec.audit if e["adapted"])
        assert rec.templates["euclidean"]["update_count"] == accepted_adapts
        assert len(rec.audit) == len(probes)


class TestExportImport:
    def test_round_trip_byte_identical(self, enrolled_service, tmp_path):
        doc = enrolled_service.export_user("alice")
        other = AuthService(UserStore(tmp_path / "other"), CFG)
        other.import_user(doc)
        again = other.export_user("alice")
        assert json.dumps(doc, sort_keys=True) == json.dumps(again, sort_keys=True)

    def test_tampered_weights_rejected(self, enrolled_service, tmp_path):
        doc = json.loads(json.dumps(enrolled_service.export_user("alice")))
        doc["templates"]["euclidean"]["weights"] = [0.5] * 184
        other = AuthService(UserStore(tmp_path / "other2"), CFG)
        with pytest.raises(ValueError, match="simplex"):
            other.import_user(doc)

    def test_old_layout_rejected(self, enrolled_service, tmp_path):
        doc = json.loads(json.dumps(enrolled_service.export_user("alice")))
        doc["templates"]["hamming"]["layout"] = "v0"
        other = AuthService(UserStore(tmp_path / "other3"), CFG)
        with pytest.raises(ValueError, match="layout"):
            other.import_user(doc)


class TestHttpApi:
    @pytest.fixture()
    def client(self, tmp_path):
        return TestClient(create_app(tmp_path / "store", CFG))

    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_full_flow(self, client):
        assert client.post(
            "/users", json={"user_id": "u", "task": "signature-static"}
        ).status_code == 201
        docs = traces_for(50, 11)
        for doc in docs[:10]:
            r = client.post("/users/u/enroll", json=doc)
            assert r.status_code == 200, r.text
        status = client.get("/users/u/status").json()
        assert status["status"] == "enrolled"
        r = client.post(
            "/users/u/verify",
            json={"trace": docs[10], "method": "euclidean", "adapt": False},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["accepted"] is True
        assert body["drift"] == "OK"

    def test_error_codes(self, client):
        assert client.get("/users/ghost/status").status_code == 404
        assert client.post("/users", json={}).status_code == 400
        client.post("/users", json={"user_id": "u2"})
        bad = {"sample_rate_hz": 60,
               "samples": [{"t": 0, "x": 0, "y": 0, "f": -1, "contact": True}]}
        r = client.post("/users/u2/enroll", json=bad)
        assert r.status_code == 400
        assert "force" in r.json()["detail"]
        r = client.post("/users/u2/verify", json={"trace": bad})
        assert r.status_code == 409  # not enrolled yet

    def test_export_import_endpoints(self, client):
        client.post("/users", json={"user_id": "u3", "task": "signature-static"})
        for doc in traces_for(51, 10):
            client.post("/users/u3/enroll", json=doc)
        exported = client.get("/users/u3/export").json()
        # same id re-import without overwrite conflicts
        assert client.post("/users/u3/import", json=exported).status_code == 409
        assert client.post(
            "/users/u3/import", params={"overwrite": "true"}, json=exported
        ).status_code == 200
        exported["templates"]["euclidean"]["weights"] = [1.0] * 184
        r = client.post("/users/u3/import", params={"overwrite": "true"},
                        json=exported)
        assert r.status_code == 400
