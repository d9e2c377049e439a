"""Single-directory document store for user records.

One JSON file per user plus an index, chosen for inspectability and trivial
backup. Only non-invertible feature vectors and fitted templates are ever
written: raw traces never reach disk.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import euclidean, hamming

SCHEMA_VERSION = 1


class StoreError(ValueError):
    pass


class UnknownUser(StoreError):
    pass


class SchemaMismatch(StoreError):
    pass


@dataclass
class UserRecord:
    user_id: str
    task: str
    status: str = "pending"  # pending | enrolled
    staged: dict = field(default_factory=dict)       # wavelet -> feature rows
    enrollment: dict = field(default_factory=dict)   # frozen at enroll time
    templates: dict = field(default_factory=dict)    # method -> template dict
    audit: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def enrolled(self) -> bool:
        return self.status == "enrolled"

    def staged_count(self) -> int:
        if not self.staged:
            return 0
        return min(len(rows) for rows in self.staged.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "user_id": self.user_id,
            "task": self.task,
            "status": self.status,
            "staged": self.staged,
            "enrollment": self.enrollment,
            "templates": self.templates,
            "audit": self.audit,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UserRecord":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"record schema version {version!r} needs migration to "
                f"{SCHEMA_VERSION}; refusing silent acceptance"
            )
        rec = cls(
            user_id=doc["user_id"],
            task=doc["task"],
            status=doc["status"],
            staged=doc.get("staged", {}),
            enrollment=doc.get("enrollment", {}),
            templates=doc.get("templates", {}),
            audit=doc.get("audit", []),
        )
        # enforce template invariants (simplex weights, layout) on ingest
        if rec.templates.get("euclidean"):
            euclidean.EuclideanTemplate.from_dict(rec.templates["euclidean"])
        if rec.templates.get("hamming"):
            hamming.HammingTemplate.from_dict(rec.templates["hamming"])
        if rec.status == "enrolled" and not rec.templates:
            raise StoreError("enrolled record without templates")
        return rec


class UserStore:
    """Directory-backed store with per-user locks for read-modify-write."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._locks: dict[str, threading.RLock] = {}

    def _path(self, user_id: str) -> Path:
        safe = user_id.replace("/", "_")
        return self.root / f"user_{safe}.json"

    def _index_path(self) -> Path:
        return self.root / "index.json"

    def lock(self, user_id: str) -> threading.RLock:
        with self._guard:
            if user_id not in self._locks:
                self._locks[user_id] = threading.RLock()
            return self._locks[user_id]

    def list_users(self) -> list[str]:
        if not self._index_path().exists():
            return []
        return sorted(json.loads(self._index_path().read_text())["users"])

    def _write_index(self, users: list[str]) -> None:
        self._index_path().write_text(
            json.dumps({"users": sorted(users)}, sort_keys=True)
        )

    def exists(self, user_id: str) -> bool:
        return self._path(user_id).exists()

    def create_user(self, user_id: str, task: str) -> UserRecord:
        with self._guard:
            if self.exists(user_id):
                raise StoreError(f"user {user_id!r} already exists")
            rec = UserRecord(user_id=user_id, task=task)
            self._path(user_id).write_text(json.dumps(rec.to_dict(), sort_keys=True))
            self._write_index(self.list_users() + [user_id])
            return rec

    def get(self, user_id: str) -> UserRecord:
        path = self._path(user_id)
        if not path.exists():
            raise UnknownUser(f"unknown user {user_id!r}")
        return UserRecord.from_dict(json.loads(path.read_text()))

    def save(self, record: UserRecord) -> None:
        path = self._path(record.user_id)
        if not path.exists():
            raise UnknownUser(f"unknown user {record.user_id!r}")
        path.write_text(json.dumps(record.to_dict(), sort_keys=True))

    def export_user(self, user_id: str) -> dict:
        return self.get(user_id).to_dict()

    def import_user(self, doc: dict, overwrite: bool = False) -> UserRecord:
        rec = UserRecord.from_dict(doc)
        with self._guard:
            if self.exists(rec.user_id) and not overwrite:
                raise StoreError(f"user {rec.user_id!r} already exists")
            self._path(rec.user_id).write_text(json.dumps(rec.to_dict(), sort_keys=True))
            users = set(self.list_users()) | {rec.user_id}
            self._write_index(sorted(users))
        return rec
