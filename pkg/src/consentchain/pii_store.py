"""Off-chain document store for personal data — the deletable half.

Single append-log file of line-delimited canonical records, replayed into
memory on open. Deletes are logical markers (carrying nothing but the
record id) until compact() rewrites the file with live records only; that
rewrite is what turns logical deletion into physical erasure, so the
account-deletion flow runs it synchronously. Compaction goes through a
temp file and an atomic rename, so a crash mid-compact never loses the
old, still-valid file.

This is also the only component able to resolve a pair key back to a
person: it holds the user ids that pair keys are derived from.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .canonical import canonical_bytes
from .ledger import PermissionFlags, compute_pair_key, new_uuid4

__all__ = ["StoreError", "DuplicateError", "NotFoundError", "DocumentStore", "UserStore"]

PII_FIELDS = ("name", "email", "phone", "location")

NS_USER = "user"
NS_CREDENTIAL = "cred"


class StoreError(Exception):
    """Base error for document-store operations."""


class DuplicateError(StoreError):
    """Unique constraint (email, id) already taken."""


class NotFoundError(StoreError):
    """No live record under that id."""


class DocumentStore:
    """Namespaced key-document store over one append-log file.

    Single-writer, multi-reader: every public method holds the store lock,
    and readers get snapshot copies, never live references.
    """

    def __init__(self, path: Path):
        self._path = Path(path)
        self._lock = threading.RLock()
        self._docs: dict[tuple[str, str], dict] = {}
        if self._path.exists():
            self._load()

    def _load(self) -> None:
        with open(self._path, "rb") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line.decode("utf-8"))
                except ValueError as exc:
                    raise StoreError(f"corrupt record at line {line_no}: {exc}") from exc
                op = record.get("op")
                key = (record["ns"], record["id"])
                if op == "put":
                    self._docs[key] = record["doc"]
                elif op == "del":
                    self._docs.pop(key, None)
                else:
                    raise StoreError(f"unknown op {op!r} at line {line_no}")

    def _append(self, record: dict) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._path, "ab") as fh:
            fh.write(canonical_bytes(record) + b"\n")
            fh.flush()
            os.fsync(fh.fileno())

    def put(self, ns: str, doc_id: str, doc: dict) -> None:
        with self._lock:
            self._append({"op": "put", "ns": ns, "id": doc_id, "doc": doc})
            self._docs[(ns, doc_id)] = dict(doc)

    def get(self, ns: str, doc_id: str) -> Optional[dict]:
        with self._lock:
            doc = self._docs.get((ns, doc_id))
            return dict(doc) if doc is not None else None

    def delete(self, ns: str, doc_id: str) -> None:
        """Logical delete; the marker carries no document content."""
        with self._lock:
            if (ns, doc_id) not in self._docs:
                raise NotFoundError(f"{ns}/{doc_id}")
            self._append({"op": "del", "ns": ns, "id": doc_id})
            del self._docs[(ns, doc_id)]

    def scan(self, ns: str) -> list[tuple[str, dict]]:
        with self._lock:
            return [
                (doc_id, dict(doc))
                for (n, doc_id), doc in sorted(self._docs.items())
                if n == ns
            ]

    def compact(self) -> None:
        """Rewrite the file with live records only: write-new-then-rename.

        The old file stays valid until the atomic replace, so a crash at any
        point leaves either the old or the new complete file on disk.
        """
        with self._lock:
            tmp = self._path.with_suffix(self._path.suffix + ".compacting")
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with open(tmp, "wb") as fh:
                for (ns, doc_id), doc in sorted(self._docs.items()):
                    record = {"op": "put", "ns": ns, "id": doc_id, "doc": doc}
                    fh.write(canonical_bytes(record) + b"\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self._path)

    @property
    def path(self) -> Path:
        return self._path


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    name: str
    email: str
    phone: str
    location: str
    created_at_ms: int

    def to_dict(self) -> dict:
        return {
            "userId": self.user_id,
            "name": self.name,
            "email": self.email,
            "phone": self.phone,
            "location": self.location,
            "createdAtMs": self.created_at_ms,
        }


class UserStore:
    """PII records keyed by store-generated user ids, with a unique email.

    Email is the login identity for users, so uniqueness is enforced here.
    """

    def __init__(self, store: DocumentStore):
        self._store = store
        self._lock = threading.RLock()
        self._email_index: dict[str, str] = {}
        for user_id, doc in store.scan(NS_USER):
            self._email_index[doc["email"]] = user_id

    def create_user(
        self, name: str, email: str, phone: str, location: str, *, created_at_ms: int
    ) -> str:
        with self._lock:
            if email in self._email_index:
                raise DuplicateError("email already registered")
            user_id = new_uuid4()
            record = UserRecord(user_id, name, email, phone, location, created_at_ms)
            self._store.put(NS_USER, user_id, record.to_dict())
            self._email_index[email] = user_id
            return user_id

    def get_fields(self, user_id: str, flags: PermissionFlags) -> Optional[dict]:
        """Exactly the fields whose flag is true; None when the user is gone."""
        doc = self._store.get(NS_USER, user_id)
        if doc is None:
            return None
        out = {}
        for field_name in PII_FIELDS:
            if getattr(flags, field_name):
                out[field_name] = doc[field_name]
        return out

    def get_user(self, user_id: str) -> Optional[dict]:
        return self._store.get(NS_USER, user_id)

    def user_id_for_email(self, email: str) -> Optional[str]:
        with self._lock:
            return self._email_index.get(email)

    def delete_user(self, user_id: str) -> None:
        with self._lock:
            doc = self._store.get(NS_USER, user_id)
            if doc is None:
                raise NotFoundError(user_id)
            self._store.delete(NS_USER, user_id)
            self._email_index.pop(doc["email"], None)

    def resolve_pair_keys(self, company_id: str) -> dict[str, str]:
        """pairKey -> userId for every live user, for one company.

        This recomputation against the stored user ids is the only place the
        anonymous on-chain key becomes a person again.
        """
        out = {}
        for user_id, _doc in self._store.scan(NS_USER):
            out[compute_pair_key(user_id, company_id)] = user_id
        return out

    def user_ids(self) -> list[str]:
        return [user_id for user_id, _ in self._store.scan(NS_USER)]

    def compact(self) -> None:
        self._store.compact()
