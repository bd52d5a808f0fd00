"""Registration, login, sessions, and role-based authorization.

Passwords are stored as iterated salted SHA-256 (configurable iteration
count); the plaintext never touches a persisted byte stream. Login failure
is a single uniform "invalid credentials" answer whether the principal is
unknown or the password wrong, so the API cannot be used to enumerate
accounts. Sessions are in-memory bearer tokens drawn from OS entropy.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .pii_store import NS_CREDENTIAL, DocumentStore

__all__ = [
    "IdentityError",
    "DuplicatePrincipalError",
    "InvalidCredentialsError",
    "AuthorizationError",
    "UnknownPrincipalError",
    "Credential",
    "Session",
    "IdentityService",
    "ROLE_USER",
    "ROLE_COMPANY",
    "ROLE_ADMIN",
]

ROLE_USER = "user"
ROLE_COMPANY = "company"
ROLE_ADMIN = "admin"
ROLES = frozenset({ROLE_USER, ROLE_COMPANY, ROLE_ADMIN})

DEFAULT_ITERATIONS = 100_000
DEFAULT_SESSION_TTL_MS = 24 * 60 * 60 * 1000
SALT_BYTES = 16
TOKEN_BYTES = 32


class IdentityError(Exception):
    pass


class DuplicatePrincipalError(IdentityError):
    pass


class InvalidCredentialsError(IdentityError):
    """Uniform login failure; deliberately does not say why."""


class UnknownPrincipalError(IdentityError):
    pass


class AuthorizationError(IdentityError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def hash_password(salt: bytes, password: str, iterations: int) -> str:
    """Iterated SHA-256 over salt ‖ password bytes; hex digest.

    One iteration is exactly sha256(salt + password), which keeps the
    construction testable against any standalone SHA-256 tool.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    digest = salt + password.encode("utf-8")
    for _ in range(iterations):
        digest = hashlib.sha256(digest).digest()
    return digest.hex()


@dataclass(frozen=True)
class Credential:
    principal_id: str
    role: str
    salt: str  # hex
    password_hash: str  # hex
    created_at_ms: int
    login_name: Optional[str] = None  # email for users, company name for companies

    def to_dict(self) -> dict:
        data = {
            "principalId": self.principal_id,
            "role": self.role,
            "salt": self.salt,
            "passwordHash": self.password_hash,
            "createdAtMs": self.created_at_ms,
        }
        if self.login_name is not None:
            data["loginName"] = self.login_name
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Credential":
        return cls(
            principal_id=data["principalId"],
            role=data["role"],
            salt=data["salt"],
            password_hash=data["passwordHash"],
            created_at_ms=data["createdAtMs"],
            login_name=data.get("loginName"),
        )


@dataclass(frozen=True)
class Session:
    token: str
    principal_id: str
    role: str
    expires_at_ms: int


class IdentityService:
    """Credential and session tables behind one lock.

    Credentials persist in the shared document store under their own
    namespace; sessions are process-local.
    """

    def __init__(
        self,
        store: DocumentStore,
        *,
        iterations: int = DEFAULT_ITERATIONS,
        session_ttl_ms: int = DEFAULT_SESSION_TTL_MS,
        clock=None,
    ):
        self._store = store
        self._iterations = iterations
        self._session_ttl_ms = session_ttl_ms
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._lock = threading.RLock()
        self._sessions: dict[str, Session] = {}
        self._login_names: dict[str, str] = {}
        for principal_id, doc in store.scan(NS_CREDENTIAL):
            login_name = doc.get("loginName")
            if login_name:
                self._login_names[login_name] = principal_id

    def register(
        self,
        principal_id: str,
        role: str,
        password: str,
        *,
        login_name: Optional[str] = None,
        salt: Optional[bytes] = None,
    ) -> Credential:
        """Create a credential; `salt` injection is for deterministic tests."""
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        if not password:
            raise ValueError("password must be non-empty")
        with self._lock:
            if self._store.get(NS_CREDENTIAL, principal_id) is not None:
                raise DuplicatePrincipalError(principal_id)
            if login_name is not None and login_name in self._login_names:
                raise DuplicatePrincipalError(login_name)
            salt = salt if salt is not None else secrets.token_bytes(SALT_BYTES)
            cred = Credential(
                principal_id=principal_id,
                role=role,
                salt=salt.hex(),
                password_hash=hash_password(salt, password, self._iterations),
                created_at_ms=self._clock(),
                login_name=login_name,
            )
            self._store.put(NS_CREDENTIAL, principal_id, cred.to_dict())
            if login_name is not None:
                self._login_names[login_name] = principal_id
            return cred

    def login(self, principal: str, password: str) -> Session:
        """Accepts a principal id or a registered login name.

        Any failure raises the same InvalidCredentialsError; the hash
        comparison is constant-time.
        """
        with self._lock:
            principal_id = self._login_names.get(principal, principal)
            doc = self._store.get(NS_CREDENTIAL, principal_id)
            if doc is None:
                raise InvalidCredentialsError()
            cred = Credential.from_dict(doc)
            candidate = hash_password(bytes.fromhex(cred.salt), password, self._iterations)
            if not hmac.compare_digest(candidate, cred.password_hash):
                raise InvalidCredentialsError()
            session = Session(
                token=secrets.token_hex(TOKEN_BYTES),
                principal_id=cred.principal_id,
                role=cred.role,
                expires_at_ms=self._clock() + self._session_ttl_ms,
            )
            self._sessions[session.token] = session
            return session

    def authorize(
        self,
        token: Optional[str],
        required_role: str,
        resource_owner: Optional[str] = None,
    ) -> Session:
        """Grant iff the token is live and the role fits.

        Users only reach resources they own; admin passes every check,
        so authorization is monotone in role.
        """
        with self._lock:
            session = self._sessions.get(token) if token else None
            if session is None:
                raise AuthorizationError("missing or unknown token")
            if session.expires_at_ms <= self._clock():
                del self._sessions[session.token]
                raise AuthorizationError("session expired")
            if session.role == ROLE_ADMIN:
                return session
            if session.role != required_role:
                raise AuthorizationError(f"requires role {required_role}")
            if resource_owner is not None and session.principal_id != resource_owner:
                raise AuthorizationError("not the resource owner")
            return session

    def session_for(self, token: Optional[str]) -> Optional[Session]:
        """The live session behind a token, or None; no role checks."""
        with self._lock:
            session = self._sessions.get(token) if token else None
            if session is None:
                return None
            if session.expires_at_ms <= self._clock():
                del self._sessions[session.token]
                return None
            return session

    def delete_credential(self, principal_id: str) -> None:
        """Remove the credential and kill its outstanding sessions."""
        with self._lock:
            doc = self._store.get(NS_CREDENTIAL, principal_id)
            if doc is None:
                raise UnknownPrincipalError(principal_id)
            self._store.delete(NS_CREDENTIAL, principal_id)
            login_name = doc.get("loginName")
            if login_name:
                self._login_names.pop(login_name, None)
            for token in [t for t, s in self._sessions.items() if s.principal_id == principal_id]:
                del self._sessions[token]

    def principal_for_login_name(self, login_name: str) -> Optional[str]:
        with self._lock:
            return self._login_names.get(login_name)

    def credential(self, principal_id: str) -> Optional[Credential]:
        doc = self._store.get(NS_CREDENTIAL, principal_id)
        return Credential.from_dict(doc) if doc is not None else None
