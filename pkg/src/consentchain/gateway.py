"""REST gateway tying identity, the PII store, and the ledger network together.

Handlers are transport-free: ``Gateway.handle`` maps (method, path, headers,
body) to a Response, and the HTTP layer in ``server`` is a thin shell around
it. Every state-changing endpoint maps to exactly one transaction kind, and
endpoints answer only after the network reports the block committed on all
peers, so a 200 means fully replicated.

Privacy posture: registration writes nothing to the chain; companies learn
about a user only through that user's own permission writes; responses to
company sessions never contain a user id, only pair keys.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .canonical import canonical_bytes
from .identity import (
    AuthorizationError,
    DuplicatePrincipalError,
    IdentityService,
    InvalidCredentialsError,
    ROLE_ADMIN,
    ROLE_COMPANY,
    ROLE_USER,
    Session,
)
from .ledger import (
    COMPANY_PREFIX,
    FLAG_NAMES,
    KIND_PUT_COMPANY,
    KIND_PUT_PERMISSION,
    KIND_SET_ACCREDITATION,
    PERM_PREFIX,
    PermissionFlags,
    compute_pair_key,
    new_uuid4,
)
from .network import Network, NetworkConfig, NetworkError
from .pii_store import DocumentStore, DuplicateError, UserStore

__all__ = ["ApiError", "AppConfig", "Gateway", "Response", "build_app"]

ENV_ADMIN_ID = "CONSENT_ADMIN_ID"
ENV_ADMIN_PASSWORD = "CONSENT_ADMIN_PASSWORD"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class ApiError(Exception):
    """Maps straight onto an HTTP error response; never carries PII."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Response:
    status: int
    body: bytes
    content_type: str = "application/json"

    def json(self):
        return json.loads(self.body.decode("utf-8"))


def _json_response(status: int, payload) -> Response:
    return Response(status, canonical_bytes(payload) + b"\n")


@dataclass
class AppConfig:
    data_dir: Path
    peers: int = 4
    quorum: Optional[int] = None
    max_block_txs: int = 10
    block_timeout_ms: int = 250
    seed: int = 0
    password_iterations: int = 100_000
    static_dir: Optional[Path] = None
    admin_id: str = field(default_factory=lambda: os.environ.get(ENV_ADMIN_ID, "admin"))
    admin_password: str = field(
        default_factory=lambda: os.environ.get(ENV_ADMIN_PASSWORD, "admin")
    )


def build_app(config: AppConfig) -> "Gateway":
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = DocumentStore(data_dir / "pii.log")
    users = UserStore(store)
    identity = IdentityService(store, iterations=config.password_iterations)
    network = Network(
        NetworkConfig(
            peer_count=config.peers,
            quorum=config.quorum,
            max_block_txs=config.max_block_txs,
            block_timeout_ms=config.block_timeout_ms,
            seed=config.seed,
        ),
        data_dir=data_dir,
    )
    if identity.credential(config.admin_id) is None:
        identity.register(config.admin_id, ROLE_ADMIN, config.admin_password)
    return Gateway(network, identity, users, static_dir=config.static_dir)


def _require_str(body: dict, name: str, allow_empty: bool = False) -> str:
    value = body.get(name)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise ApiError(400, "missing-field", f"field {name!r} is required")
    return value


def _parse_body(raw: bytes) -> dict:
    if not raw:
        raise ApiError(400, "bad-json", "request body required")
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise ApiError(400, "bad-json", "request body is not valid JSON")
    if not isinstance(body, dict):
        raise ApiError(400, "bad-json", "request body must be an object")
    return body


class Gateway:
    def __init__(
        self,
        network: Network,
        identity: IdentityService,
        users: UserStore,
        static_dir: Optional[Path] = None,
    ):
        self.network = network
        self.identity = identity
        self.users = users
        self.static_dir = Path(static_dir) if static_dir is not None else None
        self._delete_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def handle(self, method: str, path: str, headers: dict, body: bytes) -> Response:
        try:
            return self._route(method, path.split("?")[0], headers, body)
        except ApiError as err:
            return _json_response(err.status, {"code": err.code, "message": err.message})
        except NetworkError as err:
            return _json_response(
                500, {"code": "ledger-unavailable", "message": str(err)}
            )
        except Exception:
            return _json_response(
                500, {"code": "internal", "message": "internal server error"}
            )

    def _route(self, method: str, path: str, headers: dict, raw: bytes) -> Response:
        parts = [p for p in path.split("/") if p]
        if parts[:1] != ["api"]:
            if method == "GET":
                return self._static(parts)
            raise ApiError(404, "not-found", "no such endpoint")
        rest = parts[1:]
        if rest == ["users"] and method == "POST":
            return self._register_user(_parse_body(raw))
        if rest == ["users", "me"] and method == "DELETE":
            return self._delete_account(headers, _parse_body(raw))
        if rest == ["companies"] and method == "POST":
            return self._register_company(_parse_body(raw))
        if rest == ["companies"] and method == "GET":
            return self._list_companies(headers)
        if rest == ["companies", "me", "profile"] and method == "PUT":
            return self._put_profile(headers, _parse_body(raw))
        if len(rest) == 4 and rest[0] == "admin" and rest[1] == "companies" \
                and rest[3] == "accredit" and method == "POST":
            return self._accredit(headers, rest[2], _parse_body(raw))
        if rest == ["sessions"] and method == "POST":
            return self._login(_parse_body(raw))
        if rest == ["permissions"] and method == "GET":
            return self._list_permissions(headers)
        if len(rest) == 2 and rest[0] == "permissions" and method == "PUT":
            return self._put_permission(headers, rest[1], _parse_body(raw))
        if rest == ["company", "data"] and method == "GET":
            return self._company_data(headers)
        raise ApiError(404, "not-found", "no such endpoint")

    def _bearer(self, headers: dict) -> Optional[str]:
        value = headers.get("authorization", "")
        if value.lower().startswith("bearer "):
            return value[7:].strip()
        return None

    def _require_session(
        self, headers: dict, role: str, resource_owner: Optional[str] = None
    ) -> Session:
        token = self._bearer(headers)
        session = self.identity.session_for(token)
        if session is None:
            raise ApiError(401, "unauthorized", "missing or invalid session")
        try:
            return self.identity.authorize(token, role, resource_owner)
        except AuthorizationError as err:
            raise ApiError(403, "forbidden", err.reason)

    def _static(self, parts: list[str]) -> Response:
        if self.static_dir is None:
            raise ApiError(404, "not-found", "no static assets configured")
        root = self.static_dir.resolve()
        target = (root / Path(*parts)) if parts else root / "index.html"
        target = target.resolve()
        if root not in target.parents and target != root:
            raise ApiError(404, "not-found", "no such file")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            # SPA fallback: unknown paths render the app shell.
            target = root / "index.html"
            if not target.is_file():
                raise ApiError(404, "not-found", "no such file")
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return Response(200, target.read_bytes(), content_type)

    # -- user and company registration --------------------------------------

    def _register_user(self, body: dict) -> Response:
        name = _require_str(body, "name")
        email = _require_str(body, "email")
        phone = _require_str(body, "phone")
        location = _require_str(body, "location")
        password = _require_str(body, "password")
        try:
            user_id = self.users.create_user(
                name, email, phone, location, created_at_ms=int(time.time() * 1000)
            )
        except DuplicateError:
            raise ApiError(409, "duplicate-email", "email is already registered")
        # No login_name here: the email lives only in the PII store, so the
        # credential record carries nothing erasable.
        self.identity.register(user_id, ROLE_USER, password)
        # Deliberately no ledger write: nothing about this user exists on
        # chain until they grant their first permission.
        return _json_response(201, {"userId": user_id})

    def _register_company(self, body: dict) -> Response:
        name = _require_str(body, "name")
        password = _require_str(body, "password")
        company_id = new_uuid4()
        try:
            self.identity.register(company_id, ROLE_COMPANY, password, login_name=name)
        except DuplicatePrincipalError:
            raise ApiError(409, "duplicate-name", "company name is already registered")
        return _json_response(201, {"companyId": company_id})

    def _login(self, body: dict) -> Response:
        principal = _require_str(body, "principal")
        password = _require_str(body, "password")
        # Users sign in with their email, which only the PII store can map
        # back to a user id; company names and raw ids resolve in identity.
        resolved = self.users.user_id_for_email(principal) or principal
        try:
            session = self.identity.login(resolved, password)
        except InvalidCredentialsError:
            raise ApiError(401, "invalid-credentials", "invalid credentials")
        payload = {
            "token": session.token,
            "role": session.role,
            "principalId": session.principal_id,
        }
        if session.role == ROLE_COMPANY:
            asset = self.network.query(COMPANY_PREFIX + session.principal_id)
            payload["profileComplete"] = asset is not None
        return _json_response(200, payload)

    # -- company profile and accreditation -----------------------------------

    def _put_profile(self, headers: dict, body: dict) -> Response:
        session = self._require_session(headers, ROLE_COMPANY)
        description = _require_str(body, "description", allow_empty=True)
        contact_email = _require_str(body, "contactEmail", allow_empty=True)
        credential = self.identity.credential(session.principal_id)
        if credential is None or credential.login_name is None:
            raise ApiError(404, "not-found", "company registration not found")
        current = self.network.query(COMPANY_PREFIX + session.principal_id)
        payload = {
            "companyId": session.principal_id,
            "name": credential.login_name,
            "description": description,
            "contactEmail": contact_email,
            # Resubmitting a profile must not silently toggle accreditation.
            "accredited": bool(current["accredited"]) if current else False,
        }
        self.network.submit_and_commit(KIND_PUT_COMPANY, payload, session.principal_id)
        return _json_response(
            200, {"companyId": session.principal_id, "profileComplete": True}
        )

    def _accredit(self, headers: dict, company_id: str, body: dict) -> Response:
        session = self._require_session(headers, ROLE_ADMIN)
        accredited = body.get("accredited")
        if not isinstance(accredited, bool):
            raise ApiError(400, "missing-field", "field 'accredited' must be a boolean")
        if self.network.query(COMPANY_PREFIX + company_id) is None:
            raise ApiError(404, "not-found", "unknown company")
        self.network.submit_and_commit(
            KIND_SET_ACCREDITATION,
            {"companyId": company_id, "accredited": accredited},
            session.principal_id,
        )
        return _json_response(200, {"companyId": company_id, "accredited": accredited})

    def _list_companies(self, headers: dict) -> Response:
        token = self._bearer(headers)
        session = self.identity.session_for(token)
        if session is None:
            raise ApiError(401, "unauthorized", "missing or invalid session")
        companies = [
            value
            for key, value in self.network.world_state().items()
            if key.startswith(COMPANY_PREFIX)
        ]
        if session.role != ROLE_ADMIN:
            # Users see accredited companies only; admin sees everything.
            companies = [c for c in companies if c["accredited"]]
        companies.sort(key=lambda c: (c["name"], c["companyId"]))
        return _json_response(200, companies)

    # -- permissions ----------------------------------------------------------

    def _parse_flags(self, body: dict) -> PermissionFlags:
        extra = set(body) - set(FLAG_NAMES)
        if extra:
            raise ApiError(
                400, "bad-flags", f"unexpected fields: {', '.join(sorted(extra))}"
            )
        for flag in FLAG_NAMES:
            if not isinstance(body.get(flag), bool):
                raise ApiError(
                    400, "bad-flags", f"all four flags required; {flag!r} must be boolean"
                )
        return PermissionFlags(**{flag: body[flag] for flag in FLAG_NAMES})

    def _put_permission(self, headers: dict, company_id: str, body: dict) -> Response:
        session = self._require_session(headers, ROLE_USER)
        flags = self._parse_flags(body)
        company = self.network.query(COMPANY_PREFIX + company_id)
        if company is None or not company["accredited"]:
            raise ApiError(404, "not-found", "unknown or unaccredited company")
        pair_key = compute_pair_key(session.principal_id, company_id)
        self.network.submit_and_commit(
            KIND_PUT_PERMISSION,
            {"pairKey": pair_key, "companyId": company_id, "flags": flags.to_dict()},
            "gateway",
        )
        return _json_response(200, {"pairKey": pair_key})

    def _list_permissions(self, headers: dict) -> Response:
        session = self._require_session(headers, ROLE_USER)
        state = self.network.world_state()
        entries = []
        for key, value in state.items():
            if not key.startswith(COMPANY_PREFIX):
                continue
            company_id = value["companyId"]
            pair_key = compute_pair_key(session.principal_id, company_id)
            asset = state.get(PERM_PREFIX + pair_key)
            if asset is not None:
                entries.append(
                    {
                        "companyId": company_id,
                        "companyName": value["name"],
                        "flags": asset["flags"],
                    }
                )
        entries.sort(key=lambda e: (e["companyName"], e["companyId"]))
        return _json_response(200, entries)

    def _company_data(self, headers: dict) -> Response:
        session = self._require_session(headers, ROLE_COMPANY)
        company_id = session.principal_id
        state = self.network.world_state()
        pair_key_to_user = self.users.resolve_pair_keys(company_id)
        rows = []
        for key, asset in state.items():
            if not key.startswith(PERM_PREFIX) or asset["companyId"] != company_id:
                continue
            flags = PermissionFlags.from_dict(asset["flags"])
            user_id = pair_key_to_user.get(asset["pairKey"])
            if flags.all_false() or user_id is None:
                rows.append({"pairKey": asset["pairKey"], "deleted": True})
                continue
            fields = self.users.get_fields(user_id, flags)
            if fields is None:
                rows.append({"pairKey": asset["pairKey"], "deleted": True})
                continue
            rows.append({"pairKey": asset["pairKey"], "deleted": False, **fields})
        rows.sort(key=lambda r: r["pairKey"])
        return _json_response(200, rows)

    # -- account deletion ------------------------------------------------------

    def _delete_account(self, headers: dict, body: dict) -> Response:
        session = self._require_session(headers, ROLE_USER)
        if body.get("confirm") != "DELETE":
            raise ApiError(
                400, "confirm-required", 'body must carry confirm: "DELETE" exactly'
            )
        user_id = session.principal_id
        with self._delete_lock:
            state = self.network.world_state()
            for key, value in sorted(state.items()):
                if not key.startswith(COMPANY_PREFIX):
                    continue
                company_id = value["companyId"]
                pair_key = compute_pair_key(user_id, company_id)
                if PERM_PREFIX + pair_key not in state:
                    continue
                self.network.submit_and_commit(
                    KIND_PUT_PERMISSION,
                    {
                        "pairKey": pair_key,
                        "companyId": company_id,
                        "flags": PermissionFlags().to_dict(),
                    },
                    "gateway",
                )
            # Ledger now shows every entry revoked; erase the person and the
            # credential, then compact once so that by the time we answer the
            # store file physically contains no byte of either.
            self.users.delete_user(user_id)
            self.identity.delete_credential(user_id)
            self.users.compact()
        return _json_response(200, {"deleted": True})
