#!/usr/bin/env python3
"""End-to-end walkthrough against an in-process deployment.

Registers a company and a user, grants consent, shows what the company can
see, deletes the account, and finishes by running the audit checks over the
files the flow produced.

    python scripts/demo_flow.py --out /tmp/demo
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from consentchain import audit
from consentchain.gateway import AppConfig, Gateway, build_app


def call(gateway: Gateway, method: str, path: str, body=None, token=None):
    headers = {"authorization": f"Bearer {token}"} if token else {}
    raw = json.dumps(body).encode() if body is not None else b""
    response = gateway.handle(method, path, headers, raw)
    payload = response.json()
    print(f"  {method} {path} -> {response.status} {json.dumps(payload)[:100]}")
    return payload


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo-data"))
    args = parser.parse_args()

    app = build_app(AppConfig(data_dir=args.out, peers=4, seed=1,
                              password_iterations=1000))

    print("== company onboarding ==")
    call(app, "POST", "/api/companies", {"name": "Acme Analytics", "password": "co-pw"})
    admin = call(app, "POST", "/api/sessions",
                 {"principal": "admin", "password": "admin"})["token"]
    company = call(app, "POST", "/api/sessions",
                   {"principal": "Acme Analytics", "password": "co-pw"})
    call(app, "PUT", "/api/companies/me/profile",
         {"description": "usage analytics", "contactEmail": "dpo@acme.test"},
         token=company["token"])
    cid = company["principalId"]
    call(app, "POST", f"/api/admin/companies/{cid}/accredit",
         {"accredited": True}, token=admin)

    print("== user grants consent ==")
    call(app, "POST", "/api/users", {
        "name": "Dana Example", "email": "dana@example.test",
        "phone": "555-0144", "location": "Oshawa", "password": "user-pw"})
    user = call(app, "POST", "/api/sessions",
                {"principal": "dana@example.test", "password": "user-pw"})["token"]
    grant = call(app, "PUT", f"/api/permissions/{cid}",
                 {"name": True, "email": False, "phone": False, "location": True},
                 token=user)
    call(app, "GET", "/api/company/data", token=company["token"])

    print("== right to be forgotten ==")
    call(app, "DELETE", "/api/users/me", {"confirm": "DELETE"}, token=user)
    call(app, "GET", "/api/company/data", token=company["token"])

    print("== audits over the persisted files ==")
    chain = args.out / "chain-peer-0.log"
    pii = args.out / "pii.log"
    for rc_args in (["verify-chain", "--chain", str(chain)],
                    ["scan-pii", "--chain", str(chain), "--pii", str(pii)],
                    ["replay", "--chain", str(chain)],
                    ["forget-check", "--chain", str(chain), "--pii", str(pii),
                     "--pairkey", grant["pairKey"]]):
        rc = audit.main(rc_args)
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
