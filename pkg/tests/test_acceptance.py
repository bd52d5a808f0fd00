"""Acceptance gate: one test per criterion, at the stated tolerances.

Every test prints ``ACCEPT <criterion> PASS`` on success so a suite run
reads as a checklist. These exercise the deployed surfaces (scenario
runner, HTTP API, audit CLI), not internals.
"""

import json
import random
import statistics
import time

import pytest
import requests

from consentchain import audit
from consentchain.gateway import AppConfig, build_app
from consentchain.ledger import (
    KIND_PUT_COMPANY,
    KIND_PUT_PERMISSION,
    KIND_SET_ACCREDITATION,
    PermissionFlags,
    compute_pair_key,
    uuid4_from_rng,
)
from consentchain.network import LatencyModel, NetworkConfig, run_scenario
from consentchain.server import start_background

from conftest import Client

FLAGS = ("name", "email", "phone", "location")


def announce(name):
    print(f"ACCEPT {name} PASS")


def fast_app(tmp_path, peers=2, seed=7):
    return build_app(AppConfig(
        data_dir=tmp_path / "data", peers=peers, seed=seed,
        password_iterations=2, admin_id="admin", admin_password="admin-pw",
    ))


# ---------------------------------------------------------------------------
# Replication
# ---------------------------------------------------------------------------

def mixed_workload(n_txs=1000, seed=12345):
    rng = random.Random(seed)
    companies = [uuid4_from_rng(rng) for _ in range(20)]
    users = [uuid4_from_rng(rng) for _ in range(150)]
    steps = []
    for cid in companies:
        steps.append({
            "step": "submit", "kind": KIND_PUT_COMPANY, "submitter": "gateway",
            "payload": {"companyId": cid, "name": f"co-{cid[:8]}",
                        "description": "synthetic", "contactEmail": "ops@co.test",
                        "accredited": False},
        })
    steps.append({"step": "advance", "ms": 400})
    for i in range(n_txs - len(companies)):
        if rng.random() < 0.1:
            steps.append({
                "step": "submit", "kind": KIND_SET_ACCREDITATION,
                "submitter": "gateway",
                "payload": {"companyId": rng.choice(companies),
                            "accredited": rng.random() < 0.7},
            })
        else:
            cid = rng.choice(companies)
            uid = rng.choice(users)
            flags = PermissionFlags(*(rng.random() < 0.5 for _ in FLAGS))
            steps.append({
                "step": "submit", "kind": KIND_PUT_PERMISSION,
                "submitter": "gateway",
                "payload": {"pairKey": compute_pair_key(uid, cid),
                            "companyId": cid, "flags": flags.to_dict()},
            })
        if i % 50 == 49:
            steps.append({"step": "advance", "ms": 40})
    return steps


def test_replication_four_peers_seed42(tmp_path):
    config = NetworkConfig(
        peer_count=4, quorum=3, seed=42,
        latency=LatencyModel("uniform", min_ms=1, max_ms=5),
    )
    steps = mixed_workload(1000)
    assert sum(1 for s in steps if s["step"] == "submit") == 1000

    started = time.monotonic()
    first = run_scenario(config, steps, data_dir=tmp_path / "run1")
    replay_hashes = set()
    for peer_id, path in sorted(first.chain_paths.items()):
        report = audit.replay(path)
        assert report.passed, report.render()
        replay_hashes.add(report.details)
    assert len(first.chain_paths) == 4
    assert len(replay_hashes) == 1, f"peers disagree: {replay_hashes}"

    second = run_scenario(config, steps, data_dir=tmp_path / "run2")
    assert first.transcript == second.transcript
    elapsed = time.monotonic() - started
    assert elapsed < 60, f"took {elapsed:.1f}s"
    announce("replication")


# ---------------------------------------------------------------------------
# Immutability
# ---------------------------------------------------------------------------

def test_immutability_200_random_byte_flips(tmp_path):
    config = NetworkConfig(peer_count=1, max_block_txs=1, seed=3)
    rng = random.Random(99)
    users = [uuid4_from_rng(rng) for _ in range(10)]
    companies = [uuid4_from_rng(rng) for _ in range(5)]
    steps = []
    for i in range(100):
        cid = companies[i % 5]
        steps.append({
            "step": "submit", "kind": KIND_PUT_PERMISSION, "submitter": "gateway",
            "payload": {"pairKey": compute_pair_key(users[i % 10], cid),
                        "companyId": cid,
                        "flags": PermissionFlags(name=bool(i % 2)).to_dict()},
        })
    result = run_scenario(config, steps, data_dir=tmp_path)
    chain_path = result.chain_paths["peer-0"]
    assert result.chain_heights["peer-0"] == 100
    assert audit.verify_chain(chain_path).passed

    pristine = chain_path.read_bytes()
    victim = tmp_path / "tampered.log"
    detected = 0
    for trial in range(200):
        data = bytearray(pristine)
        offset = rng.randrange(len(data))
        mask = rng.randrange(1, 256)
        data[offset] ^= mask
        victim.write_bytes(bytes(data))
        if not audit.verify_chain(victim).passed:
            detected += 1
    assert detected == 200, f"only {detected}/200 flips detected"
    announce("immutability")


# ---------------------------------------------------------------------------
# Untraceability
# ---------------------------------------------------------------------------

def random_pii(rng, i):
    first = rng.choice(["Alza", "Brin", "Ceol", "Dara", "Eiko", "Fenn", "Gusta", "Hale"])
    last = rng.choice(["Marrow", "Quint", "Soli", "Tern", "Umber", "Voss", "Wilde"])
    return {
        "name": f"{first} {last}",
        "email": f"{first.lower()}.{last.lower()}.{i}@example.test",
        "phone": "555-" + "".join(str(rng.randrange(10)) for _ in range(6)),
        "location": rng.choice(["Oshawa", "Whitby", "Ajax", "Pickering", "Toronto"]),
    }


def test_untraceability_100_random_users(tmp_path):
    app = fast_app(tmp_path, peers=2)
    client = Client(app)
    admin = client.token("admin", "admin-pw")
    companies = [client.ready_company(f"Company {i}", admin, password=f"pw{i}")
                 for i in range(4)]
    rng = random.Random(1234)
    for i in range(100):
        pii = random_pii(rng, i)
        client.register_user(pii["email"], name=pii["name"], phone=pii["phone"],
                             location=pii["location"], password="pw-user")
        token = client.token(pii["email"], "pw-user")
        for cid in rng.sample(companies, k=2):
            flags = dict(zip(FLAGS, (rng.random() < 0.5 for _ in FLAGS)))
            client.grant(token, cid, **flags)

    pii_path = app.users._store.path
    chain_paths = sorted(app.network.data_dir.glob("chain-*.log"))
    assert len(chain_paths) == 2
    for chain_path in chain_paths:
        report = audit.scan_pii(chain_path, pii_path)
        assert report.passed, report.render()
        assert "hits=0" in report.details
    announce("untraceability")


# ---------------------------------------------------------------------------
# Privacy by default
# ---------------------------------------------------------------------------

def test_privacy_by_default_500_interleavings(tmp_path):
    app = fast_app(tmp_path, peers=2)
    client = Client(app)
    admin = client.token("admin", "admin-pw")
    rng = random.Random(4321)

    users = []        # (user_id, email, token)
    companies = []    # (company_id, name, token)
    granted = set()   # (user_id, company_id) pairs with at least one PUT
    views_checked = 0
    violations = 0

    def add_user(i):
        email = f"user{i}@example.test"
        user_id = client.register_user(email, name=f"User {i}")
        users.append((user_id, email, client.token(email, "pw-user")))

    def add_company(i):
        name = f"Corp {i}"
        cid = client.ready_company(name, admin, password=f"pw{i}")
        companies.append((cid, name, client.token(name, f"pw{i}")))

    add_user(0)
    add_company(0)
    for step in range(500):
        op = rng.random()
        if op < 0.08:
            add_user(len(users))
        elif op < 0.16:
            add_company(len(companies))
        elif op < 0.55:
            user_id, _, token = rng.choice(users)
            cid, _, _ = rng.choice(companies)
            flags = dict(zip(FLAGS, (rng.random() < 0.5 for _ in FLAGS)))
            client.grant(token, cid, **flags)
            granted.add((user_id, cid))
        else:
            cid, _, ctoken = rng.choice(companies)
            status, rows = client.request("GET", "/api/company/data", token=ctoken)
            assert status == 200
            views_checked += 1
            allowed = {compute_pair_key(u, cid) for (u, c) in granted if c == cid
                       for u in [u]}
            for row in rows:
                if row["pairKey"] not in allowed:
                    violations += 1

    assert views_checked > 50
    assert violations == 0
    announce("privacy-by-default")


# ---------------------------------------------------------------------------
# Flag faithfulness
# ---------------------------------------------------------------------------

def test_flag_faithfulness_all_16_masks(tmp_path):
    app = fast_app(tmp_path, peers=2)
    client = Client(app)
    admin = client.token("admin", "admin-pw")
    cid = client.ready_company("Acme", admin)
    client.register_user("subject@example.test", name="Subject Name",
                         phone="555-0100", location="Oshawa")
    token = client.token("subject@example.test", "pw-user")
    company_token = client.token("Acme", "pw-co")

    for mask in range(16):
        flags = {flag: bool(mask >> i & 1) for i, flag in enumerate(FLAGS)}
        pair_key = client.grant(token, cid, **flags)
        status, rows = client.request("GET", "/api/company/data", token=company_token)
        assert status == 200 and len(rows) == 1
        row = rows[0]
        assert row["pairKey"] == pair_key
        granted = {flag for flag, on in flags.items() if on}
        if not granted:
            assert row == {"pairKey": pair_key, "deleted": True}
        else:
            assert row["deleted"] is False
            assert set(row) - {"pairKey", "deleted"} == granted
    announce("flag-faithfulness")


# ---------------------------------------------------------------------------
# Right to be forgotten
# ---------------------------------------------------------------------------

def test_right_to_be_forgotten_end_to_end(tmp_path):
    app = fast_app(tmp_path, peers=2)
    client = Client(app)
    admin = client.token("admin", "admin-pw")
    company_names = ["Acme", "Borealis", "Cumulus"]
    cids = [client.ready_company(n, admin, password=f"pw-{n}") for n in company_names]

    pii = {"name": "Forget Me Entirely", "email": "forget.me@example.test",
           "phone": "555-7788", "location": "Pickering"}
    client.register_user(pii["email"], name=pii["name"], phone=pii["phone"],
                         location=pii["location"], password="pw-user")
    token = client.token(pii["email"], "pw-user")
    pair_keys = [client.grant(token, cid, name=True, email=True) for cid in cids]

    status, _ = client.request("DELETE", "/api/users/me", {"confirm": "DELETE"},
                               token=token)
    assert status == 200

    # (a) every company sees deleted:true for its pair key
    for name, pair_key in zip(company_names, pair_keys):
        ctoken = client.token(name, f"pw-{name}")
        _, rows = client.request("GET", "/api/company/data", token=ctoken)
        assert rows == [{"pairKey": pair_key, "deleted": True}]

    # (b) post-compaction store file holds not a byte of the PII
    blob = app.users._store.path.read_bytes()
    for value in pii.values():
        assert value.encode() not in blob

    # (c) forget-check passes and shows immutable history of >= 2 versions
    chain_path = app.network.data_dir / "chain-peer-0.log"
    for pair_key in pair_keys:
        report = audit.forget_check(chain_path, app.users._store.path, pair_key)
        assert report.passed, report.render()
        versions = sum("height=" in line for line in report.lines)
        assert versions >= 2
    rc = audit.main(["forget-check", "--chain", str(chain_path),
                     "--pii", str(app.users._store.path),
                     "--pairkey", pair_keys[0]])
    assert rc == 0

    # (d) the account is gone
    status, _ = client.request("POST", "/api/sessions",
                               {"principal": pii["email"], "password": "pw-user"})
    assert status == 401
    announce("right-to-be-forgotten")


# ---------------------------------------------------------------------------
# Consensus latency trend
# ---------------------------------------------------------------------------

def latency_workload(n=30, seed=777):
    rng = random.Random(seed)
    companies = [uuid4_from_rng(rng) for _ in range(3)]
    steps = []
    for i in range(n):
        cid = companies[i % 3]
        steps.append({
            "step": "submit", "kind": KIND_PUT_PERMISSION, "submitter": "gateway",
            "payload": {"pairKey": compute_pair_key(uuid4_from_rng(rng), cid),
                        "companyId": cid,
                        "flags": PermissionFlags(email=True).to_dict()},
        })
        steps.append({"step": "advance", "ms": 25})
    return steps


def test_consensus_latency_trend(tmp_path):
    steps = latency_workload()
    peer_counts = [1, 2, 4, 8]
    means = {}
    for n in peer_counts:
        samples = []
        for seed in range(100, 120):
            config = NetworkConfig(
                peer_count=n, quorum=n, max_block_txs=1, seed=seed,
                latency=LatencyModel("uniform", min_ms=1, max_ms=5),
            )
            result = run_scenario(config, steps)
            assert len(result.commit_latency_us) == 30
            samples.extend(result.commit_latency_us.values())
        means[n] = statistics.mean(samples)
    ordered = [means[n] for n in peer_counts]
    assert ordered == sorted(ordered), f"latency not monotone: {means}"
    announce("consensus-latency-trend")


# ---------------------------------------------------------------------------
# Performance budget
# ---------------------------------------------------------------------------

def test_put_permission_latency_budget(tmp_path):
    app = fast_app(tmp_path, peers=4)
    server, base = start_background(app)
    try:
        http = requests.Session()
        r = http.post(f"{base}/api/sessions",
                      json={"principal": "admin", "password": "admin-pw"})
        admin = r.json()["token"]
        r = http.post(f"{base}/api/companies", json={"name": "Acme", "password": "pw"})
        cid = r.json()["companyId"]
        r = http.post(f"{base}/api/sessions", json={"principal": "Acme", "password": "pw"})
        ctoken = r.json()["token"]
        assert http.put(f"{base}/api/companies/me/profile",
                        json={"description": "d", "contactEmail": "e@x.test"},
                        headers={"Authorization": f"Bearer {ctoken}"}).status_code == 200
        assert http.post(f"{base}/api/admin/companies/{cid}/accredit",
                         json={"accredited": True},
                         headers={"Authorization": f"Bearer {admin}"}).status_code == 200
        r = http.post(f"{base}/api/users", json={
            "name": "Perf User", "email": "perf@example.test", "phone": "555-0000",
            "location": "Oshawa", "password": "pw"})
        assert r.status_code == 201
        token = http.post(f"{base}/api/sessions",
                          json={"principal": "perf@example.test",
                                "password": "pw"}).json()["token"]

        durations = []
        for i in range(21):
            body = {flag: bool((i >> j) & 1) for j, flag in enumerate(FLAGS)}
            started = time.perf_counter()
            r = http.put(f"{base}/api/permissions/{cid}", json=body,
                         headers={"Authorization": f"Bearer {token}"})
            durations.append(time.perf_counter() - started)
            assert r.status_code == 200
        median_ms = statistics.median(durations) * 1000
        assert median_ms < 250, f"median {median_ms:.1f} ms"
        print(f"ACCEPT performance-budget PASS (median {median_ms:.1f} ms)")
    finally:
        server.shutdown()
        server.server_close()
