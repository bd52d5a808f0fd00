#!/usr/bin/env python3
"""Replication experiment: drive a mixed workload through N peers, write the
per-peer chain logs, and confirm every replica replays to the same state hash.

    python scripts/run_replication.py --peers 4 --quorum 3 --seed 42 --txs 1000 --out /tmp/repl
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from consentchain import audit
from consentchain.ledger import (
    KIND_PUT_COMPANY,
    KIND_PUT_PERMISSION,
    KIND_SET_ACCREDITATION,
    PermissionFlags,
    compute_pair_key,
    uuid4_from_rng,
)
from consentchain.network import LatencyModel, NetworkConfig, run_scenario


def build_workload(n_txs: int, seed: int):
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
                "step": "submit", "kind": KIND_SET_ACCREDITATION, "submitter": "gateway",
                "payload": {"companyId": rng.choice(companies),
                            "accredited": rng.random() < 0.7},
            })
        else:
            cid = rng.choice(companies)
            flags = PermissionFlags(*(rng.random() < 0.5 for _ in range(4)))
            steps.append({
                "step": "submit", "kind": KIND_PUT_PERMISSION, "submitter": "gateway",
                "payload": {"pairKey": compute_pair_key(rng.choice(users), cid),
                            "companyId": cid, "flags": flags.to_dict()},
            })
        if i % 50 == 49:
            steps.append({"step": "advance", "ms": 40})
    return steps


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--peers", type=int, default=4)
    parser.add_argument("--quorum", type=int, default=None)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--txs", type=int, default=1000)
    parser.add_argument("--out", type=Path, default=Path("replication-out"))
    args = parser.parse_args()

    config = NetworkConfig(
        peer_count=args.peers, quorum=args.quorum, seed=args.seed,
        latency=LatencyModel("uniform", min_ms=1, max_ms=5),
    )
    steps = build_workload(args.txs, seed=12345)
    started = time.monotonic()
    result = run_scenario(config, steps, data_dir=args.out)
    elapsed = time.monotonic() - started

    (args.out / "transcript.log").write_bytes(result.transcript)
    print(f"peers={args.peers} quorum={config.effective_quorum()} "
          f"txs={args.txs} elapsed={elapsed:.2f}s")
    print(f"committed={len(result.commit_latency_us)} rejected={len(result.rejections)}")
    hashes = set()
    for peer_id, path in sorted(result.chain_paths.items()):
        report = audit.replay(path)
        print(f"  {peer_id}: {report.details} height={result.chain_heights[peer_id]}")
        hashes.add(report.details)
    if len(hashes) == 1:
        print("REPLICATION OK: all peers replay to the same state hash")
        return 0
    print("REPLICATION MISMATCH")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
