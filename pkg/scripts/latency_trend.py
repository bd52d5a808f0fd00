#!/usr/bin/env python3
"""Commit-latency vs peer-count experiment.

Every update needs all peers to endorse and commit, so mean commit latency
should grow with the peer count under the same link model. Runs the same
workload over a grid of peer counts and seeds and prints the trend.

    python scripts/latency_trend.py --runs 20 --txs 30
"""

import argparse
import random
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from consentchain.ledger import (
    KIND_PUT_PERMISSION,
    PermissionFlags,
    compute_pair_key,
    uuid4_from_rng,
)
from consentchain.network import LatencyModel, NetworkConfig, run_scenario


def workload(n: int, seed: int):
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


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--peer-counts", type=int, nargs="+", default=[1, 2, 4, 8])
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--txs", type=int, default=30)
    parser.add_argument("--min-ms", type=int, default=1)
    parser.add_argument("--max-ms", type=int, default=5)
    args = parser.parse_args()

    steps = workload(args.txs, seed=777)
    print(f"{'peers':>6} {'mean ms':>9} {'p50 ms':>8} {'p95 ms':>8}  ({args.runs} runs)")
    means = []
    for n in args.peer_counts:
        samples = []
        for seed in range(100, 100 + args.runs):
            config = NetworkConfig(
                peer_count=n, quorum=n, max_block_txs=1, seed=seed,
                latency=LatencyModel("uniform", min_ms=args.min_ms, max_ms=args.max_ms),
            )
            result = run_scenario(config, steps)
            samples.extend(result.commit_latency_us.values())
        ordered = sorted(samples)
        mean = statistics.mean(samples) / 1000
        means.append(mean)
        print(f"{n:>6} {mean:>9.3f} {ordered[len(ordered)//2]/1000:>8.3f} "
              f"{ordered[int(len(ordered)*0.95)]/1000:>8.3f}")
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    print("TREND:", "non-decreasing (more peers, slower updates)"
          if monotone else "NOT monotone")
    return 0 if monotone else 1


if __name__ == "__main__":
    raise SystemExit(main())
