"""Audit CLI: mechanical checks of the privacy properties on persisted files.

Four checks, all read-only:

  verify-chain   every hash link and block hash re-verified
  scan-pii       no stored PII value or user id occurs anywhere in chain bytes
  replay         deterministic world-state hash of a chain file
  forget-check   a pair key is fully revoked on chain and its subject's PII
                 is physically gone from the store file

Output is a plain-text report; the final line is machine-readable:
``AUDIT <check> PASS|FAIL <details>``. Exit codes: 0 pass, 1 violation,
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .canonical import is_hex_digest
from .ledger import (
    ChainFileError,
    PERM_PREFIX,
    PermissionFlags,
    compute_pair_key,
    query_history,
    read_chain,
    replay_chain,
    state_hash,
    validate_chain,
)

__all__ = ["Report", "verify_chain", "scan_pii", "replay", "forget_check", "main"]

PII_FIELDS = ("name", "email", "phone", "location")
MIN_SCAN_LENGTH = 4  # shorter strings false-positive on structural bytes


@dataclass
class Report:
    check: str
    passed: bool
    details: str
    lines: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def render(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        out = list(self.lines)
        out.append(f"AUDIT {self.check} {verdict} {self.details}")
        return "\n".join(out)


def _load_pii_records(path: Path) -> list[dict]:
    records = []
    with open(path, "rb") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line.decode("utf-8")))
            except ValueError as exc:
                raise ChainFileError(f"pii store line {line_no}: {exc}") from exc
    return records


def verify_chain(chain_path: Path) -> Report:
    try:
        chain = read_chain(chain_path)
    except ChainFileError as exc:
        return Report("verify-chain", False, f"unreadable chain: {exc}")
    problems = validate_chain(chain)
    if problems:
        return Report(
            "verify-chain", False, problems[0], [f"violation: {p}" for p in problems]
        )
    return Report("verify-chain", True, f"blocks={len(chain)}")


def scan_pii(chain_path: Path, pii_path: Path) -> Report:
    try:
        chain_bytes = chain_path.read_bytes()
        records = _load_pii_records(pii_path)
    except ChainFileError as exc:
        return Report("scan-pii", False, str(exc))

    needles: list[tuple[str, bytes]] = []
    for record in records:
        if record.get("ns") != "user":
            continue
        user_id = record.get("id", "")
        if len(user_id) >= MIN_SCAN_LENGTH:
            needles.append((f"user-id:{user_id[:8]}…", user_id.encode("utf-8")))
        doc = record.get("doc") or {}
        for field_name in PII_FIELDS:
            value = doc.get(field_name, "")
            if isinstance(value, str) and len(value) >= MIN_SCAN_LENGTH:
                needles.append((f"{field_name}(len={len(value)})", value.encode("utf-8")))

    lines = [f"chain bytes: {len(chain_bytes)}", f"scan values: {len(needles)}"]
    hits = []
    for label, needle in needles:
        offset = chain_bytes.find(needle)
        while offset != -1:
            hits.append((offset, label))
            offset = chain_bytes.find(needle, offset + 1)
    for offset, label in sorted(hits):
        lines.append(f"hit: offset={offset} {label}")
    if hits:
        return Report("scan-pii", False, f"hits={len(hits)}", lines)
    return Report("scan-pii", True, "hits=0", lines)


def replay(chain_path: Path) -> Report:
    try:
        chain = read_chain(chain_path)
    except ChainFileError as exc:
        return Report("replay", False, f"unreadable chain: {exc}")
    problems = validate_chain(chain)
    if problems:
        return Report("replay", False, problems[0])
    digest = state_hash(replay_chain(chain))
    return Report("replay", True, f"stateHash={digest}", [f"stateHash {digest}"])


def forget_check(chain_path: Path, pii_path: Path, pair_key: str) -> Report:
    check = "forget-check"
    if not is_hex_digest(pair_key):
        return Report(check, False, "pairkey must be a 64-char lowercase hex digest")
    try:
        chain = read_chain(chain_path)
        records = _load_pii_records(pii_path)
    except ChainFileError as exc:
        return Report(check, False, str(exc))
    problems = validate_chain(chain)
    if problems:
        return Report(check, False, problems[0])

    state = replay_chain(chain)
    key = PERM_PREFIX + pair_key
    asset = state.get(key)
    if asset is None:
        return Report(check, False, f"not-found: no permission asset for {pair_key}")

    lines = [f"company: {asset['companyId']}"]
    history = query_history(chain, key)
    lines.append(f"on-chain history ({len(history)} versions, immutable):")
    for height, tx_id, value in history:
        granted = sorted(n for n, on in value["flags"].items() if on)
        lines.append(
            f"  height={height} tx={tx_id} flags={','.join(granted) if granted else 'none'}"
        )

    if not PermissionFlags.from_dict(asset["flags"]).all_false():
        return Report(check, False, "still granted: latest flags are not all false", lines)

    # Live user whose (userId, companyId) hashes to this pair key means the
    # subject's PII is still resolvable: not forgotten.
    live_ids: set[str] = set()
    deleted_ids: set[str] = set()
    put_seen: set[str] = set()
    retained: set[str] = set()
    for record in records:
        if record.get("ns") != "user":
            continue
        record_id = record.get("id", "")
        if record.get("op") == "put":
            put_seen.add(record_id)
            live_ids.add(record_id)
            deleted_ids.discard(record_id)
        elif record.get("op") == "del":
            live_ids.discard(record_id)
            deleted_ids.add(record_id)
            if record_id in put_seen:
                retained.add(record_id)
    for user_id in sorted(live_ids):
        if compute_pair_key(user_id, asset["companyId"]) == pair_key:
            return Report(check, False, "subject still present in pii store", lines)
    if retained:
        return Report(
            check,
            False,
            f"store not compacted: {len(retained)} deleted record(s) still on disk",
            lines,
        )
    lines.append(f"pii store: {len(live_ids)} live records, none matching the pair key")
    return Report(check, True, f"revoked on chain, history={len(history)} versions", lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="audit",
        description="Verify ledger integrity and privacy properties of persisted files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-chain", help="re-verify every hash link and block hash")
    p.add_argument("--chain", type=Path, required=True)

    p = sub.add_parser("scan-pii", help="scan chain bytes for stored PII values")
    p.add_argument("--chain", type=Path, required=True)
    p.add_argument("--pii", type=Path, required=True)

    p = sub.add_parser("replay", help="replay a chain and print its state hash")
    p.add_argument("--chain", type=Path, required=True)

    p = sub.add_parser("forget-check", help="prove a pair key was forgotten")
    p.add_argument("--chain", type=Path, required=True)
    p.add_argument("--pii", type=Path, required=True)
    p.add_argument("--pairkey", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "verify-chain":
            report = verify_chain(args.chain)
        elif args.command == "scan-pii":
            report = scan_pii(args.chain, args.pii)
        elif args.command == "replay":
            report = replay(args.chain)
        else:
            report = forget_check(args.chain, args.pii, args.pairkey)
    except OSError as exc:
        print(f"audit: cannot read input: {exc}", file=sys.stderr)
        return 2
    print(report.render())
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
