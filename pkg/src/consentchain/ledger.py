"""Ledger core: transactions, blocks, state transition, chain files.

The chain is a flat list of hash-linked blocks; the world state is the
deterministic fold of every committed transaction in chain order. Assets
never carry a user reference: permission records are keyed by an opaque
pair key (SHA-256 of ``userId ":" companyId``), so the chain by itself
cannot be mapped back to a person.

Transactions carry absolute replacement values, not diffs; replay order
alone decides the final state.
"""

from __future__ import annotations

import re
import struct
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .canonical import canonical_bytes, canonical_hash, is_hex_digest, sha256_hex

__all__ = [
    "LedgerError",
    "BlockLinkError",
    "ChainFileError",
    "PermissionFlags",
    "PermissionAsset",
    "CompanyAsset",
    "Transaction",
    "Block",
    "KIND_PUT_PERMISSION",
    "KIND_PUT_COMPANY",
    "KIND_SET_ACCREDITATION",
    "compute_pair_key",
    "hash_block",
    "make_genesis",
    "validate_transaction",
    "apply_transaction",
    "apply_block",
    "append_block",
    "validate_chain",
    "replay_chain",
    "query_state",
    "query_history",
    "state_hash",
    "read_chain",
    "append_block_file",
    "chain_file_name",
]

GENESIS_PREV_HASH = "0" * 64
GENESIS_TIMESTAMP_MS = 0

KIND_PUT_PERMISSION = "PutPermission"
KIND_PUT_COMPANY = "PutCompany"
KIND_SET_ACCREDITATION = "SetAccreditation"
TX_KINDS = frozenset({KIND_PUT_PERMISSION, KIND_PUT_COMPANY, KIND_SET_ACCREDITATION})

FLAG_NAMES = ("name", "email", "phone", "location")

_UUID4_RE = re.compile(
    r"^[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}$"
)

# World-state key prefixes.
PERM_PREFIX = "perm:"
COMPANY_PREFIX = "company:"


class LedgerError(Exception):
    """Base error for ledger operations."""


class BlockLinkError(LedgerError):
    """Block does not extend the chain tip."""


class ChainFileError(LedgerError):
    """Chain file is truncated, unparsable, or structurally invalid."""


def new_uuid4() -> str:
    return str(uuid.uuid4())


def uuid4_from_rng(rng) -> str:
    """Mint a well-formed UUIDv4 from a seeded PRNG (for reproducible runs)."""
    return str(uuid.UUID(bytes=rng.randbytes(16), version=4))


def is_uuid4(value) -> bool:
    return isinstance(value, str) and _UUID4_RE.match(value) is not None


def compute_pair_key(user_id: str, company_id: str) -> str:
    """SHA-256 over ``userId ":" companyId`` in UTF-8, lowercase hex.

    The separator byte keeps ("ab","c") and ("a","bc") distinct. Total over
    all string inputs; emptiness checks belong to the callers.
    """
    data = user_id.encode("utf-8") + b":" + company_id.encode("utf-8")
    return sha256_hex(data)


@dataclass(frozen=True)
class PermissionFlags:
    """The four consent booleans. Exactly these; no free-form payload."""

    name: bool = False
    email: bool = False
    phone: bool = False
    location: bool = False

    def all_false(self) -> bool:
        """True iff every flag is off — the deletion marker."""
        return not (self.name or self.email or self.phone or self.location)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "email": self.email,
            "phone": self.phone,
            "location": self.location,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PermissionFlags":
        return cls(**{k: bool(data[k]) for k in FLAG_NAMES})


@dataclass(frozen=True)
class PermissionAsset:
    """On-chain consent record. Carries a company reference, never a user."""

    pair_key: str
    company_id: str
    flags: PermissionFlags

    def to_dict(self) -> dict:
        return {
            "pairKey": self.pair_key,
            "companyId": self.company_id,
            "flags": self.flags.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PermissionAsset":
        return cls(
            pair_key=data["pairKey"],
            company_id=data["companyId"],
            flags=PermissionFlags.from_dict(data["flags"]),
        )


@dataclass(frozen=True)
class CompanyAsset:
    """On-chain public company profile, keyed by UUIDv4."""

    company_id: str
    name: str
    description: str = ""
    contact_email: str = ""
    accredited: bool = False

    def to_dict(self) -> dict:
        return {
            "companyId": self.company_id,
            "name": self.name,
            "description": self.description,
            "contactEmail": self.contact_email,
            "accredited": self.accredited,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompanyAsset":
        return cls(
            company_id=data["companyId"],
            name=data["name"],
            description=data["description"],
            contact_email=data["contactEmail"],
            accredited=data["accredited"],
        )


@dataclass(frozen=True)
class Transaction:
    """One deterministic state mutation; payload is the full new value."""

    tx_id: str
    kind: str
    payload: dict
    submitter: str
    timestamp_ms: int

    def to_dict(self) -> dict:
        return {
            "txId": self.tx_id,
            "kind": self.kind,
            "payload": self.payload,
            "submitter": self.submitter,
            "timestampMs": self.timestamp_ms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transaction":
        return cls(
            tx_id=data["txId"],
            kind=data["kind"],
            payload=data["payload"],
            submitter=data["submitter"],
            timestamp_ms=data["timestampMs"],
        )


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: str
    timestamp_ms: int
    transactions: tuple[Transaction, ...]
    block_hash: str

    def header_dict(self) -> dict:
        """Everything that gets hashed, i.e. the block sans its own hash."""
        return {
            "height": self.height,
            "prevHash": self.prev_hash,
            "timestampMs": self.timestamp_ms,
            "transactions": [tx.to_dict() for tx in self.transactions],
        }

    def to_dict(self) -> dict:
        data = self.header_dict()
        data["blockHash"] = self.block_hash
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Block":
        return cls(
            height=data["height"],
            prev_hash=data["prevHash"],
            timestamp_ms=data["timestampMs"],
            transactions=tuple(Transaction.from_dict(t) for t in data["transactions"]),
            block_hash=data["blockHash"],
        )


def hash_block(
    height: int, prev_hash: str, timestamp_ms: int, transactions: tuple[Transaction, ...]
) -> str:
    return canonical_hash(
        {
            "height": height,
            "prevHash": prev_hash,
            "timestampMs": timestamp_ms,
            "transactions": [tx.to_dict() for tx in transactions],
        }
    )


def seal_block(
    height: int, prev_hash: str, timestamp_ms: int, transactions: tuple[Transaction, ...]
) -> Block:
    return Block(
        height=height,
        prev_hash=prev_hash,
        timestamp_ms=timestamp_ms,
        transactions=tuple(transactions),
        block_hash=hash_block(height, prev_hash, timestamp_ms, tuple(transactions)),
    )


def make_genesis() -> Block:
    """Height 0, all-zero prev hash, no transactions, fixed timestamp."""
    return seal_block(0, GENESIS_PREV_HASH, GENESIS_TIMESTAMP_MS, ())


# ---------------------------------------------------------------------------
# Transaction validation
# ---------------------------------------------------------------------------

def _flags_violations(flags, ctx: str) -> list[str]:
    out = []
    if not isinstance(flags, dict):
        return [f"{ctx}: flags must be an object"]
    extra = set(flags) - set(FLAG_NAMES)
    missing = set(FLAG_NAMES) - set(flags)
    for name in sorted(extra):
        out.append(f"{ctx}: unknown flag field {name!r}")
    for name in sorted(missing):
        out.append(f"{ctx}: missing flag {name!r}")
    for name in FLAG_NAMES:
        if name in flags and not isinstance(flags[name], bool):
            out.append(f"{ctx}: flag {name!r} must be boolean")
    return out


def validate_transaction(tx: Transaction) -> list[str]:
    """Structural checks; returns violation descriptions, empty when ok.

    PutPermission payloads are a closed schema: any field beyond
    {pairKey, companyId, flags} is rejected as potentially PII-bearing,
    which is what makes the no-PII-on-chain property decidable.
    """
    v: list[str] = []
    if not is_uuid4(tx.tx_id):
        v.append(f"txId {tx.tx_id!r} is not a UUIDv4")
    if tx.kind not in TX_KINDS:
        v.append(f"unknown transaction kind {tx.kind!r}")
        return v
    if not isinstance(tx.submitter, str):
        v.append("submitter must be a string")
    if not isinstance(tx.timestamp_ms, int) or isinstance(tx.timestamp_ms, bool) or tx.timestamp_ms < 0:
        v.append("timestampMs must be a non-negative integer")
    p = tx.payload
    if not isinstance(p, dict):
        v.append("payload must be an object")
        return v

    if tx.kind == KIND_PUT_PERMISSION:
        allowed = {"pairKey", "companyId", "flags"}
        for name in sorted(set(p) - allowed):
            v.append(f"PII-bearing field on chain: unexpected payload field {name!r}")
        for name in sorted(allowed - set(p)):
            v.append(f"missing payload field {name!r}")
        pk = p.get("pairKey")
        if pk is not None and not is_hex_digest(pk):
            v.append(f"pairKey {pk!r} is not a 64-char lowercase hex digest")
        cid = p.get("companyId")
        if cid is not None and not is_uuid4(cid):
            v.append(f"companyId {cid!r} is not a UUIDv4")
        if "flags" in p:
            v.extend(_flags_violations(p["flags"], "PutPermission"))
    elif tx.kind == KIND_PUT_COMPANY:
        allowed = {"companyId", "name", "description", "contactEmail", "accredited"}
        for name in sorted(set(p) - allowed):
            v.append(f"unexpected payload field {name!r}")
        for name in sorted(allowed - set(p)):
            v.append(f"missing payload field {name!r}")
        cid = p.get("companyId")
        if cid is not None and not is_uuid4(cid):
            v.append(f"companyId {cid!r} is not a UUIDv4")
        if "name" in p and (not isinstance(p["name"], str) or not p["name"]):
            v.append("company name must be a non-empty string")
        for name in ("description", "contactEmail"):
            if name in p and not isinstance(p[name], str):
                v.append(f"{name} must be a string")
        if "accredited" in p and not isinstance(p["accredited"], bool):
            v.append("accredited must be boolean")
    elif tx.kind == KIND_SET_ACCREDITATION:
        allowed = {"companyId", "accredited"}
        for name in sorted(set(p) - allowed):
            v.append(f"unexpected payload field {name!r}")
        for name in sorted(allowed - set(p)):
            v.append(f"missing payload field {name!r}")
        cid = p.get("companyId")
        if cid is not None and not is_uuid4(cid):
            v.append(f"companyId {cid!r} is not a UUIDv4")
        if "accredited" in p and not isinstance(p["accredited"], bool):
            v.append("accredited must be boolean")
    return v


# ---------------------------------------------------------------------------
# State transition
# ---------------------------------------------------------------------------

def tx_write(state: dict, tx: Transaction) -> Optional[tuple[str, dict]]:
    """The (stateKey, newValue) a transaction would write, or None if it
    cannot apply (SetAccreditation on a missing company)."""
    if tx.kind == KIND_PUT_PERMISSION:
        return PERM_PREFIX + tx.payload["pairKey"], dict(tx.payload)
    if tx.kind == KIND_PUT_COMPANY:
        return COMPANY_PREFIX + tx.payload["companyId"], dict(tx.payload)
    if tx.kind == KIND_SET_ACCREDITATION:
        key = COMPANY_PREFIX + tx.payload["companyId"]
        current = state.get(key)
        if current is None:
            return None
        updated = dict(current)
        updated["accredited"] = tx.payload["accredited"]
        return key, updated
    return None


def apply_transaction(state: dict, tx: Transaction) -> dict:
    """Fold one transaction into the world state; input state untouched.

    Invalid or inapplicable transactions leave the state unchanged, and
    every replica makes that call identically.
    """
    if validate_transaction(tx):
        return state
    write = tx_write(state, tx)
    if write is None:
        return state
    key, value = write
    out = dict(state)
    out[key] = value
    return out


def apply_block(state: dict, block: Block) -> dict:
    for tx in block.transactions:
        state = apply_transaction(state, tx)
    return state


def query_state(state: dict, key: str) -> Optional[dict]:
    return state.get(key)


def state_hash(state: dict) -> str:
    return canonical_hash(state)


# ---------------------------------------------------------------------------
# Chain operations
# ---------------------------------------------------------------------------

def verify_block_shape(block: Block) -> list[str]:
    problems = []
    if not isinstance(block.height, int) or block.height < 0:
        problems.append("height must be a non-negative integer")
    if not is_hex_digest(block.prev_hash):
        problems.append("prevHash is not a 64-char lowercase hex digest")
    expected = hash_block(block.height, block.prev_hash, block.timestamp_ms, block.transactions)
    if block.block_hash != expected:
        problems.append(f"blockHash mismatch: stored {block.block_hash} computed {expected}")
    return problems


def append_block(chain: list[Block], block: Block) -> None:
    """Extend the chain in place after verifying linkage and the block hash."""
    problems = verify_block_shape(block)
    if problems:
        raise BlockLinkError("; ".join(problems))
    if not chain:
        if block.height != 0 or block.prev_hash != GENESIS_PREV_HASH:
            raise BlockLinkError("first block must be genesis-shaped")
    else:
        tip = chain[-1]
        if block.height != tip.height + 1:
            raise BlockLinkError(
                f"height gap: tip is {tip.height}, block claims {block.height}"
            )
        if block.prev_hash != tip.block_hash:
            raise BlockLinkError(
                f"stale prevHash at height {block.height}: expected {tip.block_hash}"
            )
    chain.append(block)


def validate_chain(chain: list[Block]) -> list[str]:
    """Re-verify every hash link and block hash; empty list means clean."""
    problems: list[str] = []
    for i, block in enumerate(chain):
        for p in verify_block_shape(block):
            problems.append(f"block {block.height}: {p}")
        if i == 0:
            if block.height != 0:
                problems.append(f"block {block.height}: chain does not start at height 0")
            if block.prev_hash != GENESIS_PREV_HASH:
                problems.append("block 0: genesis prevHash must be all zeros")
            if block.transactions:
                problems.append("block 0: genesis must carry no transactions")
        else:
            prev = chain[i - 1]
            if block.height != prev.height + 1:
                problems.append(
                    f"block {block.height}: height not consecutive after {prev.height}"
                )
            if block.prev_hash != prev.block_hash:
                problems.append(f"block {block.height}: broken hash link")
    return problems


def replay_chain(chain: list[Block]) -> dict:
    """World state as the fold of apply_transaction over all blocks."""
    state: dict = {}
    for block in chain:
        state = apply_block(state, block)
    return state


def query_history(chain: list[Block], key: str) -> list[tuple[int, str, dict]]:
    """Every committed transaction that wrote the key, in chain order.

    Values are the absolute asset values after each write, so the history of
    a deleted user's permission still shows the earlier true-flag versions.
    """
    entries: list[tuple[int, str, dict]] = []
    state: dict = {}
    for block in chain:
        for tx in block.transactions:
            new_state = apply_transaction(state, tx)
            if new_state is not state:
                write = tx_write(state, tx)
                if write is not None and write[0] == key:
                    entries.append((block.height, tx.tx_id, write[1]))
            state = new_state
    return entries


# ---------------------------------------------------------------------------
# Chain files: append-only, length-prefixed canonical block records
# ---------------------------------------------------------------------------

_LEN_PREFIX = struct.Struct(">I")


def chain_file_name(peer_id: str) -> str:
    return f"chain-{peer_id}.log"


def append_block_file(path: Path, block: Block) -> None:
    data = canonical_bytes(block.to_dict())
    with open(path, "ab") as fh:
        fh.write(_LEN_PREFIX.pack(len(data)))
        fh.write(data)
        fh.flush()


def iter_chain_file(path: Path) -> Iterator[Block]:
    import json as _json

    with open(path, "rb") as fh:
        offset = 0
        while True:
            prefix = fh.read(_LEN_PREFIX.size)
            if not prefix:
                return
            if len(prefix) < _LEN_PREFIX.size:
                raise ChainFileError(f"truncated length prefix at offset {offset}")
            (length,) = _LEN_PREFIX.unpack(prefix)
            data = fh.read(length)
            if len(data) < length:
                raise ChainFileError(f"truncated block record at offset {offset}")
            try:
                raw = _json.loads(data.decode("utf-8"))
                block = Block.from_dict(raw)
            except (ValueError, KeyError, TypeError) as exc:
                raise ChainFileError(f"unparsable block at offset {offset}: {exc}") from exc
            yield block
            offset += _LEN_PREFIX.size + length


def read_chain(path: Path) -> list[Block]:
    return list(iter_chain_file(path))
