"""Canonical serialization and content hashing.

Every byte that gets hashed or persisted goes through this module so that
two independent replays of the same data produce bit-identical output:
UTF-8, object keys sorted by code point, no insignificant whitespace,
RFC 8259 minimal string escaping. Floats and null are rejected outright;
nothing in the system needs them and banning them removes every
cross-platform serialization ambiguity.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

__all__ = [
    "CanonicalError",
    "canonical_dumps",
    "canonical_bytes",
    "canonical_hash",
    "sha256_hex",
]

HEX64 = frozenset("0123456789abcdef")


class CanonicalError(ValueError):
    """Value contains something outside the canonical data model."""


def _check(value: Any, path: str) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        return
    if isinstance(value, str):
        return
    if isinstance(value, float):
        raise CanonicalError(f"float at {path} is not representable")
    if value is None:
        raise CanonicalError(f"null at {path} is not representable")
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise CanonicalError(f"non-string key {key!r} at {path}")
            _check(item, f"{path}.{key}")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    raise CanonicalError(f"{type(value).__name__} at {path} is not representable")


def canonical_dumps(value: Any) -> str:
    """Serialize to the canonical text form, rejecting floats and null."""
    _check(value, "$")
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    """Lowercase hex SHA-256 digest of raw bytes."""
    return hashlib.sha256(data).hexdigest()


def canonical_hash(value: Any) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return sha256_hex(canonical_bytes(value))


def is_hex_digest(value: Any) -> bool:
    """True iff value is a 64-char lowercase hex string."""
    return isinstance(value, str) and len(value) == 64 and set(value) <= HEX64
