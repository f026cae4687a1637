"""Platform-independent stable hashing (blake2b over length-prefixed fields)."""

from __future__ import annotations

import hashlib


def _feed(parts: tuple[str | bytes, ...], digest_size: int) -> "hashlib.blake2b":
    h = hashlib.blake2b(digest_size=digest_size)
    for part in parts:
        data = part.encode("utf-8") if isinstance(part, str) else part
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
    return h


def stable_hash64(*parts: str | bytes) -> int:
    """Stable unsigned 64-bit hash of the given fields."""
    return int.from_bytes(_feed(parts, 8).digest(), "big")


def stable_digest(*parts: str | bytes, size: int = 32) -> bytes:
    """Stable digest of the given fields, `size` bytes long."""
    return _feed(parts, size).digest()
