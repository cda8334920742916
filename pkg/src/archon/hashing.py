"""FNV-1a 64-bit hashing.

Used for the surrogate's deterministic noise term and for scripted-fixture
slot digests. The constants are the standard FNV-1a parameters:
offset basis 14695981039346656037, prime 1099511628211, folded over the
UTF-8 bytes of the input with 64-bit wraparound. Any implementation in any
language must reproduce these values bit for bit.
"""

from __future__ import annotations

_OFFSET = 14695981039346656037
_PRIME = 1099511628211
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes | str) -> int:
    """Hash bytes (or the UTF-8 encoding of a string) to a 64-bit integer."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _OFFSET
    for b in data:
        h ^= b
        h = (h * _PRIME) & _MASK
    return h


def fnv1a64_hex(data: bytes | str) -> str:
    """fnv1a64 rendered as 16 lowercase hex digits."""
    return f"{fnv1a64(data):016x}"
