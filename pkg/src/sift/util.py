"""Shared helpers: stable seed derivation and hashing.

Every random draw in the package flows from a run seed through
derive_seed, so identical configurations replay identically regardless
of evaluation order, platform, or process count.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Fold arbitrary labels into a 63-bit seed, stable across runs."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def stable_bucket(text: str, buckets: int) -> int:
    """Deterministic bucket index for a string (hash feature columns)."""
    digest = hashlib.md5(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % buckets
