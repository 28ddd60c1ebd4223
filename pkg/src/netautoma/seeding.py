"""Deterministic seed derivation.

Every random stream in the package comes from a numpy ``Generator`` backed by
PCG64, seeded with a 64-bit integer.  Child seeds are derived from a parent
seed plus a scope string and integer indices by hashing with BLAKE2b, so a
given (master, scope, index) always maps to the same stream on every platform
and independently of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(parent: int, scope: str, *index: int | str) -> int:
    """Return a 64-bit child seed for ``(parent, scope, *index)``."""
    key = ":".join([str(int(parent) & SEED_MASK), scope, *map(str, index)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero for x >= 0."""
    return int(np.floor(x + 0.5))
