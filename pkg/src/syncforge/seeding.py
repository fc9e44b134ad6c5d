"""Deterministic RNG derivation keyed by structured tuples.

Every random draw in the package flows through a generator derived from an
explicit key tuple (seed, purpose, index, ...), so results never depend on
scheduling, worker count, or call order.
"""

from __future__ import annotations

import zlib

import numpy as np


def _mix(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & 0xFFFFFFFFFFFFFFFF


def derive_rng(*keys) -> np.random.Generator:
    """Generator seeded by the ordered key tuple; strings hash via crc32."""
    if not keys:
        raise ValueError("derive_rng needs at least one key")
    return np.random.default_rng([_mix(k) for k in keys])


def derive_seed(*keys) -> int:
    """Stable 64-bit integer seed from the key tuple."""
    if not keys:
        raise ValueError("derive_seed needs at least one key")
    seq = np.random.SeedSequence([_mix(k) for k in keys])
    return int(seq.generate_state(1, np.uint64)[0])
