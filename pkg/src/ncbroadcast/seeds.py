"""Seed derivation.

Child seeds come from a splitmix64 finaliser applied to the parent seed
combined with a stable hash of the stream name, so any implementation that
follows these three functions reproduces the same streams.
"""

from __future__ import annotations

import zlib

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix(*parts: int) -> int:
    """Fold integers into one 64-bit seed, order sensitive."""
    h = 0
    for part in parts:
        h = splitmix64(h ^ (part & MASK64))
    return h


def derive_seed(seed: int, name: str) -> int:
    """Seed for the named stream (``"rate"``, ``"channel:3"``, ``"rlnc"``)."""
    return mix(seed, zlib.crc32(name.encode()))


def point_seed(seed: int, run: int, point: int) -> int:
    """Seed for repetition ``run`` of grid point ``point`` in a sweep."""
    return mix(seed, run, point)
