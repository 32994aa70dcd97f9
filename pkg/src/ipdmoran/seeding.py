"""Order-independent seed derivation.

Child seeds are a pure function of a master seed and a tuple of keys, so a
sample, repetition or sweep cell gets the same random stream no matter which
worker runs it or in which order.

The mixer is SplitMix64: every key is folded into the state by
``state = splitmix64(state ^ key)``. String keys are first reduced to 64 bits
with the leading eight bytes of their SHA-256 digest.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
    return int(key) & MASK64


def derive_seed(master: int, *keys: int | str) -> int:
    """Mix ``master`` with ``keys`` into a 64-bit child seed."""
    state = splitmix64(int(master) & MASK64)
    for key in keys:
        state = splitmix64(state ^ key_to_int(key))
    return state
