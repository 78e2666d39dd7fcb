"""Seeded counter-based randomness with stable named substreams.

Every stochastic component draws from a Philox generator keyed by the root
seed plus a hashed stream label, so independent units (trees, folds,
segments) get reproducible streams regardless of execution order.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def stream_id(*parts) -> int:
    """Stable 64-bit id for a tuple of stream label parts."""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest()[:8], "big")


def make_generator(seed: int, *parts) -> np.random.Generator:
    key = ((int(seed) & MASK64) << 64) | stream_id(*parts)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *parts) -> int:
    """A new 64-bit seed deterministically derived from (seed, parts)."""
    digest = hashlib.sha256()
    digest.update((int(seed) & MASK64).to_bytes(8, "big"))
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest()[:8], "big")
