"""Reproducible random streams.

All randomness in the package flows through Philox (numpy's counter-based
64-bit generator).  A stream is addressed by a 64-bit user seed plus a
textual path (scenario id, purpose, item index, ...); the path is hashed
with BLAKE2b to the high word of the 128-bit Philox key:

    key = (blake2b_64("part/part/...") << 64) | (seed & 2**64-1)

Independent streams for distinct paths come from distinct keys, so batch
items can be generated concurrently and in any order without changing the
result.  Bit-exact reproducibility is promised only within this
implementation; ports in other languages can match moments, not bits.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def path_hash(*path: object) -> int:
    """64-bit BLAKE2b hash of the '/'-joined stream path."""
    label = "/".join(str(p) for p in path)
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *path: object) -> np.random.Generator:
    """Generator for the stream addressed by (seed, path).

    The same (seed, path) always yields the same stream; distinct paths
    yield statistically independent streams.
    """
    key = (path_hash(*path) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
