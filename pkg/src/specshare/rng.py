"""Seeded random streams.

Every stochastic component draws from a Philox counter-based generator keyed
by the scenario seed and a stream name, so results never depend on call order
across components or on the number of worker threads.
"""

import hashlib

import numpy as np

GENERATOR_NAME = "philox4x64"
GENERATOR_VERSION = 1

_U64 = (1 << 64) - 1


def stream_key(seed: int, *names) -> int:
    """64-bit key derived from ``seed`` and a path of stream names."""
    if not 0 <= int(seed) <= _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    h = hashlib.blake2b(digest_size=16, person=b"specshare-rng-v1")
    h.update(int(seed).to_bytes(8, "little"))
    for name in names:
        h.update(b"\x00")
        h.update(str(name).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *names) -> np.random.Generator:
    """Independent generator for the stream ``names`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *names)))
