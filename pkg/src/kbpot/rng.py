"""Seed splitting.

Every random stream is derived from the run's single 64-bit seed plus a
(stream name, key) pair, so draws do not depend on processing order.
"""

import zlib

import numpy as np


def stable_key(text: str) -> int:
    return zlib.crc32(text.encode())


def derive_rng(seed: int, stream: str, key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(stable_key(stream), int(key)))
    return np.random.default_rng(ss)
