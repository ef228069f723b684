"""Deterministic seed splitting.

Every derived seed is a pure function of the master seed and a tuple of keys,
so work can be scheduled in any order (or on any number of workers) without
changing results. String keys are folded to integers with CRC-32.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    return int(k) & 0xFFFFFFFFFFFFFFFF


def derive_seed(master: int, *keys) -> int:
    """64-bit child seed for ``(master, *keys)``."""
    words = []
    for k in (master, *keys):
        k = _key(k)
        words += [k & 0xFFFFFFFF, k >> 32]
    lo, hi = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def numba_seed(seed: int) -> int:
    """Fold a 64-bit seed into the 32-bit range numba's ``np.random.seed`` takes."""
    return int(np.random.SeedSequence(_key(seed)).generate_state(1, dtype=np.uint32)[0])
