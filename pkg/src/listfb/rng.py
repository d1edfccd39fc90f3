"""Deterministic per-trial, per-party random streams."""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def derive_rng(master: int, *key) -> np.random.Generator:
    """PCG64 generator keyed by a master seed and a path such as (trial, "alice")."""
    seq = np.random.SeedSequence(int(master), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master: int, *key) -> int:
    """A 63-bit integer seed drawn from the same keyed stream."""
    seq = np.random.SeedSequence(int(master), spawn_key=tuple(_key_part(k) for k in key))
    return int(seq.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))
