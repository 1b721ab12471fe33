"""Deterministic random-stream management.

Every stochastic component draws from its own named substream derived
from the single experiment seed, so adding draws to one component never
perturbs another. Stream keys hash via crc32, which is stable across
processes (unlike the salted builtin hash).
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "child_seed"]


def _key_to_int(key: str) -> int:
    return zlib.crc32(key.encode("utf-8"))


def child_seed(root_seed: int, key: str) -> np.random.SeedSequence:
    """SeedSequence for the named substream of ``root_seed``."""
    if root_seed < 0:
        raise ValueError("root_seed must be non-negative")
    return np.random.SeedSequence(entropy=root_seed, spawn_key=(_key_to_int(key),))


def substream(root_seed: int, key: str) -> np.random.Generator:
    """Independent Generator for the named substream.

    Same (seed, key) pair always yields an identical stream; distinct
    keys give streams that are independent for practical purposes.
    """
    return np.random.Generator(np.random.PCG64(child_seed(root_seed, key)))
