"""Seed derivation and random number generation.

All randomness in the package flows through numpy's PCG64 bit generator
(normal variates via numpy's ziggurat sampler), so every result is
reproducible from integer seeds. Independent random roles (initialization,
data, evaluation, per-trial) are separated by deriving a child seed from
``(base_seed, *tags)`` through ``numpy.random.SeedSequence``; changing the
consumption in one role never perturbs another.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import ValidationError

_MASK64 = (1 << 64) - 1


def _entropy(seed: int, tags) -> list[int]:
    if not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {type(seed).__name__}")
    parts = [int(seed) & _MASK64]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            parts.append(int(tag) & _MASK64)
        else:
            parts.append(zlib.crc32(str(tag).encode("utf-8")))
    return parts


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """A PCG64 generator keyed by ``seed`` and a role tag path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(seed, tags))))


def derive_seed(seed: int, *tags) -> int:
    """A derived integer seed, for handing to components that seed themselves."""
    ss = np.random.SeedSequence(_entropy(seed, tags))
    return int(ss.generate_state(1, np.uint64)[0])
