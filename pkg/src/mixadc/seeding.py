"""Counter-based seed derivation.

Every random stream in the package is keyed by ``(master seed, label...)``.
Labels are hashed with SHA-256 and the first 16 bytes become the
``spawn_key`` of a :class:`numpy.random.SeedSequence`, so streams never depend
on how many other streams were created before them or on worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np


def label_words(*labels) -> tuple[int, ...]:
    text = "|".join(str(x) for x in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()[:16]
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def derive_seed_sequence(master: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=label_words(*labels))


def derive_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(master, *labels))


def derive_seed(master: int, *labels) -> int:
    """A 63-bit integer seed, for places that need a plain int (e.g. configs)."""
    state = derive_seed_sequence(master, *labels).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)
