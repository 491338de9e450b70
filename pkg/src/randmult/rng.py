"""Counter-based 64-bit hashing used to derive per-prime values and trial seeds.

Values are pure functions of (seed, counter), so a model can be extended to
more primes, or one block of primes redrawn, without disturbing the rest.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser applied elementwise (wrapping uint64 arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def to_u64(seed: int) -> int:
    return int(seed) & _MASK


def hash_words(seed: int, counters: np.ndarray) -> np.ndarray:
    """One uniform 64-bit word per counter, determined by (seed, counter)."""
    key = splitmix64(np.array([to_u64(seed)], dtype=np.uint64))[0]
    c = np.asarray(counters, dtype=np.uint64)
    return splitmix64(splitmix64(c ^ key))


def derive_seed(base_seed: int, *labels: int | str) -> int:
    """Child seed from a base seed and a path of labels (ints or strings)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(to_u64(base_seed).to_bytes(8, "little"))
    for lab in labels:
        if isinstance(lab, str):
            h.update(b"s" + lab.encode())
        else:
            h.update(b"i" + to_u64(lab).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def generator(seed: int, *labels: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))
