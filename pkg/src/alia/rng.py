"""Deterministic randomness.

All seeded operations in the pipeline draw from numpy's Philox generator, a
64-bit counter-based PRNG whose bit stream is fixed by numpy's compatibility
policy, so a given seed yields identical draws on every platform. Derived
seeds come from BLAKE2b over the parent seed plus string context, which keeps
independent operations (per-class sampling, per-edit seeds) decorrelated and
collision-resistant without shared state.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def generator(seed: int) -> np.random.Generator:
    """Philox generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def derive_seed(base: int, *context: object) -> int:
    """Stable 64-bit seed from a base seed and any hashable context parts.

    Parts are joined with an unambiguous length-prefixed encoding so that
    ("ab", "c") and ("a", "bc") derive different seeds.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(base & MASK64).encode())
    for part in context:
        token = str(part).encode("utf-8")
        h.update(b"|%d|" % len(token))
        h.update(token)
    return int.from_bytes(h.digest(), "big")


def choose_without_replacement(seed: int, population: int, k: int) -> list[int]:
    """k distinct indices into range(population), ascending order.

    Ascending output preserves the caller's pool ordering; the subset itself
    is a uniform draw.
    """
    if k > population:
        raise ValueError(f"cannot draw {k} from population of {population}")
    idx = generator(seed).choice(population, size=k, replace=False)
    return sorted(int(i) for i in idx)
