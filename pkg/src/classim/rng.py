"""Deterministic named substreams derived from one user-facing seed.

Every randomized entry point takes an explicit generator; nothing in the
package touches global RNG state. The CLI derives one substream per purpose
("ensemble", "monte-carlo") so adding a new use of randomness never shifts
the numbers produced by an existing one.
"""

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for the named substream of a master seed."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    )
