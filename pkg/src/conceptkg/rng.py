"""Named, reproducible random streams derived from a master seed.

Streams are keyed by (seed, *path) through SHA-256, so any unit of work
(a triple index, a worker id, a stage name) gets its own independent
generator and results never depend on scheduling order.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *path) -> int:
    """Map (seed, *path) to a 64-bit child seed."""
    digest = hashlib.sha256(repr((seed,) + path).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derived_rng(seed: int, *path) -> random.Random:
    """A fresh ``random.Random`` seeded from (seed, *path)."""
    return random.Random(derive_seed(seed, *path))
