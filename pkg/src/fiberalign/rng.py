"""Named random substreams derived from a single root seed.

Every stage of a run (generation, noise trials, Monte Carlo, ...) draws from
its own named substream, so adding or reordering stages never perturbs the
draws of another stage, and parallel stages can be given per-index streams.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(root_seed: int, name: str, *indices: int) -> np.random.Generator:
    """Generator for the substream `name` (optionally indexed) of `root_seed`.

    The stream is a pure function of (root_seed, name, indices): the name is
    hashed with SHA-256 and folded into the seed entropy, so distinct names
    give statistically independent streams.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
    entropy = [int(root_seed) & _MASK64, *words]
    entropy.extend(int(i) & _MASK64 for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy))
