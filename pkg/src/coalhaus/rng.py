"""Replicate seeding.

Replicate ``r`` of an experiment with master seed ``s`` always draws from
``SeedSequence(s, spawn_key=(r,))``, which is the ``r``-th child of
``SeedSequence(s).spawn(...)``. Streams are therefore independent of the
order (or process) in which replicates are executed.
"""

from __future__ import annotations

import numpy as np


def replicate_seed_sequence(master: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(int(rep),))


def replicate_rng(master: int, rep: int) -> np.random.Generator:
    """Independent PCG64 generator for replicate ``rep``."""
    return np.random.default_rng(replicate_seed_sequence(master, rep))


def derive_master(master: int, *tags: int) -> int:
    """Deterministic sub-master seed, e.g. one per value of K in a sweep."""
    # leading 2**31 keeps these keys disjoint from replicate keys (r,)
    key = (2**31,) + tuple(int(t) for t in tags)
    ss = np.random.SeedSequence(int(master), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
