"""
Reproducible random streams.

Each Monte-Carlo path gets its own counter-based Philox generator keyed by
(master_seed, path_index). Sub-streams (forward increments, backward
increments, OU conditional draws, bridge maxima) extend the spawn key with a
fixed stream id, so a path's randomness never depends on how many other
paths were generated or in which order.
"""

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]

# Stream ids appended to a path's spawn key
STREAM_FORWARD = 0
STREAM_BACKWARD = 1
STREAM_OU = 2
STREAM_BRIDGE = 3
STREAM_BRIDGE_NEG = 4
STREAM_EXPERIMENT = 5


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def path_seed(master_seed: int, path_index: int) -> np.random.SeedSequence:
    """Seed sequence of Monte-Carlo path ``path_index``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(path_index),))


def substream(seed: SeedLike, stream_id: int) -> np.random.Generator:
    """Independent Philox generator for one named sub-stream of ``seed``."""
    parent = as_seed_sequence(seed)
    child = np.random.SeedSequence(parent.entropy, spawn_key=tuple(parent.spawn_key) + (int(stream_id),))
    return np.random.Generator(np.random.Philox(child))
