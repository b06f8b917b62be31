"""
Seed splitting.

Every random stream in a study is derived from one master seed:

    SeedSequence(seed, spawn_key=(stream, index))

with stream ids GRAPH, X0, REPLICA and MOMENTS below. Replica ``r`` of a run with
master seed ``s`` therefore always sees the same draws, whatever the replica count.
"""

import numpy as np

GRAPH = 0
X0 = 1
REPLICA = 2
MOMENTS = 3


def seed_sequence(seed: int, stream: int, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(stream, index))


def stream(seed: int, stream_id: int, index: int = 0) -> np.random.Generator:
    """Return the generator for ``(stream_id, index)`` under ``seed``."""
    return np.random.default_rng(seed_sequence(seed, stream_id, index))


def derive_seed(seed: int, stream_id: int, index: int = 0) -> int:
    """Derive a 63-bit integer seed, for operations that take a plain seed."""
    state = seed_sequence(seed, stream_id, index).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))


def replica_streams(seed: int, replicas: int, first: int = 0) -> list:
    """Streams of replicas ``first .. first + replicas - 1``."""
    return [stream(seed, REPLICA, r) for r in range(first, first + replicas)]
