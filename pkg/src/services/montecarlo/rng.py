"""Seeded random streams for reproducible simulations.

Every worker owns one stream, derived from the master seed and its stream id
through numpy's SeedSequence spawn keys, so that (seed, stream) alone fixes
every draw it makes.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

SEED_LIMIT = 1 << 64


@dataclass(frozen=True)
class RngContract:
    """Master seed plus stream id; identical contracts give identical generators."""
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < SEED_LIMIT:
            raise ValueError(f"master seed must fit in 64 bits, got {self.master_seed!r}")
        if int(self.stream_id) < 0:
            raise ValueError("stream id must be nonnegative")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return RngContract(seed, stream).generator()


def stream_contracts(seed: int, streams: int) -> List[RngContract]:
    if streams < 1:
        raise ValueError("need at least one stream")
    return [RngContract(seed, i) for i in range(streams)]


def split_replicas(replicas: int, streams: int) -> List[int]:
    """Replica counts per stream, earlier streams taking the remainder."""
    if replicas < 0:
        raise ValueError("replicas must be nonnegative")
    base, extra = divmod(replicas, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]
