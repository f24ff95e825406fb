"""Deterministic splitting of a master seed into named random streams."""

import zlib
from typing import Dict

import numpy as np


class SeedStreams:
    """Derive independent numpy generators from one master seed.

    A stream is addressed by a name and any number of integer keys, e.g.
    ``streams.generator("strategy", t, k)``. The same address always yields a
    generator in the same state, and distinct addresses never share state.
    """

    def __init__(self, master_seed: int):
        if master_seed < 0:
            raise ValueError(f"Seed must be non-negative, got {master_seed}")
        self.master_seed = int(master_seed)
        self._codes: Dict[str, int] = {}

    def _code(self, name: str) -> int:
        # crc32 is stable across interpreter runs, unlike hash()
        if name not in self._codes:
            self._codes[name] = zlib.crc32(name.encode("utf-8"))
        return self._codes[name]

    def seed_sequence(self, name: str, *keys: int) -> np.random.SeedSequence:
        entropy = [self.master_seed, self._code(name), *(int(k) for k in keys)]
        return np.random.SeedSequence(entropy)

    def generator(self, name: str, *keys: int) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence(name, *keys))
