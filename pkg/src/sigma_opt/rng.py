"""Deterministic, counter-based random state.

Every randomized operation takes an explicit :class:`RngState` and draws from a
child generator derived from ``(seed, stream)``. The stream counter advances by
one per draw, so an identical seed plus an identical call sequence reproduces
identical outputs bit for bit, independent of global RNG state.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RngState:
    """Seeded state threaded through all randomized operations.

    Not shareable between threads; give each parallel task its own instance.
    """

    seed: int
    stream: int = field(default=0)

    def child(self) -> np.random.Generator:
        """Return a fresh generator for one draw and advance the counter."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.stream += 1
        return np.random.default_rng(ss)

    def fork(self, offset: int) -> "RngState":
        """Independent state for a sub-task (e.g. one bench entry)."""
        return RngState(seed=self.seed + offset, stream=0)
