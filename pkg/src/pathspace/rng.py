"""Counter-based random streams.

Every trajectory draws from its own Philox lane keyed by the master seed and
a hash of the experiment name; the trajectory index and a leg tag select the
counter block. The numbers a trajectory sees therefore depend only on
``(master_seed, experiment, index, leg)``, never on scheduling.
"""

import hashlib
from functools import lru_cache
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

LEG_FORWARD = 0
LEG_BACKWARD = 1
LEG_INITIAL = 2
LEG_AUX = 3


@lru_cache(maxsize=256)
def _tag(name):
    digest = hashlib.blake2b(str(name).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    experiment: str = "default"

    def generator(self, index, leg=LEG_FORWARD):
        key = [int(self.master_seed) & MASK64, _tag(self.experiment)]
        bitgen = np.random.Philox(key=key, counter=[0, 0, int(index) & MASK64, int(leg) & MASK64])
        return np.random.Generator(bitgen)

    def normals(self, indices, leg, shape):
        """Stack of standard normal blocks, one block of ``shape`` per index."""
        indices = np.atleast_1d(indices)
        out = np.empty((len(indices),) + tuple(shape))
        for row, idx in enumerate(indices):
            out[row] = self.generator(idx, leg).standard_normal(shape)
        return out

    def uniforms(self, indices, leg, shape):
        indices = np.atleast_1d(indices)
        out = np.empty((len(indices),) + tuple(shape))
        for row, idx in enumerate(indices):
            out[row] = self.generator(idx, leg).random(shape)
        return out

    def child(self, suffix):
        """Independent stream for a sub-experiment."""
        return RngStream(self.master_seed, f"{self.experiment}/{suffix}")
