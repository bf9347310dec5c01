"""Counter-based random streams.

Every stream is a Philox key derived from the root seed and a tuple of
integers naming its purpose, so any sample can be regenerated on its own.
Sample ``i`` of a stream producing length-``n`` vectors occupies Philox
counter blocks ``[i * b, (i + 1) * b)`` with ``b = ceil(n / 4)``; drawing a
batch of samples or drawing them one by one gives identical values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# purpose tags for stream keys
ESTIMATOR = 0
PILOT = 1
LENGTHSCALE = 2
GENERIC = 3


def derive_key(root_seed: int, *path: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(p) for p in path))
    return ss.generate_state(2, dtype=np.uint64)


@dataclass(frozen=True)
class NormalStream:
    """Reproducible standard-normal vectors of length ``n`` indexed by sample."""

    root_seed: int
    path: tuple
    n: int

    @property
    def blocks(self) -> int:
        return -(-self.n // 4)

    def uniforms(self, start: int, count: int) -> np.ndarray:
        bg = np.random.Philox(key=derive_key(self.root_seed, *self.path))
        if start:
            bg.advance(int(start) * self.blocks)
        raw = bg.random_raw(int(count) * self.blocks * 4).reshape(int(count), self.blocks * 4)
        # 53-bit uniforms shifted into the open interval (0, 1)
        return (raw[:, : self.n] >> np.uint64(11)) * 2.0**-53 + 2.0**-54

    def normals(self, start: int = 0, count: int = 1) -> np.ndarray:
        """Array of shape ``(count, n)`` holding samples ``start .. start+count-1``."""
        if count < 0 or start < 0:
            raise ValueError("start and count must be nonnegative")
        if count == 0:
            return np.empty((0, self.n))
        return ndtri(self.uniforms(start, count))


def stream(root_seed: int, purpose: int, replicate: int, level: int, n: int) -> NormalStream:
    return NormalStream(int(root_seed), (int(purpose), int(replicate), int(level)), int(n))


def generator(root_seed: int, *path: int) -> np.random.Generator:
    """Ordinary numpy generator on a derived key, for one-off draws."""
    return np.random.Generator(np.random.Philox(key=derive_key(root_seed, *path)))
