"""Nested uniform cell-centered grids on periodic domains.

Fields are plain float arrays. A 1D field on ``Level1D(n)`` has shape
``(..., n)``. A 2D field on ``Level2D(nx, ny)`` is stored flat with shape
``(..., nx * ny)``; entry ``k = j * nx + i`` holds cell ``(i, j)`` whose center
is ``(2 (i + 1/2) / nx, (j + 1/2) / ny)`` on the ``(0, 2) x (0, 1)`` domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np


@dataclass(frozen=True)
class Level1D:
    """Uniform grid of ``n`` cells on the periodic unit interval."""

    n: int

    dim = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"cell count must be a positive integer, got {self.n!r}")

    @property
    def size(self) -> int:
        return self.n

    @property
    def shape(self) -> tuple:
        return (self.n,)

    @property
    def weight(self) -> float:
        return 1.0 / self.n

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def coarsen(self) -> "Level1D":
        if self.n % 2 or self.n < 4:
            raise ValueError(f"cannot halve a 1D level with n={self.n}")
        return Level1D(self.n // 2)

    def centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def __str__(self):
        return f"{self.n}"


@dataclass(frozen=True)
class Level2D:
    """Uniform ``nx`` by ``ny`` grid on the periodic rectangle (0, 2) x (0, 1)."""

    nx: int
    ny: int

    dim = 2

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def n(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple:
        # array layout of a reshaped field: rows are y, columns are x
        return (self.ny, self.nx)

    @property
    def weight(self) -> float:
        return 2.0 / self.size

    @property
    def hx(self) -> float:
        return 2.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    def coarsen(self) -> "Level2D":
        if self.nx % 2 or self.ny % 2 or self.nx < 4 or self.ny < 4:
            raise ValueError(f"cannot halve a 2D level with {self.nx}x{self.ny}")
        return Level2D(self.nx // 2, self.ny // 2)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = 2.0 * (np.arange(self.nx) + 0.5) / self.nx
        y = (np.arange(self.ny) + 0.5) / self.ny
        return x, y

    def __str__(self):
        return f"{self.nx}x{self.ny}"


Level = Union[Level1D, Level2D]


@dataclass(frozen=True)
class GridHierarchy:
    """Levels ordered coarsest first; ``levels[-1]`` is the finest level ``L``."""

    levels: tuple

    def __post_init__(self):
        if not self.levels:
            raise ValueError("a hierarchy needs at least one level")
        kinds = {type(lv) for lv in self.levels}
        if len(kinds) != 1:
            raise ValueError("all levels must share one dimension")
        for coarse, fine in zip(self.levels[:-1], self.levels[1:]):
            if fine.coarsen() != coarse:
                raise ValueError(f"levels {coarse} and {fine} are not nested by factor 2")

    @property
    def L(self) -> int:
        return len(self.levels) - 1

    @property
    def dim(self) -> int:
        return self.levels[0].dim

    @property
    def refinement(self) -> int:
        return 2 ** self.dim

    @property
    def finest(self) -> Level:
        return self.levels[-1]

    @property
    def coarsest(self) -> Level:
        return self.levels[0]

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> Level:
        return self.levels[index]

    def __iter__(self) -> Iterator[Level]:
        return iter(self.levels)

    def sizes(self) -> list[int]:
        return [lv.size for lv in self.levels]


def build_hierarchy(finest: Level, depth: int) -> GridHierarchy:
    """Return the ``depth``-level hierarchy whose finest level is ``finest``.

    ``depth`` counts levels, so ``depth=1`` is a single-level (crude MC)
    hierarchy. Every halving must keep each dimension even and the coarse
    counts at least 2.
    """
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be an integer >= 1, got {depth!r}")
    levels = [finest]
    for _ in range(depth - 1):
        levels.append(levels[-1].coarsen())
    return GridHierarchy(tuple(reversed(levels)))


def gram_weight(level: Level) -> float:
    """Scalar Gram weight: ``1/n`` in 1D, ``2/n`` in 2D."""
    return level.weight


def w_norm2(u: np.ndarray, level: Level) -> np.ndarray:
    """Squared W-norm over the last axis."""
    u = np.asarray(u, dtype=float)
    return level.weight * np.einsum("...k,...k->...", u, u)


def level_from_shape(shape) -> Level:
    """Build a level from ``n`` or ``(nx, ny)``."""
    if np.ndim(shape) == 0:
        return Level1D(int(shape))
    shape = tuple(int(s) for s in shape)
    if len(shape) == 1:
        return Level1D(shape[0])
    if len(shape) == 2:
        return Level2D(*shape)
    raise ValueError(f"unsupported grid shape {shape}")
