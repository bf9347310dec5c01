"""Grid transfer and Shapiro filtering on periodic cell-centered grids.

All operators act on the last axis of their input, so a batch of fields of
shape ``(batch, n)`` is transferred in one call. 2D fields use the flat
x-fastest layout of :mod:`fmlmc.grid`; the 2D operators are Kronecker
products of the 1D ones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import GridHierarchy, Level, Level1D, Level2D


class TransferKind(enum.Enum):
    UNFILTERED = "unfiltered"
    FILTERED = "filtered"
    PRE_ONLY = "pre-only"
    POST_ONLY = "post-only"

    @property
    def pre_filter(self) -> bool:
        return self in (TransferKind.FILTERED, TransferKind.PRE_ONLY)

    @property
    def post_filter(self) -> bool:
        return self in (TransferKind.FILTERED, TransferKind.POST_ONLY)


def _as_field(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def prolong_1d(coarse_field) -> np.ndarray:
    """Piecewise-constant prolongation: ``out[2j] = out[2j+1] = in[j]``."""
    return np.repeat(_as_field(coarse_field), 2, axis=-1)


def restrict_1d(fine_field) -> np.ndarray:
    """Transpose of :func:`prolong_1d`: ``out[j] = in[2j] + in[2j+1]``."""
    x = _as_field(fine_field)
    if x.shape[-1] % 2:
        raise ValueError(f"restriction needs an even length, got {x.shape[-1]}")
    return x[..., 0::2] + x[..., 1::2]


def shapiro_1d(field) -> np.ndarray:
    """Periodic (1, 2, 1)/4 smoothing.

    For ``n < 3`` the rolls wrap onto the same cells, which is exactly the
    circulant convolution of the stencil.
    """
    x = _as_field(field)
    return 0.25 * (np.roll(x, 1, axis=-1) + 2.0 * x + np.roll(x, -1, axis=-1))


def _grid(x: np.ndarray, level: Level2D) -> np.ndarray:
    if x.shape[-1] != level.size:
        raise ValueError(f"field of length {x.shape[-1]} does not live on {level}")
    return x.reshape(x.shape[:-1] + (level.ny, level.nx))


def _flat(g: np.ndarray) -> np.ndarray:
    return g.reshape(g.shape[:-2] + (g.shape[-2] * g.shape[-1],))


def prolong_2d(coarse_field, coarse: Level2D) -> np.ndarray:
    g = _grid(_as_field(coarse_field), coarse)
    return _flat(np.repeat(np.repeat(g, 2, axis=-1), 2, axis=-2))


def restrict_2d(fine_field, fine: Level2D) -> np.ndarray:
    g = _grid(_as_field(fine_field), fine)
    if fine.nx % 2 or fine.ny % 2:
        raise ValueError(f"cannot restrict from {fine}")
    g = g[..., 0::2] + g[..., 1::2]
    g = g[..., 0::2, :] + g[..., 1::2, :]
    return _flat(g)


def shapiro_2d(field, level: Level2D) -> np.ndarray:
    g = _grid(_as_field(field), level)
    g = 0.25 * (np.roll(g, 1, axis=-1) + 2.0 * g + np.roll(g, -1, axis=-1))
    g = 0.25 * (np.roll(g, 1, axis=-2) + 2.0 * g + np.roll(g, -1, axis=-2))
    return _flat(g)


def _check_length(x: np.ndarray, level: Level):
    if x.shape[-1] != level.size:
        raise ValueError(f"field of length {x.shape[-1]} does not live on level {level}")


def prolong(field, coarse: Level) -> np.ndarray:
    """Unfiltered prolongation from ``coarse`` to the next finer level."""
    x = _as_field(field)
    _check_length(x, coarse)
    if isinstance(coarse, Level1D):
        return prolong_1d(x)
    return prolong_2d(x, coarse)


def restrict(field, fine: Level) -> np.ndarray:
    """Unfiltered restriction from ``fine`` to the next coarser level."""
    x = _as_field(field)
    _check_length(x, fine)
    if isinstance(fine, Level1D):
        return restrict_1d(x)
    return restrict_2d(x, fine)


def shapiro(field, level: Level) -> np.ndarray:
    x = _as_field(field)
    _check_length(x, level)
    if isinstance(level, Level1D):
        return shapiro_1d(x)
    return shapiro_2d(x, level)


def restrict_step(field, fine: Level, kind: TransferKind = TransferKind.UNFILTERED):
    """One (optionally pre-filtered) restriction step ``R S`` from ``fine``."""
    x = _as_field(field)
    if kind.pre_filter:
        x = shapiro(x, fine)
    return restrict(x, fine)


def prolong_step(field, coarse: Level, kind: TransferKind = TransferKind.UNFILTERED):
    """One (optionally post-filtered) prolongation step ``S P`` from ``coarse``."""
    y = prolong(field, coarse)
    if kind.post_filter:
        fine = Level1D(coarse.n * 2) if isinstance(coarse, Level1D) else Level2D(coarse.nx * 2, coarse.ny * 2)
        y = shapiro(y, fine)
    return y


@dataclass(frozen=True)
class TransferPipeline:
    """Composed transfer from level ``source`` to level ``target``.

    Restriction (``target < source``) applies one step at a time from the
    source downwards; prolongation (``target > source``) from the source
    upwards. Equal levels give an identity copy.
    """

    hierarchy: GridHierarchy
    kind: TransferKind
    source: int
    target: int

    def __post_init__(self):
        n = len(self.hierarchy)
        for name in ("source", "target"):
            v = getattr(self, name)
            if not 0 <= v < n:
                raise ValueError(f"{name} level {v} outside hierarchy of {n} levels")

    def __call__(self, field) -> np.ndarray:
        return pipeline_apply(self, field)


def pipeline_apply(pipeline: TransferPipeline, field) -> np.ndarray:
    h, kind = pipeline.hierarchy, pipeline.kind
    x = np.array(field, dtype=float, copy=True)
    _check_length(x, h[pipeline.source])
    if pipeline.target < pipeline.source:
        for lv in range(pipeline.source, pipeline.target, -1):
            x = restrict_step(x, h[lv], kind)
    elif pipeline.target > pipeline.source:
        for lv in range(pipeline.source, pipeline.target):
            x = prolong_step(x, h[lv], kind)
    return x


def restrict_to(field, hierarchy: GridHierarchy, source: int, target: int, kind=TransferKind.UNFILTERED):
    return pipeline_apply(TransferPipeline(hierarchy, kind, source, target), field)


def prolong_to(field, hierarchy: GridHierarchy, source: int, target: int, kind=TransferKind.UNFILTERED):
    return pipeline_apply(TransferPipeline(hierarchy, kind, source, target), field)


def as_dense(op, n_in: int) -> np.ndarray:
    """Assemble the matrix of a linear map by applying it to the identity.

    Test support for small sizes only.
    """
    cols = op(np.eye(n_in))
    return np.asarray(cols).T
