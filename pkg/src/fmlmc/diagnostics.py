"""Ensemble variance diagnostics in the Hartley domain.

For an ensemble of estimates ``mu_r`` on level ``L`` the per-mode variance is
``nu_k = c * var_r(h_k^T mu_r)``, listed by increasing represented frequency.
With ``c = w_L / n_L`` the modes sum to the ``W_L``-norm variance of the
ensemble (``c = 1/n^2`` in 1D, ``2/n^2`` in 2D). ``normalization="doubled"``
uses ``4/n^2`` in 2D instead, which doubles every 2D entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .grid import Level, Level1D, Level2D
from .hartley import frequency_order, hartley_matrix


@dataclass
class SpectralDiagnostics:
    nu: np.ndarray
    nu_cml: np.ndarray
    total: float
    size: int
    kind: str = ""
    depth: int = 0
    nu_grid: Optional[np.ndarray] = None  # 2D only: (ny, nx), frequency ordered

    def rows(self):
        """``(index, nu, nu_cml)`` rows; ``nu_cml`` is blank past its length."""
        for k, v in enumerate(self.nu):
            c = self.nu_cml[k] if k < self.nu_cml.size else None
            yield k, float(v), (None if c is None else float(c))


def _deviations(ensemble, reference):
    e = np.asarray(ensemble, dtype=float)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError("need an ensemble of at least two estimates shaped (size, n)")
    if reference is None:
        return e - e.mean(axis=0), e.shape[0] - 1
    ref = np.asarray(reference, dtype=float)
    if ref.shape[-1] != e.shape[1]:
        raise ValueError("reference length does not match the estimates")
    return e - ref, e.shape[0]


def spectral_variance_1d(ensemble, reference=None, kind: str = "", depth: int = 0) -> SpectralDiagnostics:
    """Per-mode variance of 1D estimates.

    Without ``reference`` the unbiased sample variance about the ensemble
    mean is used; with it, the mean square about ``reference``.
    """
    dev, dof = _deviations(ensemble, reference)
    n = dev.shape[1]
    coeff = dev @ hartley_matrix(n)
    nu = (coeff**2).sum(axis=0) / dof / n**2
    nu = nu[frequency_order(n)]
    cml = np.cumsum(nu)
    return SpectralDiagnostics(nu, cml, float(cml[-1]), dev.shape[0], kind, depth)


def _scale_2d(n: int, normalization: str) -> float:
    if normalization == "gram":
        return 2.0 / n**2
    if normalization == "doubled":
        return 4.0 / n**2
    raise ValueError(f"normalization must be 'gram' or 'doubled', got {normalization!r}")


def spectral_variance_2d(ensemble, level: Level2D, reference=None, kind: str = "", depth: int = 0,
                         normalization: str = "gram") -> SpectralDiagnostics:
    """Per-mode variance of 2D estimates with nested-rectangle cumulative sums.

    Mode ``j * nx + i`` pairs the ``j``-th y frequency with the ``i``-th x
    frequency. ``nu_cml[k]`` sums y modes ``<= k`` and x modes below
    ``(k + 1) nx / ny``.
    """
    dev, dof = _deviations(ensemble, reference)
    nx, ny = level.nx, level.ny
    g = dev.reshape(-1, ny, nx)
    coeff = np.einsum("yj,ryx,xi->rji", hartley_matrix(ny), g, hartley_matrix(nx), optimize=True)
    grid = (coeff**2).sum(axis=0) / dof * _scale_2d(level.size, normalization)
    grid = grid[np.ix_(frequency_order(ny), frequency_order(nx))]
    cml = np.empty(ny)
    for k in range(ny):
        cml[k] = grid[: k + 1, : ((k + 1) * nx) // ny].sum()
    return SpectralDiagnostics(grid.ravel(), cml, float(grid.sum()), dev.shape[0], kind, depth, grid)


def spectral_variance(ensemble, level: Level, reference=None, kind: str = "", depth: int = 0,
                      normalization: str = "gram") -> SpectralDiagnostics:
    if isinstance(level, Level1D):
        return spectral_variance_1d(ensemble, reference, kind, depth)
    return spectral_variance_2d(ensemble, level, reference, kind, depth, normalization)


def total_variance(ensemble, level: Level) -> float:
    """Unbiased ``W``-norm ensemble variance computed cell by cell."""
    e = np.asarray(ensemble, dtype=float)
    return float(level.weight * e.var(axis=0, ddof=1).sum())


def unsort_modes(nu_ordered, n: int) -> np.ndarray:
    """Undo the frequency ordering of a 1D spectrum."""
    out = np.empty_like(np.asarray(nu_ordered))
    out[frequency_order(n)] = nu_ordered
    return out


class MseParts(NamedTuple):
    variance: float
    squared_bias: float
    mse: float


def mse_decompose(ensemble, truth, level: Level) -> MseParts:
    """Variance, squared bias and raw MSE of an ensemble in the ``W`` norm.

    ``mse = (size - 1) / size * variance + squared_bias`` exactly.
    """
    e = np.asarray(ensemble, dtype=float)
    t = np.asarray(truth, dtype=float)
    if e.ndim != 2 or t.shape != (e.shape[1],):
        raise ValueError("truth must be one field matching the estimate length")
    if e.shape[0] < 2:
        raise ValueError("need at least two estimates")
    w = level.weight
    mean = e.mean(axis=0)
    var = w * ((e - mean) ** 2).sum() / (e.shape[0] - 1)
    bias = w * ((mean - t) ** 2).sum()
    mse = w * ((e - t) ** 2).sum() / e.shape[0]
    return MseParts(float(var), float(bias), float(mse))
