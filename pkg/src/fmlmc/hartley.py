"""Cell-centered discrete Hartley basis and two-grid spectral analysis.

Eigenvalue conventions
----------------------
:func:`circulant_eigenvalues` returns the true eigenvalues of a symmetric
circulant, ``lambda_k = sum_j a_j cos(2 pi j k / n)`` so that
``H^T A H = n diag(lambda)``.

The two-grid formulas (:func:`galerkin_coarse_eigenvalues`,
:func:`two_grid_blocks`) take eigenvalues in the synthesis normalization
``F = H diag(lam) H^T``, i.e. ``lam = lambda / n``. In that normalization the
Galerkin coarse operator ``(1/4) R F P`` of a fine circulant has
``lam0_k = c_k^2 lam1_k + c_{n0+k}^2 lam1_{n0+k}`` and a constant spectrum
stays constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _basis(n: int) -> np.ndarray:
    j = np.arange(n)[:, None] + 0.5
    k = np.arange(n)[None, :]
    arg = 2.0 * np.pi * j * k / n
    H = np.cos(arg) + np.sin(arg)
    H[:, 0] = 1.0
    H.setflags(write=False)
    return H


@dataclass(frozen=True)
class HartleyBasis:
    """Dense cell-centered Hartley matrix of size ``n``; ``H^T H = n I``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"basis size must be a positive integer, got {self.n!r}")

    @property
    def matrix(self) -> np.ndarray:
        return _basis(int(self.n))

    def column(self, k: int) -> np.ndarray:
        return self.matrix[:, k].copy()

    def forward(self, x) -> np.ndarray:
        return hartley_forward(x)

    def inverse(self, coeffs) -> np.ndarray:
        return hartley_inverse(coeffs)


def hartley_matrix(n: int) -> np.ndarray:
    return _basis(int(n))


def hartley_vector(n: int, k: int) -> np.ndarray:
    return _basis(int(n))[:, k].copy()


def hartley_forward(x) -> np.ndarray:
    """Coefficients ``H^T x`` along the last axis."""
    x = np.asarray(x, dtype=float)
    return x @ _basis(x.shape[-1])


def hartley_inverse(coeffs) -> np.ndarray:
    """Inverse of :func:`hartley_forward`: ``x = H c / n``."""
    c = np.asarray(coeffs, dtype=float)
    n = c.shape[-1]
    return (c @ _basis(n).T) / n


def frequency_order(n: int) -> np.ndarray:
    """Permutation listing Hartley modes by increasing represented frequency.

    ``perm[2k] = k`` and ``perm[2k+1] = n - k - 1``; ``x[..., perm]`` reorders.
    """
    n = int(n)
    perm = np.empty(n, dtype=np.intp)
    half = (n + 1) // 2
    perm[0::2] = np.arange(half)
    perm[1::2] = n - 1 - np.arange(n // 2)
    return perm


def damping_coefficients(n0: int) -> np.ndarray:
    """``c_k = cos(k pi / (2 n0))`` for ``k < 2 n0`` with exact endpoints."""
    k = np.arange(2 * n0)
    c = np.cos(k * np.pi / (2 * n0))
    c[0] = 1.0
    c[n0] = 0.0
    return c


def circulant_eigenvalues(first_column, rtol: float = 1e-12) -> np.ndarray:
    """True eigenvalues of the symmetric circulant with the given first column."""
    a = np.asarray(first_column, dtype=float)
    n = a.size
    mirror = a[(-np.arange(n)) % n]
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.abs(a - mirror).max() > rtol * scale:
        raise ValueError("first column does not define a symmetric circulant")
    return np.fft.fft(a).real


def galerkin_coarse_eigenvalues(fine_eigs, filtered: bool = False) -> np.ndarray:
    """Coarse Galerkin eigenvalues from fine ones (synthesis normalization)."""
    lam1 = np.asarray(fine_eigs, dtype=float)
    if lam1.size % 2:
        raise ValueError("fine spectrum length must be even")
    n0 = lam1.size // 2
    c = damping_coefficients(n0)
    p = 6 if filtered else 2
    return c[:n0] ** p * lam1[:n0] + c[n0:] ** p * lam1[n0:]


@dataclass(frozen=True)
class TwoGridBlocks:
    """Diagonal blocks of ``M = C^T Lambda_0 C`` (or the filtered analogue)."""

    m11: np.ndarray
    m22: np.ndarray
    m12: np.ndarray
    filtered: bool

    @property
    def m21(self) -> np.ndarray:
        return self.m12

    def dense(self) -> np.ndarray:
        """Assemble the ``2 n0`` square block matrix in natural mode order."""
        return np.block([[np.diag(self.m11), np.diag(self.m12)], [np.diag(self.m12), np.diag(self.m22)]])


def two_grid_blocks(coarse_eigs, filtered: bool = False) -> TwoGridBlocks:
    lam0 = np.asarray(coarse_eigs, dtype=float)
    n0 = lam0.size
    c = damping_coefficients(n0)
    if filtered:
        c = c ** 3
    a, b = c[:n0], c[n0:]
    return TwoGridBlocks(a * a * lam0, b * b * lam0, -a * b * lam0, bool(filtered))


def transfer_matrix_c(n0: int, filtered: bool = False) -> np.ndarray:
    """``C = [diag(c_k), -diag(c_{n0+k})]`` with ``P H0 = H1 C^T``; cubed if filtered."""
    c = damping_coefficients(n0)
    if filtered:
        c = c ** 3
    return np.hstack([np.diag(c[:n0]), -np.diag(c[n0:])])


def damping_curves(n1: int) -> dict:
    """Damping factors of the two-grid blocks over ``k = 0 .. n1 - 1``.

    The cosine formula is evaluated for every ``k``; entries past ``n1/2``
    mirror the first half with sign changes and are kept for plotting.
    """
    if n1 % 2:
        raise ValueError("fine size must be even")
    n0 = n1 // 2
    k = np.arange(n1)
    c = np.cos(k * np.pi / n1)
    s = np.cos((k + n0) * np.pi / n1)
    c[0], s[0] = 1.0, 0.0
    c[n0], s[n0] = 0.0, -1.0
    out = {"k": k}
    for tag, p in (("", 1), ("filtered_", 3)):
        a, b = c ** p, s ** p
        out[tag + "consistent"] = a ** 4
        out[tag + "spurious"] = a ** 2 * b ** 2
        out[tag + "offdiag_1"] = -(a ** 3) * b
        out[tag + "offdiag_2"] = -a * b ** 3
    return out
