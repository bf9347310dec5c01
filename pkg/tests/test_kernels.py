"""Both backends must agree with each other and with dense solves."""

import numpy as np
import pytest
from scipy.linalg import circulant

from fmlmc import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _dense_2d(kx, ky, ihx2, ihy2):
    ny, nx = kx.shape
    n = nx * ny
    M = np.zeros((n, n))
    for k in range(n):
        e = np.zeros((1, ny, nx))
        e.flat[k] = 1.0
        M[:, k] = _kernels.apply_shifted_numpy(e, kx, ky, ihx2, ihy2).ravel()
    return M


def _field(rng, ny, nx):
    return 0.01 + 0.02 * rng.random((ny, nx)), 0.01 + 0.02 * rng.random((ny, nx))


@pytest.mark.parametrize("n", [1, 2, 3, 16, 33])
def test_cyclic_tridiag_numpy(rng, n):
    sub, sup = -rng.random(n), -rng.random(n)
    diag = 3 + rng.random(n)
    if n >= 3:
        sup = np.roll(sub, -1)  # symmetric periodic matrix
    rhs = rng.standard_normal((4, n))
    M = _kernels._dense_cyclic(sub, diag, sup)
    np.testing.assert_allclose(_kernels.cyclic_tridiag_solve_numpy(sub, diag, sup, rhs) @ M.T, rhs, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("n", [3, 16, 64])
def test_cyclic_tridiag_backends_agree(rng, n):
    r = 0.7
    sub = np.full(n, -r)
    diag = np.full(n, 1 + 2 * r)
    rhs = rng.standard_normal((5, n))
    a = _kernels.cyclic_tridiag_solve_numpy(sub, diag, sub, rhs)
    b = _kernels.cyclic_tridiag_solve_numba(sub, diag, sub, rhs)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
    first = np.zeros(n)
    first[[0, 1, -1]] = [1 + 2 * r, -r, -r]
    np.testing.assert_allclose(circulant(first) @ a.T, rhs.T, atol=1e-12)


def test_apply_shifted_symmetric(rng):
    kx, ky = _field(rng, 4, 8)
    M = _dense_2d(kx, ky, 16.0, 16.0)
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    assert np.all(np.linalg.eigvalsh(M) >= 1 - 1e-12)
    np.testing.assert_allclose(np.diag(M), _kernels.shifted_diagonal(kx, ky, 16.0, 16.0).ravel())


@needs_numba
def test_apply_shifted_backends_agree(rng):
    kx, ky = _field(rng, 8, 16)
    u = rng.standard_normal((3, 8, 16))
    np.testing.assert_allclose(
        _kernels.apply_shifted_numpy(u, kx, ky, 64.0, 64.0), _kernels.apply_shifted_numba(u, kx, ky, 64.0, 64.0),
        rtol=1e-13, atol=1e-13,
    )


def test_cg_numpy_matches_dense(rng):
    kx, ky = _field(rng, 4, 8)
    b = rng.standard_normal((3, 4, 8))
    x, iters, res = _kernels.cg_solve_numpy(b, kx, ky, 16.0, 16.0, tol=1e-12, maxiter=500)
    M = _dense_2d(kx, ky, 16.0, 16.0)
    ref = np.linalg.solve(M, b.reshape(3, -1).T).T
    np.testing.assert_allclose(x.reshape(3, -1), ref, atol=1e-10)
    assert np.all(res <= 1e-12) and np.all(iters > 0)


@needs_numba
def test_cg_backends_agree(rng):
    kx, ky = _field(rng, 16, 32)
    b = rng.standard_normal((4, 16, 32))
    xa, _, ra = _kernels.cg_solve_numpy(b, kx, ky, 256.0, 256.0, tol=1e-11, maxiter=1000)
    xb, _, rb = _kernels.cg_solve_numba(b, kx, ky, 256.0, 256.0, tol=1e-11, maxiter=1000)
    np.testing.assert_allclose(xa, xb, rtol=1e-9, atol=1e-11)
    assert ra.max() <= 1e-11 and rb.max() <= 1e-11


def test_cg_reports_nonconvergence(rng):
    kx, ky = _field(rng, 8, 16)
    b = rng.standard_normal((1, 8, 16))
    _, iters, res = _kernels.cg_solve(b, kx, ky, 1e4, 1e4, tol=1e-14, maxiter=2)
    assert iters[0] == 2 and res[0] > 1e-14


def test_backend_env(monkeypatch):
    monkeypatch.setenv("FMLMC_BACKEND", "numpy")
    assert _kernels.backend() == "numpy"
    monkeypatch.delenv("FMLMC_BACKEND")
    monkeypatch.setenv("FMLMC_DISABLE_NUMBA", "1")
    assert _kernels.backend() == "numpy"
