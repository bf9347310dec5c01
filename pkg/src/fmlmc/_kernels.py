"""Hot loops: periodic tridiagonal solves and the 2D shifted-Laplacian CG.

Each kernel has a numba implementation and a pure-numpy fallback with the
same signature. :func:`backend` picks one at call time from the
``FMLMC_BACKEND`` environment variable (``numba`` or ``numpy``); setting
``FMLMC_DISABLE_NUMBA`` to a non-empty value also forces numpy. Numba is
used by default when it imports.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_banded

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip probing for an incompatible system TBB
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def backend() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    if os.environ.get("FMLMC_DISABLE_NUMBA") or not HAVE_NUMBA:
        return "numpy"
    name = os.environ.get("FMLMC_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"FMLMC_BACKEND must be 'numba' or 'numpy', got {name!r}")
    return name


def set_threads(n: int | None = None) -> None:
    """Apply ``n`` (or ``FMLMC_THREADS``) as the numba thread count."""
    if n is None:
        env = os.environ.get("FMLMC_THREADS")
        if not env:
            return
        n = int(env)
    if HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# periodic tridiagonal systems
# ---------------------------------------------------------------------------


def _dense_cyclic(sub, diag, sup) -> np.ndarray:
    n = diag.size
    M = np.diag(diag).astype(float)
    for i in range(n):
        M[i, (i - 1) % n] += sub[i]
        M[i, (i + 1) % n] += sup[i]
    return M


def _sherman_morrison_setup(sub, diag, sup):
    # T = cyclic matrix - u v^T with u = (g, 0.., c_last), v = (1, 0.., a_0/g)
    n = diag.size
    g = -diag[0]
    bb = diag.astype(float).copy()
    bb[0] -= g
    bb[-1] -= sub[0] * sup[-1] / g
    u = np.zeros(n)
    u[0] = g
    u[-1] = sup[-1]
    return g, bb, u


def cyclic_tridiag_solve_numpy(sub, diag, sup, rhs) -> np.ndarray:
    """Solve a periodic tridiagonal system for every row of ``rhs``.

    Row ``i`` of the matrix is ``sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1]``
    with indices taken modulo ``n``.
    """
    sub, diag, sup = (np.asarray(v, dtype=float) for v in (sub, diag, sup))
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    if n <= 2:
        M = _dense_cyclic(sub, diag, sup)
        return np.linalg.solve(M, rhs.reshape(-1, n).T).T.reshape(rhs.shape)
    g, bb, u = _sherman_morrison_setup(sub, diag, sup)
    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1] = bb
    ab[2, :-1] = sub[1:]
    flat = rhs.reshape(-1, n)
    sol = solve_banded((1, 1), ab, np.column_stack([u, flat.T]), check_finite=False)
    z, y = sol[:, 0], sol[:, 1:]
    vz = z[0] + sub[0] / g * z[-1]
    vy = y[0] + sub[0] / g * y[-1]
    x = y - np.outer(z, vy / (1.0 + vz))
    return x.T.reshape(rhs.shape)


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _thomas_factor(sub, bb, sup):
        n = bb.size
        cp = np.empty(n)
        inv = np.empty(n)
        inv[0] = 1.0 / bb[0]
        cp[0] = sup[0] * inv[0]
        for i in range(1, n):
            m = bb[i] - sub[i] * cp[i - 1]
            inv[i] = 1.0 / m
            cp[i] = sup[i] * inv[i]
        return cp, inv

    @njit(cache=True, nogil=True)
    def _thomas_apply(sub, cp, inv, d, out):
        n = d.size
        out[0] = d[0] * inv[0]
        for i in range(1, n):
            out[i] = (d[i] - sub[i] * out[i - 1]) * inv[i]
        for i in range(n - 2, -1, -1):
            out[i] -= cp[i] * out[i + 1]

    @njit(cache=True, nogil=True)
    def _cyclic_batch(sub, bb, sup, u, ratio, rhs, out):
        n = bb.size
        cp, inv = _thomas_factor(sub, bb, sup)
        z = np.empty(n)
        _thomas_apply(sub, cp, inv, u, z)
        denom = 1.0 + z[0] + ratio * z[n - 1]
        for r in range(rhs.shape[0]):
            y = out[r]
            _thomas_apply(sub, cp, inv, rhs[r], y)
            f = (y[0] + ratio * y[n - 1]) / denom
            for i in range(n):
                y[i] -= f * z[i]


def cyclic_tridiag_solve_numba(sub, diag, sup, rhs) -> np.ndarray:
    sub, diag, sup = (np.ascontiguousarray(v, dtype=float) for v in (sub, diag, sup))
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    if n <= 2 or not HAVE_NUMBA:
        return cyclic_tridiag_solve_numpy(sub, diag, sup, rhs)
    g, bb, u = _sherman_morrison_setup(sub, diag, sup)
    flat = np.ascontiguousarray(rhs.reshape(-1, n))
    out = np.empty_like(flat)
    _cyclic_batch(sub, bb, sup, u, sub[0] / g, flat, out)
    return out.reshape(rhs.shape)


def cyclic_tridiag_solve(sub, diag, sup, rhs) -> np.ndarray:
    if backend() == "numba":
        return cyclic_tridiag_solve_numba(sub, diag, sup, rhs)
    return cyclic_tridiag_solve_numpy(sub, diag, sup, rhs)


# ---------------------------------------------------------------------------
# 2D operator u - div(K grad u) on the periodic grid, fields shaped (ny, nx)
#
# kx[j, i] is the coefficient on the face between cells (i-1, j) and (i, j);
# ky[j, i] on the face between cells (i, j-1) and (i, j).
# ---------------------------------------------------------------------------


def shifted_diagonal(kx, ky, ihx2, ihy2) -> np.ndarray:
    return 1.0 + ihx2 * (kx + np.roll(kx, -1, axis=-1)) + ihy2 * (ky + np.roll(ky, -1, axis=-2))


def apply_shifted_numpy(u, kx, ky, ihx2, ihy2) -> np.ndarray:
    """``u - Lap(u)`` for a batch of fields shaped ``(..., ny, nx)``."""
    u = np.asarray(u, dtype=float)
    fx = kx * (u - np.roll(u, 1, axis=-1))  # flux through left faces
    fy = ky * (u - np.roll(u, 1, axis=-2))  # flux through bottom faces
    lap = ihx2 * (np.roll(fx, -1, axis=-1) - fx) + ihy2 * (np.roll(fy, -1, axis=-2) - fy)
    return u - lap


def _dot(a, b):
    return np.einsum("bji,bji->b", a, b)


def cg_solve_numpy(rhs, kx, ky, ihx2, ihy2, tol=1e-10, maxiter=1000, x0=None):
    """Jacobi-preconditioned CG on a batch of right-hand sides.

    Returns ``(x, iterations, relative_residuals)``. Converged systems are
    frozen while the rest keep iterating.
    """
    b = np.asarray(rhs, dtype=float)
    batched = b.ndim == 3
    if not batched:
        b = b[None]
    dinv = 1.0 / shifted_diagonal(kx, ky, ihx2, ihy2)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float).reshape(b.shape)
    r = b - apply_shifted_numpy(x, kx, ky, ihx2, ihy2) if x0 is not None else b.copy()
    bnorm = np.sqrt(_dot(b, b))
    bnorm[bnorm == 0.0] = 1.0
    z = r * dinv
    p = z.copy()
    rz = _dot(r, z)
    res = np.sqrt(_dot(r, r)) / bnorm
    iters = np.zeros(b.shape[0], dtype=np.int64)
    active = res > tol
    it = 0
    while active.any() and it < maxiter:
        it += 1
        idx = np.flatnonzero(active)
        pa = p[idx]
        q = apply_shifted_numpy(pa, kx, ky, ihx2, ihy2)
        alpha = rz[idx] / _dot(pa, q)
        x[idx] += alpha[:, None, None] * pa
        r[idx] -= alpha[:, None, None] * q
        ra = r[idx]
        res[idx] = np.sqrt(_dot(ra, ra)) / bnorm[idx]
        iters[idx] = it
        za = ra * dinv
        rz_new = _dot(ra, za)
        beta = rz_new / rz[idx]
        rz[idx] = rz_new
        p[idx] = za + beta[:, None, None] * pa
        active[idx] = res[idx] > tol
    if not batched:
        return x[0], iters, res
    return x, iters, res


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _apply_shifted_one(u, kx, ky, ihx2, ihy2, out):
        ny, nx = u.shape
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            jp = j + 1 if j < ny - 1 else 0
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                ip = i + 1 if i < nx - 1 else 0
                c = u[j, i]
                lap = ihx2 * (kx[j, ip] * (u[j, ip] - c) - kx[j, i] * (c - u[j, im])) + ihy2 * (
                    ky[jp, i] * (u[jp, i] - c) - ky[j, i] * (c - u[jm, i])
                )
                out[j, i] = c - lap

    @njit(cache=True, nogil=True)
    def _pcg_one(b, x, dinv, kx, ky, ihx2, ihy2, tol, maxiter):
        ny, nx = b.shape
        r = b.copy()
        z = np.empty_like(b)
        q = np.empty_like(b)
        bnorm = 0.0
        for j in range(ny):
            for i in range(nx):
                bnorm += b[j, i] * b[j, i]
                x[j, i] = 0.0
        bnorm = np.sqrt(bnorm)
        if bnorm == 0.0:
            return 0, 0.0
        rz = 0.0
        for j in range(ny):
            for i in range(nx):
                z[j, i] = r[j, i] * dinv[j, i]
                rz += r[j, i] * z[j, i]
        p = z.copy()
        res = 1.0
        it = 0
        while it < maxiter:
            it += 1
            _apply_shifted_one(p, kx, ky, ihx2, ihy2, q)
            pq = 0.0
            for j in range(ny):
                for i in range(nx):
                    pq += p[j, i] * q[j, i]
            alpha = rz / pq
            rr = 0.0
            rz_new = 0.0
            for j in range(ny):
                for i in range(nx):
                    x[j, i] += alpha * p[j, i]
                    r[j, i] -= alpha * q[j, i]
                    rr += r[j, i] * r[j, i]
                    z[j, i] = r[j, i] * dinv[j, i]
                    rz_new += r[j, i] * z[j, i]
            res = np.sqrt(rr) / bnorm
            if res <= tol:
                break
            beta = rz_new / rz
            rz = rz_new
            for j in range(ny):
                for i in range(nx):
                    p[j, i] = z[j, i] + beta * p[j, i]
        return it, res

    @njit(cache=True, nogil=True, parallel=True)
    def _pcg_batch(b, x, dinv, kx, ky, ihx2, ihy2, tol, maxiter, iters, res):
        for s in prange(b.shape[0]):
            it, rs = _pcg_one(b[s], x[s], dinv, kx, ky, ihx2, ihy2, tol, maxiter)
            iters[s] = it
            res[s] = rs


def cg_solve_numba(rhs, kx, ky, ihx2, ihy2, tol=1e-10, maxiter=1000, x0=None):
    if not HAVE_NUMBA or x0 is not None:
        return cg_solve_numpy(rhs, kx, ky, ihx2, ihy2, tol, maxiter, x0)
    b = np.asarray(rhs, dtype=float)
    batched = b.ndim == 3
    b = np.ascontiguousarray(b if batched else b[None])
    kx = np.ascontiguousarray(kx, dtype=float)
    ky = np.ascontiguousarray(ky, dtype=float)
    dinv = np.ascontiguousarray(1.0 / shifted_diagonal(kx, ky, ihx2, ihy2))
    x = np.empty_like(b)
    iters = np.zeros(b.shape[0], dtype=np.int64)
    res = np.zeros(b.shape[0])
    _pcg_batch(b, x, dinv, kx, ky, float(ihx2), float(ihy2), float(tol), int(maxiter), iters, res)
    return (x if batched else x[0]), iters, res


def apply_shifted_numba(u, kx, ky, ihx2, ihy2) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not HAVE_NUMBA:
        return apply_shifted_numpy(u, kx, ky, ihx2, ihy2)
    kx = np.ascontiguousarray(kx, dtype=float)
    ky = np.ascontiguousarray(ky, dtype=float)
    flat = np.ascontiguousarray(u.reshape((-1,) + u.shape[-2:]))
    out = np.empty_like(flat)
    for s in range(flat.shape[0]):
        _apply_shifted_one(flat[s], kx, ky, float(ihx2), float(ihy2), out[s])
    return out.reshape(u.shape)


def cg_solve(rhs, kx, ky, ihx2, ihy2, tol=1e-10, maxiter=1000):
    if backend() == "numba":
        return cg_solve_numba(rhs, kx, ky, ihx2, ihy2, tol, maxiter)
    return cg_solve_numpy(rhs, kx, ky, ihx2, ihy2, tol, maxiter)


def apply_shifted(u, kx, ky, ihx2, ihy2) -> np.ndarray:
    if backend() == "numba":
        return apply_shifted_numba(u, kx, ky, ihx2, ihy2)
    return apply_shifted_numpy(u, kx, ky, ihx2, ihy2)
