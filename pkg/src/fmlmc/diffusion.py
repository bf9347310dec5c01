"""Diffusion-based simulators on periodic grids.

The operator ``A = (I - Lap)^{-q} W^{-1}`` is applied with ``q`` successive
solves. Its covariance ``L = A W A^T = (I - Lap)^{-m} W^{-1}`` with ``m = 2q``
has diagonal ``theta``; ``theta = E[(A X)^2]`` for ``X ~ N(0, W)``.

In 1D the length scale ``D`` is constant and ``K = D^2 / (2m - 3)``. In 2D
the length scales ``D11`` and ``D22`` live on cell faces and
``K_ii = D_ii^2 / (2m - 4)``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels, rng
from .grid import Level, Level1D, Level2D


class SolverError(RuntimeError):
    """A linear solve did not reach its tolerance."""


class SolveMethod(enum.Enum):
    DIRECT_BANDED = "direct"
    CONJUGATE_GRADIENT = "cg"


@dataclass(frozen=True)
class LinearSolveConfig:
    method: SolveMethod | None = None  # None picks by dimension
    tol: float = 1e-10
    maxiter: int | None = None

    def __post_init__(self):
        if not 0 < self.tol <= 1e-6:
            raise ValueError(f"CG tolerance must lie in (0, 1e-6], got {self.tol}")

    def iterations_for(self, n: int) -> int:
        floor = int(np.ceil(10 * np.sqrt(n)))
        return max(floor, self.maxiter or 0, 200)


def _check_m(m: int) -> int:
    if int(m) != m or m % 2 or m < 2:
        raise ValueError(f"smoothness exponent m must be a positive even integer, got {m!r}")
    return int(m)


@dataclass(frozen=True)
class DiffusionParams1D:
    D: float
    level: Level1D
    m: int = 10

    def __post_init__(self):
        _check_m(self.m)
        if self.m <= 1.5:
            raise ValueError("m must exceed d/2 + 1")
        if self.D < 0:
            raise ValueError(f"length scale must be nonnegative, got {self.D}")

    @property
    def q(self) -> int:
        return self.m // 2

    @property
    def kappa(self) -> float:
        return self.D**2 / (2 * self.m - 3)


@dataclass(frozen=True, eq=False)
class DiffusivityField2D:
    """Face length scales on a 2D level, each shaped ``(ny, nx)``.

    ``d11[j, i]`` sits on the left face of cell ``(i, j)`` and ``d22[j, i]`` on
    its bottom face.
    """

    d11: np.ndarray
    d22: np.ndarray
    level: Level2D

    def __post_init__(self):
        shape = self.level.shape
        for name in ("d11", "d22"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            if not np.all(v > 0):
                raise ValueError(f"{name} must be strictly positive")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def constant(cls, value: float, level: Level2D) -> "DiffusivityField2D":
        return cls(np.full(level.shape, float(value)), np.full(level.shape, float(value)), level)


@dataclass(frozen=True)
class GrfParams:
    """Gaussian random field ``zeta`` with mean ``mu`` and std ``mu / 5``."""

    mu: float
    lengthscale: float
    seed: int = 0
    sigma: float | None = None
    kernel: str = "squared-exponential"
    clamp_fraction: float = 0.1

    def __post_init__(self):
        if self.mu <= 0 or self.lengthscale <= 0:
            raise ValueError("GRF mean and length scale must be positive")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.mu / 5.0)
        if self.kernel != "squared-exponential":
            raise ValueError(f"unknown covariance kernel {self.kernel!r}")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


class Operator1D:
    """Constant-coefficient periodic 1D operator ``(I - Lap)`` and its factor ``A``."""

    dim = 1

    def __init__(self, params: DiffusionParams1D, solver: LinearSolveConfig | None = None):
        self.params = params
        self.level = params.level
        self.solver = solver or LinearSolveConfig()
        n = self.level.n
        r = params.kappa * n * n
        self._sub = np.full(n, -r)
        self._sup = np.full(n, -r)
        self._diag = np.full(n, 1.0 + 2.0 * r)
        self.kappa = params.kappa
        self.q = params.q
        self.m = params.m

    def laplacian(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        n = self.level.n
        return self.kappa * n * n * (np.roll(u, 1, axis=-1) - 2.0 * u + np.roll(u, -1, axis=-1))

    def solve_shifted(self, b) -> np.ndarray:
        return _kernels.cyclic_tridiag_solve(self._sub, self._diag, self._sup, b)

    def apply_A(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) / self.level.weight
        for _ in range(self.q):
            y = self.solve_shifted(y)
        return y

    def dense_shifted(self) -> np.ndarray:
        return np.eye(self.level.n) - self.laplacian(np.eye(self.level.n))

    def circulant_column(self) -> np.ndarray:
        """First column of ``(I - Lap)``, a symmetric circulant."""
        return self.dense_shifted()[:, 0].copy()


class Operator2D:
    """Heterogeneous periodic 2D operator ``(I - div K grad)`` and its factor ``A``."""

    dim = 2

    def __init__(self, field: DiffusivityField2D, m: int = 10, solver: LinearSolveConfig | None = None):
        self.m = _check_m(m)
        if self.m <= 2:
            raise ValueError("m must exceed d/2 + 1")
        self.q = self.m // 2
        self.field = field
        self.level = field.level
        self.solver = solver or LinearSolveConfig()
        c = 1.0 / (2 * self.m - 4)
        self.kx = np.ascontiguousarray(field.d11**2 * c)
        self.ky = np.ascontiguousarray(field.d22**2 * c)
        self.ihx2 = 1.0 / self.level.hx**2
        self.ihy2 = 1.0 / self.level.hy**2
        self.maxiter = self.solver.iterations_for(self.level.size)
        self.last_iterations = 0

    def _grid(self, u):
        u = np.asarray(u, dtype=float)
        return u.reshape(u.shape[:-1] + self.level.shape)

    def laplacian(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        g = self._grid(u)
        return (g - _kernels.apply_shifted(g, self.kx, self.ky, self.ihx2, self.ihy2)).reshape(u.shape)

    def solve_shifted(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        g = self._grid(b).reshape((-1,) + self.level.shape)
        x, iters, res = _kernels.cg_solve(g, self.kx, self.ky, self.ihx2, self.ihy2, self.solver.tol, self.maxiter)
        if res.size and np.max(res) > self.solver.tol:
            raise SolverError(
                f"CG on {self.level} stopped after {int(iters.max())} iterations "
                f"with relative residual {float(res.max()):.3e} (tolerance {self.solver.tol:.1e})"
            )
        self.last_iterations = int(iters.max()) if iters.size else 0
        return x.reshape(b.shape)

    def apply_A(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) / self.level.weight
        for _ in range(self.q):
            y = self.solve_shifted(y)
        return y

    def dense_shifted(self) -> np.ndarray:
        n = self.level.size
        return np.eye(n) - self.laplacian(np.eye(n))


def make_operator(level: Level, D=None, m: int = 10, field: DiffusivityField2D | None = None, solver=None):
    if isinstance(level, Level1D):
        return Operator1D(DiffusionParams1D(float(D), level, m), solver)
    if field is None:
        field = DiffusivityField2D.constant(float(D), level)
    return Operator2D(field, m, solver)


def apply_laplacian(u, level: Level, D=None, field: DiffusivityField2D | None = None, m: int = 10) -> np.ndarray:
    """Discrete periodic ``div(K grad u)`` with a constant or face-wise length scale."""
    if D is not None and D <= 0:
        raise ValueError("length scale must be positive")
    return make_operator(level, D=D, m=m, field=field).laplacian(u)


def apply_A(x, op) -> np.ndarray:
    return op.apply_A(x)


class Simulator:
    """Level simulator: ``x -> A x`` (linear) or ``x -> (A x)^2`` (squared)."""

    def __init__(self, op, mode: str = "linear"):
        if mode not in ("linear", "squared"):
            raise ValueError(f"simulator mode must be 'linear' or 'squared', got {mode!r}")
        self.op = op
        self.mode = mode
        self.level = op.level

    def __call__(self, x) -> np.ndarray:
        y = self.op.apply_A(x)
        if self.mode == "squared":
            y = y * y
        return y


def simulator_apply(x, op, mode: str = "linear") -> np.ndarray:
    return Simulator(op, mode)(x)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_input(level: Level, stream: rng.NormalStream, start: int = 0, count: int | None = None) -> np.ndarray:
    """Draws of ``X ~ N(0, W)`` on ``level``: ``sqrt(w) Z`` from the stream.

    Returns one field when ``count`` is None, else a ``(count, n)`` batch.
    """
    if stream.n != level.size:
        raise ValueError("stream length does not match the level size")
    z = stream.normals(start, 1 if count is None else count)
    x = np.sqrt(level.weight) * z
    return x[0] if count is None else x


def _periodic_gaussian_field(level: Level2D, params: GrfParams, gen: np.random.Generator) -> np.ndarray:
    nx, ny = level.nx, level.ny
    ix = np.arange(nx)
    iy = np.arange(ny)
    dx = np.minimum(ix, nx - ix) * level.hx
    dy = np.minimum(iy, ny - iy) * level.hy
    r2 = dy[:, None] ** 2 + dx[None, :] ** 2
    cov = params.sigma**2 * np.exp(-r2 / (2.0 * params.lengthscale**2))
    lam = np.clip(np.fft.fft2(cov).real, 0.0, None)
    xi = gen.standard_normal((ny, nx)) + 1j * gen.standard_normal((ny, nx))
    return np.fft.fft2(np.sqrt(lam / (nx * ny)) * xi).real


def sample_lengthscale_fields(params: GrfParams, level: Level2D) -> DiffusivityField2D:
    """Two independent realizations of ``zeta`` on the face lattices.

    Draws are clamped from below at ``clamp_fraction * mu``.
    """
    floor = params.clamp_fraction * params.mu
    out = []
    for orient in (0, 1):
        gen = rng.generator(params.seed, rng.LENGTHSCALE, orient)
        z = params.mu + _periodic_gaussian_field(level, params, gen)
        out.append(np.maximum(z, floor))
    return DiffusivityField2D(out[0], out[1], level)


def restrict_lengthscale(fine: DiffusivityField2D) -> DiffusivityField2D:
    """Average each coarse face from its two fine sub-faces."""
    coarse = fine.level.coarsen()
    d11 = 0.5 * (fine.d11[0::2, 0::2] + fine.d11[1::2, 0::2])
    d22 = 0.5 * (fine.d22[0::2, 0::2] + fine.d22[0::2, 1::2])
    return DiffusivityField2D(d11, d22, coarse)


def lengthscale_hierarchy(finest: DiffusivityField2D, depth: int) -> list:
    """Fields on ``depth`` levels, coarsest first."""
    fields = [finest]
    for _ in range(depth - 1):
        fields.append(restrict_lengthscale(fields[-1]))
    return fields[::-1]


# ---------------------------------------------------------------------------
# intrinsic variances
# ---------------------------------------------------------------------------


def exact_theta(op, cap: int = 16384, batch: int = 64) -> np.ndarray:
    """Diagonal of ``L = A W A^T`` by one ``A`` application per cell.

    ``A`` is symmetric, so ``(L e_k)_k = w ||A e_k||^2``.
    """
    n = op.level.size
    if n > cap:
        raise ValueError(f"exact theta needs {n} operator applications; cap is {cap}")
    w = op.level.weight
    theta = np.empty(n)
    for start in range(0, n, batch):
        stop = min(n, start + batch)
        e = np.zeros((stop - start, n))
        e[np.arange(stop - start), np.arange(start, stop)] = 1.0
        y = op.apply_A(e)
        theta[start:stop] = w * np.einsum("bk,bk->b", y, y)
    return theta


def normalization_coefficients(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta > 0):
        bad = int(np.flatnonzero(~(theta > 0))[0])
        raise ValueError(f"theta must be strictly positive; entry {bad} is {theta[bad]!r}")
    return theta**-0.5


# ---------------------------------------------------------------------------
# persistence of length-scale fields
# ---------------------------------------------------------------------------


def save_lengthscale(fld: DiffusivityField2D, path, fmt: str = "csv") -> None:
    """Write both orientations with a header naming level dims and orientation."""
    path = Path(path)
    meta = {"nx": fld.level.nx, "ny": fld.level.ny, "orientations": ["d11 (x faces)", "d22 (y faces)"]}
    if fmt == "csv":
        with path.open("w") as f:
            f.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            f.write("orientation,j,i,value\n")
            for tag, arr in (("d11", fld.d11), ("d22", fld.d22)):
                for j in range(fld.level.ny):
                    for i in range(fld.level.nx):
                        f.write(f"{tag},{j},{i},{float(arr[j, i])!r}\n")
    elif fmt == "binary":
        head = json.dumps(meta).encode()
        with path.open("wb") as f:
            f.write(len(head).to_bytes(4, "little"))
            f.write(head)
            f.write(np.ascontiguousarray(np.stack([fld.d11, fld.d22]), dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown field format {fmt!r}")


def load_lengthscale(path, fmt: str = "csv") -> DiffusivityField2D:
    path = Path(path)
    if fmt == "csv":
        with path.open() as f:
            meta = json.loads(f.readline()[2:])
            f.readline()
            lv = Level2D(meta["nx"], meta["ny"])
            arrs = {"d11": np.empty(lv.shape), "d22": np.empty(lv.shape)}
            for line in f:
                tag, j, i, v = line.strip().split(",")
                arrs[tag][int(j), int(i)] = float(v)
        return DiffusivityField2D(arrs["d11"], arrs["d22"], lv)
    if fmt == "binary":
        raw = path.read_bytes()
        size = int.from_bytes(raw[:4], "little")
        meta = json.loads(raw[4 : 4 + size])
        lv = Level2D(meta["nx"], meta["ny"])
        data = np.frombuffer(raw[4 + size :], dtype="<f8").reshape((2,) + lv.shape)
        return DiffusivityField2D(data[0].copy(), data[1].copy(), lv)
    raise ValueError(f"unknown field format {fmt!r}")
