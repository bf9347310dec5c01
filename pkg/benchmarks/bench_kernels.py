"""Compare the numba and numpy backends on the hot kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--threads N]

Numba compile time is excluded by a warm-up call. Each row reports the best
of ``--repeat`` wall-clock timings and the max abs difference between the
two backends' outputs.
"""

import argparse
import time

import numpy as np

from fmlmc import _kernels
from fmlmc.diffusion import GrfParams, Operator1D, Operator2D, DiffusionParams1D, sample_lengthscale_fields
from fmlmc.grid import Level1D, Level2D


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    n = 512
    op1 = Operator1D(DiffusionParams1D(0.06, Level1D(n)))
    rhs1 = rng.standard_normal((256, n))
    yield "cyclic tridiagonal, 256 x 512", {
        "numpy": lambda: _kernels.cyclic_tridiag_solve_numpy(op1._sub, op1._diag, op1._sup, rhs1),
        "numba": lambda: _kernels.cyclic_tridiag_solve_numba(op1._sub, op1._diag, op1._sup, rhs1),
    }

    lv = Level2D(128, 64)
    op2 = Operator2D(sample_lengthscale_fields(GrfParams(0.12, 0.2, seed=1), lv))
    u = rng.standard_normal((16,) + lv.shape)
    args = (op2.kx, op2.ky, op2.ihx2, op2.ihy2)
    yield "shifted operator, 16 x 128x64", {
        "numpy": lambda: _kernels.apply_shifted_numpy(u, *args),
        "numba": lambda: _kernels.apply_shifted_numba(u, *args),
    }
    b = rng.standard_normal((8,) + lv.shape)
    yield "Jacobi-PCG, 8 x 128x64", {
        "numpy": lambda: _kernels.cg_solve_numpy(b, *args, tol=1e-10, maxiter=op2.maxiter)[0],
        "numba": lambda: _kernels.cg_solve_numba(b, *args, tol=1e-10, maxiter=op2.maxiter)[0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    _kernels.set_threads(args.threads)
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fns in cases(rng):
        tn, outn = best_of(fns["numpy"], args.repeat)
        tb, outb = best_of(fns["numba"], args.repeat)
        diff = float(np.max(np.abs(outn - outb)))
        print(f"{name:34s} {1e3 * tn:11.2f} {1e3 * tb:11.2f} {tn / tb:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
