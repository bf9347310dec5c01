import numpy as np
import pytest

from fmlmc import rng as frng
from fmlmc.diffusion import (
    DiffusionParams1D,
    DiffusivityField2D,
    GrfParams,
    Operator1D,
    Operator2D,
    Simulator,
    SolverError,
    apply_laplacian,
    exact_theta,
    lengthscale_hierarchy,
    load_lengthscale,
    make_operator,
    normalization_coefficients,
    restrict_lengthscale,
    sample_input,
    sample_lengthscale_fields,
    save_lengthscale,
)
from fmlmc.grid import Level1D, Level2D
from fmlmc.hartley import hartley_vector


def _dense(op):
    n = op.level.size
    return np.stack([op.apply_A(e) for e in np.eye(n)], axis=1)


def _laplacian_2d_loops(u, kx, ky, hx, hy):
    """Five-point flux form written cell by cell."""
    ny, nx = u.shape
    out = np.zeros_like(u)
    for j in range(ny):
        for i in range(nx):
            ip, jp = (i + 1) % nx, (j + 1) % ny
            im, jm = (i - 1) % nx, (j - 1) % ny
            out[j, i] = (kx[j, ip] * (u[j, ip] - u[j, i]) - kx[j, i] * (u[j, i] - u[j, im])) / hx**2
            out[j, i] += (ky[jp, i] * (u[jp, i] - u[j, i]) - ky[j, i] * (u[j, i] - u[jm, i])) / hy**2
    return out


def test_laplacian_kills_constants():
    np.testing.assert_allclose(apply_laplacian(np.ones(16), Level1D(16), D=0.1), 0, atol=1e-12)
    lv = Level2D(8, 4)
    fld = DiffusivityField2D(0.1 + np.random.default_rng(0).random(lv.shape), np.full(lv.shape, 0.2), lv)
    np.testing.assert_allclose(apply_laplacian(np.ones(32), lv, field=fld), 0, atol=1e-12)


def test_laplacian_1d_eigen():
    n, D = 16, 0.06
    op = Operator1D(DiffusionParams1D(D, Level1D(n)))
    for k in (1, 3, 8, 13):
        h = hartley_vector(n, k)
        lam = -4 * op.kappa * n**2 * np.sin(k * np.pi / n) ** 2
        np.testing.assert_allclose(op.laplacian(h), lam * h, atol=1e-12)


def test_laplacian_2d_matches_loops(rng):
    lv = Level2D(4, 2)
    op = make_operator(lv, D=1.0)
    u = np.zeros(lv.size)
    u[0] = 1.0
    got = op.laplacian(u).reshape(lv.shape)
    ref = _laplacian_2d_loops(u.reshape(lv.shape), op.kx, op.ky, lv.hx, lv.hy)
    np.testing.assert_allclose(got, ref, atol=1e-12)
    lv = Level2D(8, 4)
    fld = DiffusivityField2D(0.1 + rng.random(lv.shape), 0.1 + rng.random(lv.shape), lv)
    op = Operator2D(fld)
    u = rng.standard_normal(lv.shape)
    np.testing.assert_allclose(op.laplacian(u.ravel()).reshape(lv.shape),
                               _laplacian_2d_loops(u, op.kx, op.ky, lv.hx, lv.hy), atol=1e-10)


def test_zero_diffusion_gives_inverse_weight(rng):
    op = Operator1D(DiffusionParams1D(0.0, Level1D(8)))
    x = rng.standard_normal(8)
    np.testing.assert_allclose(op.apply_A(x), x * 8, rtol=1e-13)
    op2 = make_operator(Level2D(8, 4), D=1e-9)
    x = rng.standard_normal(32)
    np.testing.assert_allclose(op2.apply_A(x), x / Level2D(8, 4).weight, rtol=1e-9)


def test_apply_A_eigen_1d():
    n = 16
    op = Operator1D(DiffusionParams1D(0.06, Level1D(n)))
    Aref = np.linalg.matrix_power(np.linalg.inv(op.dense_shifted()), 5) / op.level.weight
    np.testing.assert_allclose(_dense(op), Aref, rtol=1e-10, atol=1e-12)
    for k in (0, 2, 7):
        h = hartley_vector(n, k)
        a = h @ Aref @ h / n
        np.testing.assert_allclose(op.apply_A(h), a * h, atol=1e-10)


def test_apply_A_linear(rng):
    lv = Level2D(16, 8)
    fld = DiffusivityField2D(0.05 + 0.1 * rng.random(lv.shape), 0.05 + 0.1 * rng.random(lv.shape), lv)
    op = Operator2D(fld)
    x, y = rng.standard_normal((2, lv.size))
    lhs = op.apply_A(2.0 * x - 3.0 * y)
    rhs = 2.0 * op.apply_A(x) - 3.0 * op.apply_A(y)
    assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(lhs)


def test_2d_operator_matches_dense(rng):
    lv = Level2D(8, 4)
    fld = DiffusivityField2D(0.1 + 0.2 * rng.random(lv.shape), 0.1 + 0.2 * rng.random(lv.shape), lv)
    op = Operator2D(fld)
    Aref = np.linalg.matrix_power(np.linalg.inv(op.dense_shifted()), 5) / lv.weight
    np.testing.assert_allclose(_dense(op), Aref, rtol=1e-7, atol=1e-9 * np.abs(Aref).max())


def test_simulator_modes(rng):
    op = Operator1D(DiffusionParams1D(0.06, Level1D(16)))
    sq = Simulator(op, "squared")
    np.testing.assert_array_equal(sq(np.zeros(16)), 0)
    assert np.all(sq(rng.standard_normal((4, 16))) >= 0)
    with pytest.raises(ValueError):
        Simulator(op, "cubic")


def test_solver_error(rng):
    lv = Level2D(16, 8)
    op = make_operator(lv, D=0.2)
    op.maxiter = 1
    with pytest.raises(SolverError, match="residual"):
        op.apply_A(rng.standard_normal(lv.size))


def test_sample_input_shape():
    lv = Level1D(8)
    s = frng.stream(0, frng.GENERIC, 0, 0, 8)
    assert sample_input(lv, s).shape == (8,)
    assert sample_input(lv, s, 0, 3).shape == (3, 8)
    with pytest.raises(ValueError):
        sample_input(Level1D(4), s)


def test_grf_properties():
    lv = Level2D(256, 128)
    flat = sample_lengthscale_fields(GrfParams(0.12, 0.2, seed=1, sigma=0.0), Level2D(16, 8))
    np.testing.assert_allclose(flat.d11, 0.12)
    p = GrfParams(0.12, 0.04, seed=3)
    f = sample_lengthscale_fields(p, lv)
    assert abs(f.d11.var() / p.sigma**2 - 1) < 0.25
    assert abs(f.d22.var() / p.sigma**2 - 1) < 0.25
    assert not np.allclose(f.d11, f.d22)
    assert f.d11.min() >= 0.1 * p.mu
    g = sample_lengthscale_fields(p, lv)
    np.testing.assert_array_equal(f.d11, g.d11)


def test_restrict_lengthscale():
    lv = Level2D(8, 4)
    c = restrict_lengthscale(DiffusivityField2D.constant(0.3, lv))
    np.testing.assert_allclose(c.d11, 0.3)
    assert c.level == Level2D(4, 2)
    x = np.arange(8, dtype=float)[None, :] * np.ones((4, 1)) + 1
    y = np.arange(4, dtype=float)[:, None] * np.ones((1, 8)) + 1
    c = restrict_lengthscale(DiffusivityField2D(y, x, lv))
    np.testing.assert_allclose(c.d11, (y[0::2, 0::2] + y[1::2, 0::2]) / 2)
    np.testing.assert_allclose(c.d11[:, 0], [1.5, 3.5])
    np.testing.assert_allclose(c.d22[0], [1.5, 3.5, 5.5, 7.5])
    big = DiffusivityField2D.constant(0.2, Level2D(16, 8))
    h = lengthscale_hierarchy(big, 3)
    assert [f.level for f in h] == [Level2D(4, 2), Level2D(8, 4), Level2D(16, 8)]


def test_theta_constant_1d():
    op = Operator1D(DiffusionParams1D(0.06, Level1D(32)))
    t = exact_theta(op)
    np.testing.assert_allclose(t, t[0], rtol=1e-12)


@pytest.mark.parametrize("level", [Level1D(16), Level2D(8, 4)])
def test_theta_matches_factorization(level, rng):
    if level.dim == 1:
        op = Operator1D(DiffusionParams1D(0.06, level))
    else:
        op = Operator2D(DiffusivityField2D(0.1 + 0.2 * rng.random(level.shape), 0.1 + 0.2 * rng.random(level.shape), level))
    A = _dense(op)
    Lmat = np.linalg.matrix_power(np.linalg.inv(op.dense_shifted()), 10) / level.weight
    np.testing.assert_allclose(A @ (level.weight * A.T), Lmat, rtol=1e-7, atol=1e-9 * np.abs(Lmat).max())
    np.testing.assert_allclose(exact_theta(op), np.diag(Lmat), rtol=1e-7)


def test_theta_monte_carlo():
    lv = Level1D(32)
    op = Operator1D(DiffusionParams1D(0.06, lv))
    x = sample_input(lv, frng.stream(2, frng.GENERIC, 0, 0, 32), 0, 100_000)
    y2 = op.apply_A(x) ** 2
    se = y2.std(axis=0, ddof=1) / np.sqrt(len(y2))
    assert np.all(np.abs(y2.mean(axis=0) - exact_theta(op)) < 3 * se * 1.5)


def test_theta_cap():
    with pytest.raises(ValueError, match="cap"):
        exact_theta(make_operator(Level2D(8, 4), D=0.1), cap=16)


def test_normalization_coefficients():
    np.testing.assert_allclose(normalization_coefficients(np.ones(4)), 1.0)
    np.testing.assert_allclose(normalization_coefficients(np.full(4, 4.0)), 0.5)
    with pytest.raises(ValueError):
        normalization_coefficients([1.0, 0.0])


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_lengthscale_round_trip(tmp_path, fmt):
    f = sample_lengthscale_fields(GrfParams(0.12, 0.2, seed=4), Level2D(16, 8))
    save_lengthscale(f, tmp_path / "ls", fmt)
    g = load_lengthscale(tmp_path / "ls", fmt)
    np.testing.assert_array_equal(f.d11, g.d11)
    np.testing.assert_array_equal(f.d22, g.d22)
    assert g.level == f.level
