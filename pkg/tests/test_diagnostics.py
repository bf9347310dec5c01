import numpy as np
import pytest

from fmlmc.diagnostics import (
    mse_decompose,
    spectral_variance,
    spectral_variance_1d,
    spectral_variance_2d,
    total_variance,
    unsort_modes,
)
from fmlmc.grid import Level1D, Level2D
from fmlmc.hartley import frequency_order, hartley_vector


def test_identical_ensemble():
    e = np.tile(np.arange(8.0), (5, 1))
    d = spectral_variance_1d(e)
    np.testing.assert_allclose(d.nu, 0, atol=1e-20)
    d2 = spectral_variance_2d(np.tile(np.arange(32.0), (3, 1)), Level2D(8, 4))
    np.testing.assert_allclose(d2.nu, 0, atol=1e-20)


def test_plus_minus_constant_mode():
    v = hartley_vector(16, 0)
    d = spectral_variance_1d(np.stack([v, -v]))
    assert np.isclose(d.nu[0], 2.0)
    np.testing.assert_allclose(d.nu[1:], 0, atol=1e-20)


def test_parseval_1d(rng):
    e = rng.standard_normal((20, 32))
    d = spectral_variance_1d(e)
    assert np.isclose(d.total, total_variance(e, Level1D(32)), rtol=1e-10)
    assert np.all(np.diff(d.nu_cml) >= 0)


def test_frequency_ordering(rng):
    # a pure mode k lands at position frequency_order^-1(k)
    n = 16
    v = hartley_vector(n, 13)
    d = spectral_variance_1d(np.stack([v, -v]))
    assert int(np.argmax(d.nu)) == int(np.flatnonzero(frequency_order(n) == 13)[0])
    np.testing.assert_allclose(unsort_modes(d.nu, n)[13], d.nu.max())


def test_parseval_2d(rng):
    lv = Level2D(16, 8)
    e = rng.standard_normal((12, lv.size))
    d = spectral_variance(e, lv)
    assert np.isclose(d.total, total_variance(e, lv), rtol=1e-10)
    assert np.isclose(d.nu_cml[-1], d.total, rtol=1e-12)
    assert np.all(np.diff(d.nu_cml) >= 0)
    p = spectral_variance(e, lv, normalization="doubled")
    np.testing.assert_allclose(p.nu, 2 * d.nu)
    with pytest.raises(ValueError):
        spectral_variance(e, lv, normalization="other")


def test_reference_uses_mean_square(rng):
    e = rng.standard_normal((10, 8))
    d = spectral_variance_1d(e, reference=np.zeros(8))
    assert np.isclose(d.total, (e**2).sum() / 8 / 10)


def test_mse_decompose(rng):
    lv = Level1D(8)
    t = rng.standard_normal(8)
    assert mse_decompose(np.stack([t, t, t]), t, lv)[:2] == (0.0, 0.0)
    v = rng.standard_normal(8)
    var, bias, mse = mse_decompose(np.stack([t + v, t - v]), t, lv)
    assert np.isclose(var, 2 * lv.weight * v @ v) and np.isclose(bias, 0, atol=1e-30)
    e = t + rng.standard_normal((50, 8))
    var, bias, mse = mse_decompose(e, t, lv)
    assert np.isclose(mse, 49 / 50 * var + bias)


def test_bias_shrinks_for_unbiased_ensemble(rng):
    lv = Level1D(16)
    t = np.zeros(16)
    e = rng.standard_normal((500, 16))
    var, bias, _ = mse_decompose(e, t, lv)
    # E[bias] = var / R with a chi-square spread; 3 sigma band
    assert bias < var / 500 * (1 + 3 * np.sqrt(2 / 16))
